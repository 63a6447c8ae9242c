use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::ProcessId;

/// Why an edge `p → q` exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeRule {
    /// `p` knows `q` after the one-shot execution.
    Know,
    /// `q` wrote into `p`'s segment or one of `p`'s cached registers.
    Overwrite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuranMode {
    #[default]
    Greedy,
    Exact,
}

/// Largest graph the exact solver accepts; bigger ones fall back to greedy.
pub const EXACT_LIMIT: usize = 64;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConflictGraph {
    pub vertices: BTreeSet<ProcessId>,
    pub edges: BTreeSet<(ProcessId, ProcessId, EdgeRule)>,
}

impl ConflictGraph {
    pub fn new(vertices: BTreeSet<ProcessId>) -> Self {
        ConflictGraph { vertices, edges: BTreeSet::new() }
    }

    /// Adds `p → q`; self-loops and endpoints outside the graph are ignored.
    pub fn add(&mut self, p: ProcessId, q: ProcessId, rule: EdgeRule) {
        if p != q && self.vertices.contains(&p) && self.vertices.contains(&q) {
            self.edges.insert((p, q, rule));
        }
    }

    pub fn count(&self, rule: EdgeRule) -> usize {
        self.edges.iter().filter(|e| e.2 == rule).count()
    }

    /// Edges with direction and rule forgotten.
    pub fn undirected(&self) -> BTreeSet<(ProcessId, ProcessId)> {
        self.edges.iter().map(|&(p, q, _)| if p < q { (p, q) } else { (q, p) }).collect()
    }

    pub fn average_degree(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        2.0 * self.undirected().len() as f64 / self.vertices.len() as f64
    }

    /// The size every independent set search must reach: `m / (d + 1)`.
    pub fn turan_bound(&self) -> f64 {
        self.vertices.len() as f64 / (self.average_degree() + 1.0)
    }

    fn adjacency(&self) -> BTreeMap<ProcessId, BTreeSet<ProcessId>> {
        let mut adj: BTreeMap<ProcessId, BTreeSet<ProcessId>> =
            self.vertices.iter().map(|&v| (v, BTreeSet::new())).collect();
        for (p, q) in self.undirected() {
            adj.entry(p).or_default().insert(q);
            adj.entry(q).or_default().insert(p);
        }
        adj
    }

    pub fn independent_set(&self, mode: TuranMode) -> BTreeSet<ProcessId> {
        match mode {
            TuranMode::Exact if self.vertices.len() <= EXACT_LIMIT => self.exact(),
            _ => self.greedy(),
        }
    }

    /// Repeatedly takes a vertex of minimum remaining degree (lowest id on
    /// ties) and deletes it with its neighbours.
    pub fn greedy(&self) -> BTreeSet<ProcessId> {
        let mut adj = self.adjacency();
        let mut out = BTreeSet::new();
        while let Some((&v, _)) = adj.iter().min_by_key(|(&v, ns)| (ns.len(), v)) {
            out.insert(v);
            let mut gone = adj.remove(&v).unwrap_or_default();
            gone.insert(v);
            for u in &gone {
                adj.remove(u);
            }
            for ns in adj.values_mut() {
                ns.retain(|u| !gone.contains(u));
            }
        }
        out
    }

    /// A maximum independent set by branching on a vertex of largest degree.
    pub fn exact(&self) -> BTreeSet<ProcessId> {
        let verts: Vec<ProcessId> = self.vertices.iter().copied().collect();
        let index: BTreeMap<ProcessId, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut nbr = vec![0u64; verts.len()];
        for (p, q) in self.undirected() {
            nbr[index[&p]] |= 1 << index[&q];
            nbr[index[&q]] |= 1 << index[&p];
        }
        let all = if verts.len() == 64 { u64::MAX } else { (1u64 << verts.len()) - 1 };
        let best = mis(&nbr, all);
        (0..verts.len()).filter(|&i| best & (1 << i) != 0).map(|i| verts[i]).collect()
    }
}

fn mis(nbr: &[u64], live: u64) -> u64 {
    if live == 0 {
        return 0;
    }
    let mut pick = None;
    let mut deg_max = 0;
    let mut rest = live;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let d = (nbr[i] & live).count_ones();
        if d > deg_max {
            deg_max = d;
            pick = Some(i);
        }
    }
    let Some(v) = pick else {
        return live;
    };
    let bit = 1u64 << v;
    let with = bit | mis(nbr, live & !bit & !nbr[v]);
    let without = mis(nbr, live & !bit);
    if with.count_ones() >= without.count_ones() {
        with
    } else {
        without
    }
}
