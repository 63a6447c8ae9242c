use std::sync::Arc;

use super::cas::CasDemo;
use super::faulty::{AbortIgnoringSpinner, DeadlockingPair, DoubleWinner, WaitsForPeer};
use super::name_decide::NameDecide;
use super::peterson::PetersonTree;
use crate::model::Algorithm;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown subject `{0}`")]
    Unknown(String),
    #[error("subject `{name}` does not support n = {n}")]
    BadSize { name: String, n: usize },
}

/// Subject names accepted by [`subject`].
pub const SUBJECTS: &[&str] = &[
    "le2",
    "tournament",
    "tournament-doorway",
    "name-decide",
    "cas-demo",
    "cas-contended",
    "double-winner",
    "abort-ignoring-spinner",
    "deadlocking-pair",
    "waits-for-peer",
];

pub fn subject(name: &str, n: usize) -> Result<Arc<dyn Algorithm>, RegistryError> {
    let fixed = |want: usize| {
        if n == want {
            Ok(())
        } else {
            Err(RegistryError::BadSize { name: name.to_string(), n })
        }
    };
    if !SUBJECTS.contains(&name) {
        return Err(RegistryError::Unknown(name.to_string()));
    }
    if n < 2 {
        return Err(RegistryError::BadSize { name: name.to_string(), n });
    }
    Ok(match name {
        "le2" => {
            fixed(2)?;
            Arc::new(PetersonTree::le2())
        }
        "tournament" => Arc::new(PetersonTree::tournament(n)),
        "tournament-doorway" => Arc::new(PetersonTree::tournament_doorway(n)),
        "name-decide" => Arc::new(NameDecide::new(n)),
        "cas-demo" | "cas-contended" => Arc::new(cas_demo(name, n).expect("cas subject")),
        "double-winner" => Arc::new(DoubleWinner { n }),
        "abort-ignoring-spinner" => Arc::new(AbortIgnoringSpinner { n }),
        "deadlocking-pair" => {
            fixed(2)?;
            Arc::new(DeadlockingPair)
        }
        _ => {
            fixed(2)?;
            Arc::new(WaitsForPeer)
        }
    })
}

/// The concrete CAS subject behind a registered name, for history checks.
pub fn cas_demo(name: &str, n: usize) -> Option<CasDemo> {
    match name {
        "cas-demo" if n >= 2 => Some(CasDemo::default_mix(n)),
        "cas-contended" if n >= 2 => Some(CasDemo::contended(n)),
        _ => None,
    }
}

/// The natural system size of fixed-size subjects.
pub fn default_n(name: &str) -> Option<usize> {
    match name {
        "le2" | "deadlocking-pair" | "waits-for-peer" => Some(2),
        _ => None,
    }
}
