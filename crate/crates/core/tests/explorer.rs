use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rmrlab_core::explorer::checkers::round_robin;
use rmrlab_core::explorer::linearizability::{max_rmr_exhaustive, name_decide_violation};
use rmrlab_core::explorer::valency::{find_long_run, has_nonterminating_run};
use rmrlab_core::explorer::*;
use rmrlab_core::model::*;
use rmrlab_core::objects::cas::history;
use rmrlab_core::objects::faulty::{AbortIgnoringSpinner, DeadlockingPair, DoubleWinner, WaitsForPeer};
use rmrlab_core::objects::*;

fn p(i: u32) -> ProcessId {
    ProcessId(i)
}

fn le2() -> Model {
    Model::new(Arc::new(PetersonTree::le2()))
}

fn budget() -> ExplorationBudget {
    ExplorationBudget::depth(40)
}

/// Random schedule of `a` and `b` from `c` until both return, with optional
/// single aborts.
fn random_pair_run(model: &Model, c: &Configuration, a: ProcessId, b: ProcessId, aborts: bool, rng: &mut ChaCha8Rng) -> Configuration {
    let mut x = c.clone();
    for _ in 0..10_000 {
        if x.proc(a).is_returned() && x.proc(b).is_returned() {
            break;
        }
        let q = if rng.gen_bool(0.5) { a } else { b };
        if x.proc(q).is_returned() {
            continue;
        }
        let item = if aborts && !x.proc(q).aborted && rng.gen_bool(0.1) { ScheduleItem::Abort(q) } else { ScheduleItem::Step(q) };
        model.step(&mut x, item).unwrap();
    }
    x
}

#[test]
fn le2_abort_free_vectors_and_strong_bivalence() {
    let m = le2();
    let c = classify_bivalence(&m, &m.initial(), p(0), p(1), AbortMode::AbortFree, budget()).unwrap();
    assert!(c.outcomes.complete);
    assert!(c.outcomes.is_exactly(&[OutcomeVector::WIN_LOSE, OutcomeVector::LOSE_WIN]));
    assert_eq!(c.class, Bivalence::StronglyBivalent);
    assert_eq!((c.solo_a, c.solo_b), (Some(Ret::Win), Some(Ret::Win)));
}

#[test]
fn outcome_witnesses_replay_to_their_vectors() {
    let m = le2();
    let start = m.initial();
    for mode in [AbortMode::AbortFree, AbortMode::WithAborts] {
        let set = outcome_vectors(&m, &start, p(0), p(1), mode, budget()).unwrap();
        for (v, w) in &set.vectors {
            let (x, _) = m.apply(&start, w).unwrap();
            assert_eq!(x.status(p(0)).ret(), Some(v.a));
            assert_eq!(x.status(p(1)).ret(), Some(v.b));
            if mode == AbortMode::AbortFree {
                assert!(w.aborted().is_empty());
            }
        }
    }
}

#[test]
fn random_runs_stay_inside_the_explored_outcome_set() {
    let m = le2();
    let start = m.initial();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (mode, aborts) in [(AbortMode::AbortFree, false), (AbortMode::WithAborts, true)] {
        let set = outcome_vectors(&m, &start, p(0), p(1), mode, budget()).unwrap();
        assert!(set.complete);
        let mut seen = BTreeSet::new();
        for _ in 0..2000 {
            let x = random_pair_run(&m, &start, p(0), p(1), aborts, &mut rng);
            let v = OutcomeVector { a: x.status(p(0)).ret().unwrap(), b: x.status(p(1)).ret().unwrap() };
            assert!(set.contains(v), "{v:?} reached by {} but not explored", x.lineage());
            seen.insert(v);
        }
        assert_eq!(seen.len(), set.vectors.len());
    }
}

#[test]
fn with_aborts_adds_lose_lose_only() {
    let m = le2();
    let set = outcome_vectors(&m, &m.initial(), p(0), p(1), AbortMode::WithAborts, budget()).unwrap();
    assert!(set.is_exactly(&[OutcomeVector::WIN_LOSE, OutcomeVector::LOSE_WIN, OutcomeVector::LOSE_LOSE]));
}

#[test]
fn both_lose_found_from_the_initial_state() {
    let m = le2();
    let start = m.initial();
    let found = find_both_lose(&m, &start, p(0), p(1), ExplorationBudget::depth(60)).unwrap();
    let s = found.schedule.expect("both-lose schedule");
    let (x, _) = m.apply(&start, &s).unwrap();
    assert_eq!(x.status(p(0)).ret(), Some(Ret::Lose));
    assert_eq!(x.status(p(1)).ret(), Some(Ret::Lose));
    assert!(s.procs().is_subset(&[p(0), p(1)].into()));
}

#[test]
fn both_lose_rejects_a_process_that_already_lost() {
    let m = le2();
    let won = m.run(&Schedule::solo(p(0), 50)).unwrap();
    let lost = m.apply(&won, &Schedule::solo(p(1), 200)).unwrap().0;
    assert_eq!(lost.status(p(1)).ret(), Some(Ret::Lose));
    let e = find_both_lose(&m, &lost, p(0), p(1), budget()).unwrap_err();
    assert!(matches!(e, BothLoseError::PreconditionViolated(_)));
    let mut aborted = m.initial();
    m.step(&mut aborted, ScheduleItem::Abort(p(1))).unwrap();
    let e = find_both_lose(&m, &aborted, p(0), p(1), budget()).unwrap_err();
    assert!(matches!(e, BothLoseError::PreconditionViolated(_)));
}

#[test]
fn safety_checker_on_examples() {
    assert!(check_le_safety_exhaustive(&le2(), budget()).unwrap().is_pass());
    let bad = Model::new(Arc::new(DoubleWinner { n: 2 }));
    let v = check_le_safety_exhaustive(&bad, budget()).unwrap();
    let w = v.witness().expect("double winner is caught").clone();
    let x = bad.run(&w).unwrap();
    assert!(le_safety_violation(&x).is_some());
}

#[test]
fn single_configuration_safety_clauses() {
    let m = le2();
    assert!(check_le_safety(&m.initial()).is_pass());
    let both_abort = m.run(&"p0! p1!".parse().unwrap()).unwrap();
    let x = m.apply(&both_abort, &round_robin(2, 60)).unwrap().0;
    assert!(x.all_returned());
    assert!(check_le_safety(&x).is_pass());
}

#[test]
fn bounded_abort_checker() {
    assert!(check_bounded_abort(&le2(), 20, budget()).unwrap().is_pass());
    let spinner = Model::new(Arc::new(AbortIgnoringSpinner { n: 2 }));
    let v = check_bounded_abort(&spinner, 20, budget()).unwrap();
    let w = v.witness().expect("spinner ignores its abort").clone();
    let x = spinner.run(&w).unwrap();
    assert!(x.processes().any(|q| x.proc(q).aborted && !x.proc(q).is_returned() && x.proc(q).steps_since_abort >= 20));
    assert!(check_bounded_abort(&le2(), 0, budget()).unwrap().is_fail());
}

#[test]
fn deadlock_checker() {
    let opts = FairnessOptions::for_system(4);
    let t4 = Model::new(Arc::new(PetersonTree::tournament(4)));
    assert!(check_deadlock_freedom(&t4, opts).unwrap().is_pass());
    let dead = Model::new(Arc::new(DeadlockingPair));
    let v = check_deadlock_freedom(&dead, FairnessOptions::for_system(2)).unwrap();
    assert!(v.is_fail());
    let w = v.witness().unwrap().clone();
    let x = dead.run(&w).unwrap();
    assert!(x.processes().any(|q| !x.proc(q).is_returned()));
    let waits = Model::new(Arc::new(WaitsForPeer));
    assert!(check_deadlock_freedom(&waits, FairnessOptions::for_system(2)).unwrap().is_pass());
}

#[test]
fn waits_for_peer_starves_in_a_solo_run() {
    let m = Model::new(Arc::new(WaitsForPeer));
    let solo = solo_run(&m, &m.initial(), p(1), 500).unwrap();
    assert_eq!(solo.ret, None);
    assert!(find_long_run(&m, &m.initial(), p(1), 50, ExplorationBudget::depth(60)).unwrap().is_some());
}

#[test]
fn deadlocking_pair_has_an_infinite_pair_run() {
    let dead = Model::new(Arc::new(DeadlockingPair));
    let r = has_nonterminating_run(&dead, &dead.initial(), p(0), p(1), AbortMode::AbortFree, 100_000).unwrap();
    assert_eq!(r, Some(true));
}

fn brute_force_linearizable(h: &[CasRecord], initial: i64) -> bool {
    let ops: Vec<&CasRecord> = h.iter().filter(|r| r.result != Some(Ret::Bottom)).collect();
    let pending: Vec<usize> = (0..ops.len()).filter(|&i| !ops[i].is_complete()).collect();
    // Every subset of pending operations, every permutation of the chosen set.
    for mask in 0..(1u32 << pending.len()) {
        let chosen: Vec<usize> = (0..ops.len())
            .filter(|&i| ops[i].is_complete() || pending.iter().position(|&j| j == i).is_some_and(|k| mask & (1 << k) != 0))
            .collect();
        if permutations(&chosen).into_iter().any(|order| legal(&ops, &order, initial)) {
            return true;
        }
    }
    false
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn legal(ops: &[&CasRecord], order: &[usize], initial: i64) -> bool {
    for (x, &i) in order.iter().enumerate() {
        for &j in &order[x + 1..] {
            if ops[j].resp.is_some_and(|r| r < ops[i].inv) {
                return false;
            }
        }
    }
    let mut v = initial;
    for &i in order {
        let result = v;
        if let CasOp::Cas { cmp, new } = ops[i].op {
            if v == cmp {
                v = new;
            }
        }
        if let Some(r) = ops[i].result {
            if r != Ret::Value(result) {
                return false;
            }
        }
    }
    true
}

fn arb_record() -> impl Strategy<Value = CasRecord> {
    let op = prop_oneof![Just(CasOp::Read), (0i64..3, 0i64..3).prop_map(|(cmp, new)| CasOp::Cas { cmp, new })];
    let result = prop_oneof![Just(None), Just(Some(Ret::Bottom)), (0i64..3).prop_map(|v| Some(Ret::Value(v)))];
    (op, 0u64..10, proptest::option::of(0u64..8), result).prop_map(|(op, inv, len, result)| {
        let resp = result.map(|_| inv + len.unwrap_or(0));
        CasRecord { process: ProcessId(0), op, inv, resp, result }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]
    #[test]
    fn linearizability_checker_agrees_with_brute_force(h in proptest::collection::vec(arb_record(), 0..5)) {
        let fast = check_linearizable_cas(&h, 0).unwrap();
        prop_assert_eq!(fast.is_some(), brute_force_linearizable(&h, 0));
        if let Some(order) = fast {
            let ops: Vec<&CasRecord> = order.iter().map(|&i| &h[i]).collect();
            let idx: Vec<usize> = (0..ops.len()).collect();
            prop_assert!(legal(&ops, &idx, 0));
        }
    }
}

#[test]
fn sequential_and_concurrent_cas_histories() {
    let seq = [
        CasRecord { process: p(0), op: CasOp::Cas { cmp: 0, new: 1 }, inv: 0, resp: Some(1), result: Some(Ret::Value(0)) },
        CasRecord { process: p(1), op: CasOp::Read, inv: 2, resp: Some(3), result: Some(Ret::Value(1)) },
    ];
    assert!(check_linearizable_cas(&seq, 0).unwrap().is_some());
    let both_init = [
        CasRecord { process: p(0), op: CasOp::Cas { cmp: 0, new: 1 }, inv: 0, resp: Some(5), result: Some(Ret::Value(0)) },
        CasRecord { process: p(1), op: CasOp::Cas { cmp: 0, new: 2 }, inv: 1, resp: Some(6), result: Some(Ret::Value(1)) },
    ];
    assert!(check_linearizable_cas(&both_init, 0).unwrap().is_some());
    let forged = [
        CasRecord { process: p(0), op: CasOp::Cas { cmp: 0, new: 1 }, inv: 0, resp: Some(1), result: Some(Ret::Value(0)) },
        CasRecord { process: p(1), op: CasOp::Read, inv: 2, resp: Some(3), result: Some(Ret::Value(0)) },
    ];
    assert!(check_linearizable_cas(&forged, 0).unwrap().is_none());
}

#[test]
fn contended_cas_is_linearizable_exhaustively() {
    for n in [2, 3] {
        let alg = CasDemo::contended(n);
        let m = Model::new(Arc::new(alg.clone()));
        let r = explore_cas(&m, &alg, budget()).unwrap();
        assert!(r.complete, "n = {n}");
        assert_eq!(r.verdict, Some(Verdict::Pass), "n = {n}");
        assert!(r.histories > 0);
    }
}

#[test]
fn chained_cas_mix_has_a_replayable_non_linearizable_history() {
    let alg = CasDemo::default_mix(3);
    let m = Model::new(Arc::new(alg.clone()));
    let r = explore_cas(&m, &alg, budget()).unwrap();
    let w = r.verdict.as_ref().and_then(Verdict::witness).expect("counterexample").clone();
    let x = m.run(&w).unwrap();
    let h = history(&alg, &x);
    assert!(check_linearizable_cas(&h, 0).unwrap().is_none());
    assert!(!brute_force_linearizable(&h, 0));
}

#[test]
fn cas_rmr_stays_constant_as_n_grows() {
    let mut maxima = Vec::new();
    for n in [2usize, 4, 8] {
        let m = Model::new(Arc::new(CasDemo::default_mix(n)));
        let (max, complete, _) = max_rmr_exhaustive(&m, &[p(0), p(1)], budget()).unwrap();
        assert!(complete);
        maxima.push(max);
    }
    assert!(maxima.windows(2).all(|w| w[0] == w[1]), "{maxima:?}");
}

#[test]
fn name_decide_explores_without_violations() {
    let m = Model::new(Arc::new(NameDecide::new(3)));
    let r = explore_name_decide(&m, budget()).unwrap();
    assert!(r.complete);
    assert!(r.violations.is_empty());
    assert!(r.finished > 0);
}

#[test]
fn name_decide_oracle_flags_disagreement() {
    let m = Model::new(Arc::new(NameDecide::new(2)));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let x = random_pair_run(&m, &m.initial(), p(0), p(1), true, &mut rng);
        assert_eq!(name_decide_violation(&x), None, "{}", x.lineage());
        let decided: BTreeSet<i64> = x
            .processes()
            .filter_map(|q| match x.status(q).ret() {
                Some(Ret::Value(v)) => Some(v),
                _ => None,
            })
            .collect();
        assert!(decided.len() <= 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]
    /// After any abort-free prefix, every completion elects exactly one of
    /// the pair.
    #[test]
    fn abort_free_random_prefixes_keep_le2_outcomes_exclusive(seed in any::<u64>(), len in 0usize..12) {
        let m = le2();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = m.initial();
        for _ in 0..len {
            let q = p(rng.gen_range(0..2));
            if !c.proc(q).is_returned() {
                m.step(&mut c, ScheduleItem::Step(q)).unwrap();
            }
        }
        let set = outcome_vectors(&m, &c, p(0), p(1), AbortMode::AbortFree, budget()).unwrap();
        prop_assert!(set.complete);
        prop_assert!(!set.vectors.is_empty());
        for v in set.vectors.keys() {
            prop_assert!(*v == OutcomeVector::WIN_LOSE || *v == OutcomeVector::LOSE_WIN);
        }
    }
}

fn bivalent(m: &Model, c: &Configuration, a: ProcessId, b: ProcessId) -> Option<bool> {
    let set = outcome_vectors(m, c, a, b, AbortMode::AbortFree, budget()).unwrap();
    set.complete.then(|| set.is_exactly(&[OutcomeVector::WIN_LOSE, OutcomeVector::LOSE_WIN]))
}

/// From a bivalent configuration, one of the two single steps stays
/// bivalent or some pair-only run never terminates.
#[test]
fn bivalent_configurations_extend_or_run_forever() {
    let le2 = le2();
    let t4 = Model::new(Arc::new(PetersonTree::tournament(4)));
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut checked = 0;
    for (m, a, b) in [(&le2, p(0), p(1)), (&t4, p(0), p(1)), (&t4, p(1), p(3))] {
        for _ in 0..150 {
            let mut c = m.initial();
            for _ in 0..rng.gen_range(0..16) {
                let q = if rng.gen_bool(0.5) { a } else { b };
                m.step(&mut c, ScheduleItem::Step(q)).unwrap();
            }
            if bivalent(m, &c, a, b) != Some(true) {
                continue;
            }
            checked += 1;
            let next = |q| m.apply(&c, &Schedule::solo(q, 1)).unwrap().0;
            let extends = bivalent(m, &next(a), a, b) == Some(true) || bivalent(m, &next(b), a, b) == Some(true);
            let forever = has_nonterminating_run(m, &c, a, b, AbortMode::AbortFree, 1_000_000).unwrap() == Some(true);
            assert!(extends || forever, "{}", c.lineage());
        }
    }
    assert!(checked > 50, "only {checked} bivalent samples");
}

#[test]
fn each_le2_process_can_be_kept_running() {
    let m = le2();
    for q in [p(0), p(1)] {
        for bound in [5, 10, 20, 40] {
            let w = find_long_run(&m, &m.initial(), q, bound, ExplorationBudget::depth(120)).unwrap();
            let w = w.unwrap_or_else(|| panic!("{q} always returns within {bound} steps"));
            let x = m.run(&w).unwrap();
            assert!(!x.proc(q).is_returned() && x.proc(q).steps > bound);
        }
    }
}

#[test]
fn leader_election_subjects_are_safe_and_abort_promptly() {
    let subjects: Vec<Arc<dyn Algorithm>> = vec![
        Arc::new(PetersonTree::le2()),
        Arc::new(PetersonTree::tournament(2)),
        Arc::new(PetersonTree::tournament(3)),
        Arc::new(PetersonTree::tournament_doorway(2)),
        Arc::new(PetersonTree::tournament_doorway(3)),
    ];
    for alg in subjects {
        let m = Model::new(alg.clone());
        let depth = ExplorationBudget::new(30, 500_000);
        let label = format!("{} n = {}", alg.name(), alg.processes());
        let safety = check_le_safety_exhaustive(&m, depth).unwrap();
        let abort = check_bounded_abort(&m, 40, depth).unwrap();
        // Three-process runs outgrow the depth bound, so those searches can
        // only report that nothing went wrong within it.
        if alg.processes() == 2 {
            assert!(safety.is_pass() && abort.is_pass(), "{label}: {safety:?} {abort:?}");
        } else {
            assert!(!safety.is_fail() && !abort.is_fail(), "{label}: {safety:?} {abort:?}");
        }
    }
}
