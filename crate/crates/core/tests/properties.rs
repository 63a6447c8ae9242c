//! Fuzzed model claims as proptest properties. The acceptance target runs
//! the same claims at full size.

mod common;

use proptest::prelude::*;
use proptest::test_runner::Config;

use common::claims::{self, arb_case, Case, Claim};

fn config() -> Config {
    Config { cases: 1_000, max_global_rejects: 100_000, failure_persistence: None, ..Config::default() }
}

fn holds(claim: Claim, case: &Case) -> Result<(), TestCaseError> {
    match claim(case) {
        Ok(true) => Ok(()),
        Ok(false) => Err(TestCaseError::reject("vacuous case")),
        Err(witness) => Err(TestCaseError::fail(witness)),
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn projection_same_execution(case in arb_case()) {
        holds(claims::projection_same_execution, &case)?;
    }

    #[test]
    fn projection_cache(case in arb_case()) {
        holds(claims::projection_cache, &case)?;
    }

    #[test]
    fn projection_safe(case in arb_case()) {
        holds(claims::projection_safe, &case)?;
    }

    #[test]
    fn projection_keeps_rmr_and_knowledge(case in arb_case()) {
        holds(claims::projection_rmr_and_knowledge, &case)?;
    }

    #[test]
    fn winner_projection(case in arb_case()) {
        holds(claims::winner_projection, &case)?;
    }

    #[test]
    fn zero_rmr_step_keeps_safety(case in arb_case()) {
        holds(claims::zero_rmr_safe, &case)?;
    }

    #[test]
    fn knowledge_changes_name_the_actor(case in arb_case()) {
        holds(claims::k_change_names_actor, &case)?;
    }

    #[test]
    fn bounds_on_k_and_m(case in arb_case()) {
        holds(claims::bounds_on_k_and_m, &case)?;
    }

    #[test]
    fn replay_is_deterministic(case in arb_case()) {
        holds(claims::replay_is_deterministic, &case)?;
    }

    #[test]
    fn written_values_are_unique(case in arb_case()) {
        holds(claims::written_values_are_unique, &case)?;
    }

    #[test]
    fn at_most_one_terminates_while_knowledge_is_fixed(case in arb_case()) {
        holds(claims::one_terminates, &case)?;
    }

    #[test]
    fn unknowing_solo_run_wins(case in arb_case()) {
        holds(claims::solo_win, &case)?;
    }
}
