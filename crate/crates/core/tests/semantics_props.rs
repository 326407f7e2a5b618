use memlang::denot::{check_soundness, DenotError};
use memlang::dist::dist_eq;
use memlang::gen::{GenConfig, Generator};
use memlang::laws::{run_monad_suite, run_naturality_suite, sweep_invariants};
use memlang::opsem::{
    check_stack_invariants, config_judgement, decompose, enumerate_bigstep, explore, recompose,
    run_sampled, Configuration, Decomposition, STEP_BUDGET,
};
use memlang::syntax::all_memfns_clean;
use memlang::{ratio, ExactDist, FinDist};
use num_traits::One;
use proptest::prelude::*;

fn program() -> impl Strategy<Value = memlang::Comp> {
    any::<u64>().prop_map(|s| Generator::new(s, GenConfig::default()).program())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reachable_configurations_are_judged(p in program()) {
        let mut bad = None;
        let d = explore(Configuration::initial(&p), STEP_BUDGET, |c| {
            if bad.is_some() {
                return;
            }
            if config_judgement(c).is_err() || !check_stack_invariants(c) {
                bad = Some(c.to_string());
            } else if let Ok(Decomposition::Redex { context, redex }) = decompose(&c.term) {
                if recompose(&context, redex).normalized() != c.term.normalized() {
                    bad = Some(format!("decomposition of {}", c.term));
                }
            }
        }).unwrap();
        prop_assert!(bad.is_none(), "{:?}", bad);
        prop_assert!(d.mass().is_one());
    }

    #[test]
    fn samples_stay_in_the_support(p in program(), seed in any::<u64>()) {
        let support = enumerate_bigstep(&p).unwrap();
        let (last, trace) = run_sampled(&p, seed).unwrap();
        prop_assert!(support.contains(&last));
        prop_assert_eq!(run_sampled(&p, seed).unwrap().1, trace);
    }

    #[test]
    fn clean_programs_denote_and_are_sound(p in program()) {
        prop_assume!(all_memfns_clean(&p));
        match check_soundness(&p, 20) {
            Ok(r) => prop_assert!(r.sound, "{}", p),
            Err(e @ DenotError::FreshnessViolation { .. }) => {
                return Err(TestCaseError::fail(format!("{p}: {e}")))
            }
            Err(e) => return Err(TestCaseError::fail(format!("{p}: {e}"))),
        }
        prop_assert_eq!(sweep_invariants(&p), Ok(true));
    }

    #[test]
    fn monad_laws_and_naturality(seed in any::<u64>()) {
        let m = run_monad_suite(4, seed, 5);
        prop_assert!(m.passed(), "{:?}", m.failures);
        let n = run_naturality_suite(4, seed);
        prop_assert!(n.passed(), "{:?}", n.failures);
    }

    #[test]
    fn mixing_ignores_branch_order(ws in prop::collection::vec((1i64..5, 0u8..4), 1..5)) {
        let total: i64 = ws.iter().map(|(w, _)| w).sum();
        let branches: Vec<_> = ws
            .iter()
            .map(|(w, x)| (ratio(*w, total), ExactDist::dirac(*x)))
            .collect();
        let mut rev = branches.clone();
        rev.reverse();
        let a = FinDist::weighted_mix(branches).unwrap();
        let b = FinDist::weighted_mix(rev).unwrap();
        prop_assert!(dist_eq(&a, &b));
        prop_assert!(a.mass().is_one());
    }
}
