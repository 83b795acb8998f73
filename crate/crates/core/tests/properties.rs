//! Cross-module properties: Monte Carlo checks on hypothesis-satisfying
//! quadruples never fail, and the counterexample estimator tracks its closed form.

use bihari::bounds::{HCase, IncreasingProcess, Variant};
use bihari::montecarlo::{
    counterexample_mc, verify_concave_bound, verify_general_eta, verify_random_integrator, IntegratorSpec,
    McSettings, QuadrupleConfig, Verdict,
};
use bihari::EtaSpec;
use proptest::prelude::*;

fn eta_strategy() -> impl Strategy<Value = EtaSpec> {
    prop_oneof![
        (0.2f64..2.0).prop_map(|k| EtaSpec::linear(k).unwrap()),
        (0.3f64..1.0).prop_map(|a| EtaSpec::power(1.0, a).unwrap()),
        Just(EtaSpec::xlog(1.0).unwrap()),
    ]
}

fn hcase_strategy() -> impl Strategy<Value = HCase> {
    prop_oneof![Just(HCase::Predictable), Just(HCase::NonnegJumps), Just(HCase::L1)]
}

fn variant_strategy() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Sup), Just(Variant::NoSup)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn concave_check_never_fails(
        eta in eta_strategy(),
        rate in 0.0f64..2.0,
        jump in 0.0f64..1.0,
        h in 0.2f64..3.0,
        kappa in 0.0f64..1.0,
        p in 0.3f64..0.9,
        hcase in hcase_strategy(),
        variant in variant_strategy(),
        seed in any::<u64>(),
    ) {
        let a = IncreasingProcess::linear(rate).with_jump(0.5, jump);
        let cfg = QuadrupleConfig::new(eta, IntegratorSpec::deterministic(a), h, kappa, 32, 1.0);
        let r = verify_concave_bound(&cfg, p, hcase, variant, &McSettings::new(400, seed)).unwrap();
        prop_assert_ne!(r.verdict, Verdict::Fail, "{:?}", r);
    }

    #[test]
    fn random_integrator_check_never_fails(
        lo in 0.0f64..1.0,
        hi in 1.0f64..3.0,
        kappa in 0.0f64..1.0,
        p in 0.3f64..0.8,
        dq in 0.1f64..1.5,
        seed in any::<u64>(),
    ) {
        let a = IntegratorSpec::RandomScale { values: vec![lo, hi], probs: vec![0.5, 0.5] };
        let cfg = QuadrupleConfig::new(EtaSpec::identity(), a, 1.0, kappa, 32, 1.0);
        let r = verify_random_integrator(&cfg, p, p + dq, HCase::Predictable, Variant::Sup, &McSettings::new(400, seed))
            .unwrap();
        prop_assert_ne!(r.verdict, Verdict::Fail, "{:?}", r);
    }

    #[test]
    fn general_eta_checks_never_fail(
        rate in 0.0f64..2.0,
        kappa in 0.0f64..1.0,
        h in 1.0f64..3.0,
        p in 0.3f64..0.9,
        seed in any::<u64>(),
    ) {
        let a = IntegratorSpec::deterministic(IncreasingProcess::linear(rate));
        let cfg = QuadrupleConfig::new(EtaSpec::identity(), a, h, kappa, 32, 1.0).with_floor(1.0);
        for r in verify_general_eta(&cfg, p, &McSettings::new(400, seed)).unwrap() {
            prop_assert_ne!(r.verdict, Verdict::Fail, "{:?}", r);
        }
    }

    #[test]
    fn counterexample_estimator_tracks_the_closed_form(
        p in 0.1f64..0.9,
        gamma in 0.0f64..50.0,
        t_end in 1.0f64..6.0,
        seed in any::<u64>(),
    ) {
        let r = counterexample_mc(p, gamma, t_end, &McSettings::new(20_000, seed)).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Pass, "{:?}", r);
    }
}
