use std::sync::Arc;

use expfun::regimes::{
    classify_diffusion_max, classify_extinction, classify_logistic, classify_theorem1, classify_theorem2,
    scaled_environment, survival_target, RegimeLabel, RegimeReport,
};
use expfun::{Cutoff, JumpMeasure, LevySpec};
use proptest::prelude::*;

/// Environments with 1 < θ⁺: Brownian, or Brownian plus two-sided exponential jumps.
fn environment() -> impl Strategy<Value = LevySpec> {
    (-2.0..2.0f64, 0.05..3.0f64, 0.0..1.5f64, 0.05..0.9f64, 0.05..0.9f64).prop_map(|(drift, g2, rate, mp, mn)| {
        if rate < 0.3 {
            LevySpec::brownian(drift, g2).unwrap()
        } else {
            LevySpec::new(
                drift,
                g2,
                JumpMeasure::TwoSidedExponential { rate_pos: rate, mean_pos: mp, rate_neg: 0.5 * rate, mean_neg: mn },
            )
            .unwrap()
        }
    })
}

fn assert_fields(rep: &RegimeReport, spec: &LevySpec) {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
    assert!(rep.r >= 0.0, "{rep:?}");
    assert!(rep.p > 0.0 && rep.p < rep.theta_plus);
    match rep.label {
        RegimeLabel::I => assert!(rep.r == 0.0 && rep.gamma == Some(0.0)),
        RegimeLabel::II => assert!(rep.r == 0.0 && rep.gamma == Some(0.5)),
        RegimeLabel::IIIa => assert!(close(rep.r, -spec.laplace_exponent(rep.p)) && rep.gamma == Some(0.0)),
        RegimeLabel::IIIb => assert!(close(rep.r, -spec.laplace_exponent(rep.p)) && rep.gamma == Some(0.5)),
        RegimeLabel::IIIc => {
            let tau = rep.tau.expect("IIIc has τ");
            assert!(tau > 0.0 && tau < rep.p);
            assert!(close(rep.r, -spec.laplace_exponent(tau)));
            assert!(rep.gamma == Some(1.5) || rep.gamma_range.is_some());
        }
        RegimeLabel::Boundary => assert!(rep.between.is_some()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(128) })]

    #[test]
    fn power_reports_satisfy_field_invariants(spec in environment(), u in 0.05..0.95f64) {
        let p = u * spec.laplace_domain().1.min(4.0);
        let rep = classify_theorem1(Arc::new(spec.clone()), p).unwrap();
        assert_fields(&rep, &spec);
    }

    #[test]
    fn label_ignores_the_cutoff_convention(spec in environment(), u in 0.05..0.95f64) {
        let p = u * spec.laplace_domain().1.min(4.0);
        let other = spec.recut(Cutoff::Indicator1);
        let a = classify_theorem1(Arc::new(spec), p).unwrap();
        let b = classify_theorem1(Arc::new(other), p).unwrap();
        prop_assert_eq!(a.label, b.label);
        prop_assert!((a.r - b.r).abs() <= 1e-9 * (1.0 + a.r));
        prop_assert_eq!(a.gamma, b.gamma);
    }

    #[test]
    fn extinction_matches_its_reduction(env in environment(), beta in 0.2..1.0f64) {
        let rep = classify_extinction(&env, beta).unwrap();
        let xi = scaled_environment(&env, beta).unwrap();
        let direct = classify_theorem2(Arc::new(xi.clone()), &survival_target(beta, 1.0 / beta, 1.0), 1.0 / beta).unwrap();
        prop_assert_eq!(rep.label, direct.label);
        prop_assert!((rep.r - direct.r).abs() <= 1e-12 * (1.0 + rep.r));
        assert_fields(&rep.reduced, &xi);
    }

    #[test]
    fn logistic_and_diffusion_follow_the_unit_scale_extinction(env in environment()) {
        let ext = classify_extinction(&env, 1.0).unwrap();
        prop_assert_eq!(classify_logistic(&env).unwrap().label, ext.label);
        prop_assert_eq!(classify_diffusion_max(&env).unwrap().label, ext.label);
    }
}
