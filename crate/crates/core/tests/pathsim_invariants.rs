use expfun::checks::{duality_samples, lattice_identity_gap, reference_spec, sandwich_paths, wiener_hopf_product};
use expfun::estimator::ks_two_sample;
use expfun::pathsim::simulate_path;
use expfun::rng::StreamFactory;
use expfun::{JumpMeasure, LevySpec, PointMass};
use proptest::prelude::*;

fn brownian_drift() -> LevySpec {
    LevySpec::brownian(0.7, 1.5).unwrap()
}

fn compound_poisson() -> LevySpec {
    LevySpec::new(
        0.4,
        0.0,
        JumpMeasure::PointMasses { masses: vec![PointMass { size: 0.8, rate: 1.5 }, PointMass { size: -0.5, rate: 1.0 }] },
    )
    .unwrap()
}

fn spec_strategy() -> impl Strategy<Value = LevySpec> {
    (-1.0..1.0f64, 0.0..2.0f64, 0.0..2.0f64, 0.1..0.8f64).prop_map(|(drift, g2, rate, mean)| {
        if rate < 0.2 {
            LevySpec::brownian(drift, g2.max(0.1)).unwrap()
        } else {
            LevySpec::new(
                drift,
                g2,
                JumpMeasure::TwoSidedExponential { rate_pos: rate, mean_pos: mean, rate_neg: rate, mean_neg: mean },
            )
            .unwrap()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(48) })]

    #[test]
    fn running_functional_is_nondecreasing(spec in spec_strategy(), seed in any::<u64>(), t in 0.1..5.0f64) {
        let path = simulate_path(&spec, t, 0.01, &mut StreamFactory::new(seed).stream("prop", 0)).unwrap();
        prop_assert_eq!(path.running[0], 0.0);
        for w in path.running.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        prop_assert!((path.horizon() - t).abs() < 1e-12);
        let direct = path.functional(1.0);
        prop_assert!((direct - path.expfun()).abs() <= 1e-12 * direct);
    }

    #[test]
    fn path_is_deterministic_given_stream(spec in spec_strategy(), seed in any::<u64>()) {
        let f = StreamFactory::new(seed);
        let a = simulate_path(&spec, 2.0, 0.05, &mut f.stream("prop", 3)).unwrap();
        let b = simulate_path(&spec, 2.0, 0.05, &mut f.stream("prop", 3)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn sandwich_holds_on_a_thousand_paths() {
    let factory = StreamFactory::new(21);
    for spec in [brownian_drift(), compound_poisson(), reference_spec()] {
        let s = sandwich_paths(&spec, 5.0, 2.0, 1_000, 0.01, &factory).unwrap();
        assert_eq!(s.violations, 0, "worst slack {}", s.worst_slack);
        assert!(s.worst_slack >= -1e-9);
    }
}

#[test]
fn lattice_identity_is_exact_on_a_thousand_paths() {
    let factory = StreamFactory::new(22);
    for spec in [brownian_drift(), compound_poisson(), reference_spec()] {
        let gap = lattice_identity_gap(&spec, 5.0, 4.0, 1_000, 0.01, &factory).unwrap();
        assert!(gap <= 1e-12, "gap {gap}");
    }
}

/// Least-squares slope of ln(err) against ln(h).
fn slope(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn grid_refinement_has_first_order() {
    let spec = LevySpec::brownian(0.3, 1.0).unwrap();
    let fine = 0.1 / 32.0;
    let factors = [32usize, 16, 8, 4];
    let factory = StreamFactory::new(23);
    let mut errs = vec![0.0; factors.len()];
    let paths = 2_000;
    for r in 0..paths {
        let path = simulate_path(&spec, 2.0, fine, &mut factory.stream("order", r)).unwrap();
        let reference = path.expfun();
        for (e, &f) in errs.iter_mut().zip(&factors) {
            *e += (path.coarsen(f).expfun() - reference).abs() / paths as f64;
        }
    }
    let hs: Vec<f64> = factors.iter().map(|&f| f as f64 * fine).collect();
    let order = slope(&hs, &errs);
    assert!(order >= 0.9, "empirical order {order}, errors {errs:?}");
}

#[test]
fn time_reversal_passes_ks_with_calibrated_allowance() {
    for spec in [brownian_drift(), compound_poisson()] {
        let mut failures = 0;
        for seed in 0..20 {
            let (rev, fwd) = duality_samples(&spec, 2.0, 10_000, 0.01, &StreamFactory::new(1_000 + seed)).unwrap();
            if ks_two_sample(&rev, &fwd).unwrap().p_value <= 0.01 {
                failures += 1;
            }
        }
        assert!(failures <= 1, "{failures} KS rejections in 20 seeds");
    }
}

#[test]
fn wiener_hopf_product_within_three_stderr() {
    let factory = StreamFactory::new(24);
    for (spec, q, lambda) in [(brownian_drift(), 2.0, 0.5), (compound_poisson(), 3.0, -0.7), (reference_spec(), 4.0, 0.6)] {
        let wh = wiener_hopf_product(&spec, q, lambda, 100_000, 0.01, &factory).unwrap();
        assert!(wh.z_score().abs() < 3.0, "q = {q}, λ = {lambda}: {wh:?}");
    }
}
