use expfun::estimator::{ks_two_sample, mc_estimate, mc_estimate_times, rate_fit, McEstimate, McOptions, TargetFunction};
use expfun::rng::StreamFactory;
use expfun::LevySpec;
use proptest::prelude::*;
use rand_distr::{Distribution, Exp1, StandardNormal};

fn curve(c: f64, beta: f64, gamma: f64, t: f64) -> f64 {
    c * (-beta * t).exp() * t.powf(-gamma)
}

fn geometric(t0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| t0 * 2f64.powi(k as i32)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn rate_fit_is_exact_without_noise(
        c in 0.01..100.0f64,
        beta in -0.5..0.5f64,
        gamma in -2.0..2.0f64,
        t0 in 0.5..5.0f64,
        rel in prop_oneof![Just(0.0), 0.001..0.1f64],
    ) {
        let ests: Vec<McEstimate> = geometric(t0, 6)
            .into_iter()
            .map(|t| {
                let m = curve(c, beta, gamma, t);
                McEstimate { t, mean: m, stderr: rel * m, n: 100, rejected: 0, tilt: None, seed: 0 }
            })
            .collect();
        let fit = rate_fit(&ests).unwrap();
        prop_assert!((fit.beta - beta).abs() <= 1e-10, "β {} vs {beta}", fit.beta);
        prop_assert!((fit.gamma - gamma).abs() <= 1e-10, "γ {} vs {gamma}", fit.gamma);
        prop_assert!((fit.c.ln() - c.ln()).abs() <= 1e-10);
    }
}

#[test]
fn rate_fit_intervals_cover_the_truth() {
    let (c, beta, gamma) = (2.0, 0.25, 1.5);
    let times = geometric(5.0, 5);
    let factory = StreamFactory::new(31);
    let mut covered = [0usize; 2];
    for rep in 0..100 {
        let mut rng = factory.stream("coverage", rep);
        let ests: Vec<McEstimate> = times
            .iter()
            .map(|&t| {
                let m = curve(c, beta, gamma, t);
                let z: f64 = StandardNormal.sample(&mut rng);
                let se = 0.02 * m;
                McEstimate { t, mean: m + se * z, stderr: se, n: 100_000, rejected: 0, tilt: None, seed: 0 }
            })
            .collect();
        let fit = rate_fit(&ests).unwrap();
        for (k, truth) in [beta, gamma].into_iter().enumerate() {
            let (lo, hi) = fit.ci95[k + 1];
            if lo <= truth && truth <= hi {
                covered[k] += 1;
            }
        }
    }
    assert!(covered.iter().all(|&k| k >= 90), "coverage {covered:?} of 100");
}

#[test]
fn tilted_and_plain_estimators_agree() {
    let spec = LevySpec::brownian(-1.0, 2.0).unwrap();
    let target = TargetFunction::PowerNeg { p: 0.25 };
    let factory = StreamFactory::new(32);
    let times = [2.0, 5.0];
    let plain = mc_estimate_times(&spec, &target, &times, &McOptions { n: 100_000, step: 0.02, tilt: None }, &factory).unwrap();
    let tilted =
        mc_estimate_times(&spec, &target, &times, &McOptions { n: 100_000, step: 0.02, tilt: Some(0.25) }, &factory).unwrap();
    for (a, b) in plain.iter().zip(&tilted) {
        let se = a.stderr.hypot(b.stderr);
        assert!((a.mean - b.mean).abs() < 3.0 * se, "t = {}: {} vs {} (se {se})", a.t, a.mean, b.mean);
    }
}

#[test]
fn tilting_reduces_variance_in_the_exponential_regime() {
    // ψ(λ) = λ² − λ with p = 1/4 < τ = 1/2
    let spec = LevySpec::brownian(-1.0, 2.0).unwrap();
    let target = TargetFunction::PowerNeg { p: 0.25 };
    let factory = StreamFactory::new(33);
    let opts = |tilt| McOptions { n: 20_000, step: 0.02, tilt };
    let plain = mc_estimate(&spec, &target, 10.0, &opts(None), &factory).unwrap();
    let tilted = mc_estimate(&spec, &target, 10.0, &opts(Some(0.25)), &factory).unwrap();
    eprintln!("stderr plain {} tilted {}", plain.stderr, tilted.stderr);
    assert!(2.0 * tilted.stderr < plain.stderr, "plain {plain:?}, tilted {tilted:?}");
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let spec = expfun::checks::reference_spec();
    let target = TargetFunction::Rational { a: 1.0, b: 1.0 };
    let factory = StreamFactory::new(34);
    let opts = McOptions { n: 3_000, step: 0.05, tilt: Some(0.3) };
    let run = |workers: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap()
            .install(|| mc_estimate_times(&spec, &target, &[1.0, 3.0], &opts, &factory).unwrap())
    };
    let one = run(1);
    for w in [2, 4, 8] {
        let other = run(w);
        for (a, b) in one.iter().zip(&other) {
            assert_eq!(a.mean.to_bits(), b.mean.to_bits(), "{w} workers");
            assert_eq!(a.stderr.to_bits(), b.stderr.to_bits(), "{w} workers");
        }
    }
}

#[test]
fn ks_null_is_calibrated() {
    let factory = StreamFactory::new(35);
    let mut passes = 0;
    for rep in 0..100 {
        let mut rng = factory.stream("ks", rep);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| Exp1.sample(&mut rng)).collect() };
        let (xs, ys) = (draw(10_000), draw(10_000));
        if ks_two_sample(&xs, &ys).unwrap().p_value > 0.01 {
            passes += 1;
        }
    }
    assert!(passes >= 95, "{passes} of 100");
}
