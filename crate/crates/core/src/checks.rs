//! Invariant suite behind `check all`, plus the Monte Carlo building blocks it
//! uses (duality samples, Wiener–Hopf product, sandwich and lattice checks).

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{dufresne_density, esscher_martingale_check, ks_two_sample, residual_for_density, run_replicas};
use crate::levy::{JumpMeasure, LaplaceExponent, LevySpec};
use crate::pathsim::{
    gl_sequences, observe, poisson_skeleton, sandwich_check, simulate_path, simulate_path_with, wiener_hopf_sample,
    SimOptions,
};
use crate::regimes::{classify_theorem1, RegimeLabel};
use crate::rng::{tags, StreamFactory};

/// Brownian motion with drift plus two-sided exponential jumps.
pub fn reference_spec() -> LevySpec {
    LevySpec::new(
        0.5,
        1.0,
        JumpMeasure::TwoSidedExponential { rate_pos: 1.0, mean_pos: 0.3, rate_neg: 0.5, mean_neg: 0.4 },
    )
    .expect("reference spec is valid")
}

/// e^{−ξ_t} I_t(−ξ) from one set of paths and I_t(ξ) from an independent set.
pub fn duality_samples(
    spec: &LevySpec,
    t: f64,
    n: usize,
    step: f64,
    factory: &StreamFactory,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let reversed = run_replicas(factory, tags::DUAL, n, 1, |rng, row| {
        let mut out = [0.0; 2];
        observe(spec, &[t], step, &[-1.0], rng, &mut out)?;
        row[0] = (-out[0]).exp() * out[1];
        Ok(())
    })?;
    let forward = run_replicas(factory, tags::PATH, n, 1, |rng, row| {
        let mut out = [0.0; 2];
        observe(spec, &[t], step, &[1.0], rng, &mut out)?;
        row[0] = out[1];
        Ok(())
    })?;
    Ok((reversed, forward))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhProduct {
    pub q: f64,
    pub lambda: f64,
    /// E[e^{λ M}] E[e^{λ I}]
    pub estimate: f64,
    /// delta-method standard error of the product
    pub stderr: f64,
    /// q / (q − ψ(λ))
    pub exact: f64,
}

impl WhProduct {
    pub fn z_score(&self) -> f64 {
        (self.estimate - self.exact) / self.stderr
    }
}

/// Compares E[e^{λ M_{e_q}}] E[e^{λ I_{e_q}}] with q/(q − ψ(λ)).
pub fn wiener_hopf_product(
    spec: &LevySpec,
    q: f64,
    lambda: f64,
    n: usize,
    step: f64,
    factory: &StreamFactory,
) -> Result<WhProduct> {
    let psi = spec.laplace_exponent(lambda);
    if !(psi.is_finite() && psi < q) {
        return Err(Error::InvalidInput(format!("need ψ(λ) < q, got ψ({lambda}) = {psi}, q = {q}")));
    }
    let buf = run_replicas(factory, tags::EXP_TIME, n, 2, |rng, row| {
        let s = wiener_hopf_sample(spec, q, step, rng)?;
        row[0] = (lambda * s.m0).exp();
        row[1] = (lambda * s.i0).exp();
        Ok(())
    })?;
    let col = |j: usize| -> Vec<f64> { buf.chunks(2).map(|r| r[j]).collect() };
    let (mu, su) = crate::stats::mean_stderr(&col(0));
    let (md, sd) = crate::stats::mean_stderr(&col(1));
    Ok(WhProduct {
        q,
        lambda,
        estimate: mu * md,
        stderr: (md * su).hypot(mu * sd),
        exact: q / (q - psi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichStats {
    pub paths: usize,
    /// paths where a bound fails by more than 1e−9 relative
    pub violations: usize,
    /// smallest slack relative to max(1, I_t)
    pub worst_slack: f64,
}

/// Lower/upper skeleton bounds around I_t on `n` paths.
pub fn sandwich_paths(
    spec: &LevySpec,
    t: f64,
    q: f64,
    n: usize,
    step: f64,
    factory: &StreamFactory,
) -> Result<SandwichStats> {
    let buf = run_replicas(factory, tags::SKELETON, n, 2, |rng, row| {
        let path = simulate_path(spec, t, step, rng)?;
        let skel = poisson_skeleton(&path, q, rng)?;
        let scale = path.expfun().max(1.0);
        match sandwich_check(&path, &skel) {
            Ok(m) => {
                row[0] = 0.0;
                row[1] = m.lower_slack.min(m.upper_slack) / scale;
            }
            Err(Error::SandwichViolation { excess, .. }) => {
                row[0] = 1.0;
                row[1] = -excess.abs() / scale;
            }
            Err(e) => return Err(e),
        }
        Ok(())
    })?;
    Ok(SandwichStats {
        paths: n,
        violations: buf.chunks(2).filter(|r| r[0] > 0.0).count(),
        worst_slack: buf.chunks(2).map(|r| r[1]).fold(f64::INFINITY, f64::min),
    })
}

/// Largest relative gap |Bₙ − I_{n/q}| over `n` paths on the lattice 1/q.
pub fn lattice_identity_gap(
    spec: &LevySpec,
    t: f64,
    q: f64,
    n: usize,
    step: f64,
    factory: &StreamFactory,
) -> Result<f64> {
    let count = (t * q).floor() as usize;
    let opts = SimOptions { required_times: (1..=count).map(|k| k as f64 / q).collect(), ..Default::default() };
    let buf = run_replicas(factory, tags::PATH, n, 1, |rng, row| {
        let path = simulate_path_with(spec, t, step, &opts, rng)?;
        row[0] = gl_sequences(&path, q)?.max_rel_gap();
        Ok(())
    })?;
    Ok(buf.iter().copied().fold(0.0, f64::max))
}

/// Sizes for [`check_all`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckConfig {
    pub paths: usize,
    pub mc: usize,
    pub ks: usize,
    pub step: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { paths: 1_000, mc: 100_000, ks: 10_000, step: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

fn result(name: &'static str, passed: bool, value: f64, threshold: f64, detail: String) -> CheckResult {
    CheckResult { name, passed, value, threshold, detail }
}

/// Point inside the domain where moments are comfortably finite.
fn safe_lambda(spec: &LevySpec, want: f64) -> f64 {
    let (lo, hi) = spec.laplace_domain();
    if want > 0.0 { want.min(0.25 * hi) } else { want.max(0.25 * lo) }
}

/// Runs every invariant on `spec`. Fails only on configuration errors; a
/// violated invariant is reported as a failed [`CheckResult`].
pub fn check_all(spec: &LevySpec, cfg: &CheckConfig, factory: &StreamFactory) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let (lo, hi) = spec.laplace_domain();

    out.push(result("psi_at_zero", spec.laplace_exponent(0.0) == 0.0, spec.laplace_exponent(0.0), 0.0, String::new()));

    // second differences on a grid strictly inside the domain
    let (a, b) = (if lo.is_finite() { 0.95 * lo } else { -5.0 }, if hi.is_finite() { 0.95 * hi } else { 5.0 });
    let grid: Vec<f64> = (0..=200).map(|k| a + (b - a) * k as f64 / 200.0).collect();
    let worst = grid
        .windows(3)
        .map(|w| {
            let d2 = spec.laplace_exponent(w[0]) - 2.0 * spec.laplace_exponent(w[1]) + spec.laplace_exponent(w[2]);
            d2 / (1.0 + spec.laplace_exponent(w[1]).abs())
        })
        .fold(f64::INFINITY, f64::min);
    out.push(result("psi_convex", worst >= -1e-12, worst, -1e-12, format!("on [{a}, {b}]")));

    let (l1, l2) = (safe_lambda(spec, 0.3), safe_lambda(spec, -0.2));
    let twice = spec.esscher_tilt(l1)?.esscher_tilt(l2)?;
    let once = spec.esscher_tilt(l1 + l2)?;
    let gap = [-0.1, 0.05, 0.2]
        .iter()
        .map(|&z| (twice.laplace_exponent(z) - once.laplace_exponent(z)).abs())
        .fold(0.0, f64::max);
    out.push(result("tilt_composition", gap <= 1e-10, gap, 1e-10, format!("λ₁ = {l1}, λ₂ = {l2}")));

    let round = LevySpec::from_json(&spec.to_json())?;
    out.push(result("json_round_trip", round == *spec, 0.0, 0.0, String::new()));

    for (lambda, t) in [(safe_lambda(spec, 0.5), 1.0), (safe_lambda(spec, -0.5), 2.0)] {
        let e = esscher_martingale_check(spec, lambda, t, cfg.mc, &factory.derive("martingale"))?;
        let z = if e.stderr > 0.0 { (e.mean - 1.0).abs() / e.stderr } else { (e.mean - 1.0).abs() * 1e12 };
        out.push(result("esscher_martingale", z < 3.0, z, 3.0, format!("λ = {lambda}, t = {t}, mean = {:.6}", e.mean)));
    }

    let s = sandwich_paths(spec, 5.0, 2.0, cfg.paths, cfg.step, &factory.derive("sandwich"))?;
    out.push(result(
        "sandwich",
        s.violations == 0,
        s.violations as f64,
        0.0,
        format!("{} paths, worst slack {:.3e}", s.paths, s.worst_slack),
    ));

    let g = lattice_identity_gap(spec, 5.0, 4.0, cfg.paths, cfg.step, &factory.derive("lattice"))?;
    out.push(result("lattice_identity", g <= 1e-12, g, 1e-12, format!("{} paths", cfg.paths)));

    let lam = safe_lambda(spec, 0.5);
    let q = 1.0f64.max(2.0 * spec.laplace_exponent(2.0 * lam) + 1.0);
    let wh = wiener_hopf_product(spec, q, lam, cfg.mc, cfg.step, &factory.derive("wiener-hopf"))?;
    out.push(result(
        "wiener_hopf",
        wh.z_score().abs() < 3.0,
        wh.z_score(),
        3.0,
        format!("q = {q}, λ = {lam}, product {:.6} vs {:.6}", wh.estimate, wh.exact),
    ));

    let (rev, fwd) = duality_samples(spec, 2.0, cfg.ks, cfg.step, &factory.derive("duality"))?;
    let ks = ks_two_sample(&rev, &fwd)?;
    out.push(result("time_reversal", ks.p_value > 0.01, ks.p_value, 0.01, format!("D = {:.5}", ks.statistic)));

    let v: Vec<f64> = (0..50).map(|k| 0.1 + 0.1 * k as f64).collect();
    let r = residual_for_density(&LevySpec::brownian(2.0, 4.0)?, &dufresne_density, &v)?;
    let worst = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    out.push(result("density_equation", worst <= 1e-3, worst, 1e-3, "2s + 2B_s on v ∈ [0.1, 5]".into()));

    let exponent: Arc<dyn LaplaceExponent> = Arc::new(spec.clone());
    let mut consistent = true;
    for p in [0.25, 0.5, 1.0].map(|p| safe_lambda(spec, p)) {
        let rep = classify_theorem1(exponent.clone(), p)?;
        consistent &= match rep.label {
            RegimeLabel::I | RegimeLabel::II => rep.r == 0.0,
            RegimeLabel::IIIa | RegimeLabel::IIIb => (rep.r + rep.psi_p).abs() < 1e-12,
            RegimeLabel::IIIc => rep.psi_tau.is_some_and(|v| (rep.r + v).abs() < 1e-12),
            RegimeLabel::Boundary => true,
        };
    }
    out.push(result("regime_report", consistent, 0.0, 0.0, String::new()));

    Ok(out)
}
