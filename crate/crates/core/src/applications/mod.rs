//! Monte Carlo drivers for branching, logistic and diffusion models in a Lévy
//! random environment. The population process is never simulated: every
//! quantity is an explicit function of the environment path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{auto_tilt, run_replicas, McEstimate, TiltMode};
use crate::levy::{LaplaceExponent, LevySpec};
use crate::pathsim::{observe, sample_i_infinity, PathSample, PerpetuityOptions};
use crate::regimes::{
    classify_diffusion_max, classify_explosion, classify_extinction, classify_logistic, EnvironmentReport,
};
use crate::rng::{tags, StreamFactory};

/// Self-similar branching process with index β driven by the environment K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingEnvModel {
    pub env: LevySpec,
    pub beta: f64,
    pub c_beta: f64,
    pub z: f64,
}

impl BranchingEnvModel {
    pub fn new(env: LevySpec, beta: f64, c_beta: f64, z: f64) -> Result<Self> {
        let m = Self { env, beta, c_beta, z };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.beta;
        if !((b > -1.0 && b < 0.0) || (b > 0.0 && b <= 1.0)) {
            return Err(Error::InvalidSpec(format!("β must lie in (−1, 0) ∪ (0, 1], got {b}")));
        }
        if !(b * self.c_beta > 0.0) {
            return Err(Error::InvalidSpec(format!("need βc_β > 0, got β = {b}, c_β = {}", self.c_beta)));
        }
        if !(self.z > 0.0 && self.z.is_finite()) {
            return Err(Error::InvalidSpec(format!("z must be positive, got {}", self.z)));
        }
        Ok(())
    }

    /// z (βc_β I)^{−1/β}
    fn exponent_term(&self, i_beta: f64) -> f64 {
        self.z * (self.beta * self.c_beta * i_beta).powf(-1.0 / self.beta)
    }

    /// P_z(Z_t > 0 | K) given I_t(βK).
    pub fn survival_given(&self, i_beta: f64) -> f64 {
        -(-self.exponent_term(i_beta)).exp_m1()
    }

    /// P_z(Z_t < ∞ | K) given I_t(βK); identically 1 for β > 0.
    pub fn nonexplosion_given(&self, i_beta: f64) -> f64 {
        if self.beta > 0.0 {
            1.0
        } else {
            (-self.exponent_term(i_beta)).exp()
        }
    }

    fn ln_survival(&self, i_beta: f64) -> f64 {
        let u = self.exponent_term(i_beta);
        if u > 1.0 { (-(-u).exp()).ln_1p() } else { (-(-u).exp_m1()).ln() }
    }
}

/// P_z(Z_t > 0 | K) at the horizon of the environment path.
pub fn conditional_survival(path: &PathSample, model: &BranchingEnvModel) -> Result<f64> {
    if !(model.beta > 0.0) {
        return Err(Error::InvalidInput(format!("survival formula needs β in (0, 1], got {}", model.beta)));
    }
    Ok(model.survival_given(path.functional(model.beta)))
}

/// P_z(Z_t < ∞ | K) at the horizon of the environment path.
pub fn conditional_nonexplosion(path: &PathSample, model: &BranchingEnvModel) -> f64 {
    if model.beta > 0.0 {
        return 1.0;
    }
    model.nonexplosion_given(path.functional(model.beta))
}

/// Logistic growth with competition k; the growth rate is part of the drift of K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticModel {
    pub env: LevySpec,
    pub k: f64,
    pub z: f64,
}

impl LogisticModel {
    pub fn new(env: LevySpec, k: f64, z: f64) -> Result<Self> {
        let m = Self { env, k, z };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite() && self.z > 0.0 && self.z.is_finite()) {
            return Err(Error::InvalidSpec(format!("k and z must be positive, got k = {}, z = {}", self.k, self.z)));
        }
        Ok(())
    }

    /// z (e^{−K_t} + kz I_t(K))^{−1}
    pub fn mean_given(&self, k_t: f64, i: f64) -> f64 {
        self.z / ((-k_t).exp() + self.k * self.z * i)
    }
}

/// Diffusion in the potential V(x) = −ξ_x for x ≥ 0 and −η_{−x} for x ≤ 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionModel {
    pub xi: LevySpec,
    pub eta: LevySpec,
}

impl DiffusionModel {
    pub fn new(xi: LevySpec, eta: LevySpec) -> Result<Self> {
        let m = Self { xi, eta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.eta.dpsi(0.0);
        if !(d > 0.0) {
            return Err(Error::Hypothesis(format!("η must drift to +∞, got E[η₁] = {d}")));
        }
        Ok(())
    }
}

/// Monte Carlo settings shared by the drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppOptions {
    pub n: usize,
    pub step: f64,
    #[serde(default)]
    pub tilt: TiltMode,
    #[serde(default)]
    pub perpetuity: PerpetuityOptions,
}

impl AppOptions {
    pub fn new(n: usize, step: f64) -> Self {
        Self { n, step, tilt: TiltMode::None, perpetuity: PerpetuityOptions::default() }
    }

    pub fn with_tilt(mut self, tilt: TiltMode) -> Self {
        self.tilt = tilt;
        self
    }
}

fn check_times(times: &[f64], n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least two replicas".into()));
    }
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("evaluation times must be positive and increasing".into()));
    }
    Ok(())
}

/// Rows [K_t, I_t(scale·K)] per time, with K drawn under the Esscher
/// measure of parameter `k_tilt`.
fn environment_rows(
    env: &LevySpec,
    times: &[f64],
    opts: &AppOptions,
    scale: f64,
    k_tilt: f64,
    factory: &StreamFactory,
) -> Result<Vec<f64>> {
    check_times(times, opts.n)?;
    let sim = env.esscher_tilt(k_tilt)?;
    run_replicas(factory, tags::PATH, opts.n, 2 * times.len(), |rng, row| {
        observe(&sim, times, opts.step, &[scale], rng, row)
    })
}

/// e^{tκ(λ)} · mean(exp(ln g(r, K_t, I) − λK_t)) per time.
fn reduce<G>(
    env: &LevySpec,
    times: &[f64],
    rows: &[f64],
    k_tilt: f64,
    seed: u64,
    ln_g: G,
) -> Vec<McEstimate>
where
    G: Fn(usize, f64, f64) -> f64,
{
    let width = 2 * times.len();
    let kappa = env.laplace_exponent(k_tilt);
    let tilt = (k_tilt != 0.0).then_some(k_tilt);
    times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let samples = rows.chunks(width).enumerate().map(|(r, row)| {
                let (k_t, i) = (row[2 * j], row[2 * j + 1]);
                (ln_g(r, k_t, i) - k_tilt * k_t).exp()
            });
            McEstimate::from_samples(t, samples, (t * kappa).exp(), tilt, seed)
        })
        .collect()
}

/// Tilt on K from a tilt λ on ξ = βK.
fn environment_tilt(beta: f64, xi_tilt: Option<f64>) -> f64 {
    xi_tilt.map_or(0.0, |l| beta * l)
}

fn auto_from(report: &EnvironmentReport) -> Option<f64> {
    auto_tilt(report.label, report.reduced.p, report.reduced.tau)
}

/// P_z(Z_t > 0) for β ∈ (0, 1]. A tilt value refers to ξ = βK; the
/// reported tilt of each estimate is the one applied to K.
pub fn survival_probability(
    model: &BranchingEnvModel,
    times: &[f64],
    opts: &AppOptions,
    factory: &StreamFactory,
) -> Result<Vec<McEstimate>> {
    model.validate()?;
    if !(model.beta > 0.0) {
        return Err(Error::InvalidInput(format!("survival needs β in (0, 1], got {}", model.beta)));
    }
    let (_, hi) = model.env.laplace_domain();
    if !(hi > 1.0) {
        return Err(Error::Hypothesis(format!("need 1 < θ_K⁺, got {hi}")));
    }
    let xi_tilt = opts.tilt.resolve(|| Ok(auto_from(&classify_extinction(&model.env, model.beta)?)))?;
    let lk = environment_tilt(model.beta, xi_tilt);
    let rows = environment_rows(&model.env, times, opts, model.beta, lk, factory)?;
    Ok(reduce(&model.env, times, &rows, lk, factory.seed(), |_, _, i| model.ln_survival(i)))
}

/// P_z(Z_t < ∞) for β ∈ (−1, 0). A tilt value refers to ξ = βK.
pub fn explosion_probability(
    model: &BranchingEnvModel,
    times: &[f64],
    opts: &AppOptions,
    factory: &StreamFactory,
) -> Result<Vec<McEstimate>> {
    model.validate()?;
    if !(model.beta < 0.0) {
        return Err(Error::InvalidInput(format!("explosion needs β in (−1, 0), got {}", model.beta)));
    }
    let xi_tilt = opts.tilt.resolve(|| Ok(auto_from(&classify_explosion(&model.env, model.beta)?)))?;
    let lk = environment_tilt(model.beta, xi_tilt);
    let rows = environment_rows(&model.env, times, opts, model.beta, lk, factory)?;
    Ok(reduce(&model.env, times, &rows, lk, factory.seed(), |_, _, i| -model.exponent_term(i)))
}

/// E_z[Z_t] for the logistic model, from the pair (K_t, I_t(K)) of one path.
pub fn logistic_mean(
    model: &LogisticModel,
    times: &[f64],
    opts: &AppOptions,
    factory: &StreamFactory,
) -> Result<Vec<McEstimate>> {
    model.validate()?;
    let lk = opts.tilt.resolve(|| Ok(auto_from(&classify_logistic(&model.env)?)))?.unwrap_or(0.0);
    let rows = environment_rows(&model.env, times, opts, 1.0, lk, factory)?;
    let ln_z = model.z.ln();
    let kz = model.k * model.z;
    Ok(reduce(&model.env, times, &rows, lk, factory.seed(), |_, k_t, i| {
        // ln z − ln(e^{−K} + kzI), kept finite when e^{−K} overflows
        let (a, b) = (-k_t, (kz * i).ln());
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        ln_z - hi - (lo - hi).exp().ln_1p()
    }))
}

/// (1/k) E[1/I_∞(K)], the long-time limit of the logistic mean when K drifts to +∞.
pub fn logistic_limit(model: &LogisticModel, opts: &AppOptions, factory: &StreamFactory) -> Result<McEstimate> {
    model.validate()?;
    let buf = run_replicas(factory, tags::PERPETUITY, opts.n, 1, |rng, row| {
        row[0] = sample_i_infinity(&model.env, &opts.perpetuity, rng)?.value;
        Ok(())
    })?;
    Ok(McEstimate::from_samples(f64::INFINITY, buf.iter().map(|i| 1.0 / i), 1.0 / model.k, None, factory.seed()))
}

/// Estimates of P(max X > t) and the largest truncation bound seen for Ĩ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionEstimates {
    pub estimates: Vec<McEstimate>,
    /// relative truncation level used for Ĩ = I_∞(η)
    pub eps_tail: f64,
    pub max_tail_bound: f64,
}

/// P(max X > t) = E[Ĩ / (Ĩ + I_t(ξ))] with Ĩ drawn on its own stream.
pub fn diffusion_max_tail(
    model: &DiffusionModel,
    times: &[f64],
    opts: &AppOptions,
    factory: &StreamFactory,
) -> Result<DiffusionEstimates> {
    model.validate()?;
    let lk = opts.tilt.resolve(|| Ok(auto_from(&classify_diffusion_max(&model.xi)?)))?.unwrap_or(0.0);
    check_times(times, opts.n)?;
    let eta = run_replicas(factory, tags::ETA, opts.n, 2, |rng, row| {
        let s = sample_i_infinity(&model.eta, &opts.perpetuity, rng)?;
        row[0] = s.value;
        row[1] = s.tail_bound;
        Ok(())
    })?;
    let rows = environment_rows(&model.xi, times, opts, 1.0, lk, factory)?;
    let estimates = reduce(&model.xi, times, &rows, lk, factory.seed(), |r, _, i| {
        let it = eta[2 * r];
        it.ln() - (it + i).ln()
    });
    let max_tail_bound = eta.chunks(2).map(|c| c[1]).fold(0.0, f64::max);
    Ok(DiffusionEstimates { estimates, eps_tail: opts.perpetuity.eps_tail, max_tail_bound })
}
