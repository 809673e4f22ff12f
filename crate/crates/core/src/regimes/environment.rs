//! Regimes for the three random-environment applications. Each one is reduced
//! to [`classify_theorem2`] on a process ξ built from the environment K.

use std::sync::Arc;

use serde::Serialize;

use super::theorem::{classify_theorem2, RegimeLabel, RegimeReport};
use crate::error::{Error, Result};
use crate::estimator::TargetFunction;
use crate::levy::{Domain, ExponentProfile, LaplaceExponent, LevySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Application {
    Explosion,
    Extinction,
    Logistic,
    DiffusionMax,
}

/// Analytics of the environment exponent κ and the regime of one application.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvironmentReport {
    pub application: Application,
    pub kappa_domain: Domain,
    /// κ′(0+)
    pub m: f64,
    /// κ′(1), when 1 is inside the domain
    pub m1: Option<f64>,
    pub kappa_one: Option<f64>,
    /// argmin of κ on [0, θ_K⁺)
    pub tau_k: Option<f64>,
    pub kappa_tau: Option<f64>,
    /// regime name for this application
    pub regime: String,
    pub label: RegimeLabel,
    pub r: f64,
    pub gamma: Option<f64>,
    pub gamma_range: Option<(f64, f64)>,
    /// report for the reduced process ξ
    pub reduced: RegimeReport,
    pub notes: Vec<String>,
}

impl EnvironmentReport {
    fn build(application: Application, env: &LevySpec, reduced: RegimeReport, regime: &str) -> Result<Self> {
        let profile = ExponentProfile::analyse(Arc::new(env.clone()))?;
        let dom = profile.domain;
        let one_inside = dom.contains_interior(1.0);
        Ok(Self {
            application,
            kappa_domain: dom,
            m: profile.dpsi_zero,
            m1: one_inside.then(|| env.dpsi(1.0)),
            kappa_one: one_inside.then(|| env.laplace_exponent(1.0)),
            tau_k: profile.tau,
            kappa_tau: profile.psi_tau,
            regime: regime.to_string(),
            label: reduced.label,
            r: reduced.r,
            gamma: reduced.gamma,
            gamma_range: reduced.gamma_range,
            reduced,
            notes: Vec::new(),
        })
    }

    pub fn rate_string(&self) -> String {
        self.reduced.rate_string()
    }
}

fn five_names(label: RegimeLabel, names: [&'static str; 5]) -> &'static str {
    match label {
        RegimeLabel::I => names[0],
        RegimeLabel::II => names[1],
        RegimeLabel::IIIa => names[2],
        RegimeLabel::IIIb => names[3],
        RegimeLabel::IIIc => names[4],
        RegimeLabel::Boundary => "boundary",
    }
}

/// Exponent of βK: λ ↦ κ(βλ).
pub fn scaled_environment(env: &LevySpec, beta: f64) -> Result<LevySpec> {
    if beta > 0.0 {
        env.scaled(beta)
    } else if beta < 0.0 {
        env.negated().scaled(-beta)
    } else {
        Err(Error::InvalidInput("β must be nonzero".into()))
    }
}

/// Survival target 1 − exp(−z (βc_β x)^{−1/β}).
pub fn survival_target(beta: f64, c_beta: f64, z: f64) -> TargetFunction {
    TargetFunction::OneMinusExpPow { z, scale: beta * c_beta, p: 1.0 / beta }
}

/// Non-explosion target exp(−z (βc_β x)^{−1/β}) for β < 0.
pub fn nonexplosion_target(beta: f64, c_beta: f64, z: f64) -> TargetFunction {
    TargetFunction::ExpNegPow { z, scale: beta * c_beta, r: -1.0 / beta }
}

/// Regime of P_z(Z_t < ∞) for β ∈ (−1, 0).
///
/// The non-explosion probability is E[F(I_t(βK))] with F decaying faster than
/// any power, so (A2) holds for every p and only branches I, II and IIIc occur.
/// Since β < 0, ξ = βK drifts to +∞ exactly when K drifts to −∞.
pub fn classify_explosion(env: &LevySpec, beta: f64) -> Result<EnvironmentReport> {
    if !(beta > -1.0 && beta < 0.0) {
        return Err(Error::InvalidInput(format!("explosion needs β in (−1, 0), got {beta}")));
    }
    let xi = scaled_environment(env, beta)?;
    let xi_profile = ExponentProfile::analyse(Arc::new(xi.clone()))?;
    let theta = xi_profile.theta_plus();
    // any p works for (A2); pick one where ψ_ξ′(p) > 0 when ξ drifts to −∞
    let p = match xi_profile.tau {
        Some(tau) if xi_profile.dpsi_zero < 0.0 => {
            let room = if theta.is_finite() { (theta - 2.0 * tau) / 2.0 } else { 1.0 };
            if !(room > 0.0) {
                return Err(Error::Hypothesis(format!("need 2τ < θ⁺ for ξ = βK (τ = {tau}, θ⁺ = {theta})")));
            }
            tau + room.min(1.0)
        }
        None => return Err(Error::Hypothesis("κ has no interior minimum on the side used by βK".into())),
        _ => 1.0f64.min(0.5 * theta),
    };
    let target = nonexplosion_target(beta, 1.0 / beta, 1.0);
    let reduced = classify_theorem2(Arc::new(xi), &target, p)?;
    let name = five_names(
        reduced.label,
        ["subcritical-explosion", "critical-explosion", "unreachable", "unreachable", "supercritical-explosion"],
    );
    let mut rep = EnvironmentReport::build(Application::Explosion, env, reduced, name)?;
    // κ(βτ_ξ) is the relevant minimum; it lies on the negative half-line of κ
    if let (Some(t), Some(v)) = (xi_profile.tau, xi_profile.psi_tau) {
        if t > 0.0 {
            rep.notes.push(format!("minimum of κ on the negative side: κ({}) = {}", beta * t, v));
        }
    }
    Ok(rep)
}

/// Regime of P_z(Z_t > 0) for β ∈ (0, 1], via ξ = βK and p = 1/β.
pub fn classify_extinction(env: &LevySpec, beta: f64) -> Result<EnvironmentReport> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidInput(format!("extinction needs β in (0, 1], got {beta}")));
    }
    require_one_inside(env)?;
    let xi = scaled_environment(env, beta)?;
    let target = survival_target(beta, 1.0 / beta, 1.0);
    let reduced = classify_theorem2(Arc::new(xi), &target, 1.0 / beta)?;
    let name = five_names(
        reduced.label,
        ["supercritical", "critical", "strongly subcritical", "intermediate subcritical", "weakly subcritical"],
    );
    EnvironmentReport::build(Application::Extinction, env, reduced, name)
}

/// Regime of E_z[Z_t] for the logistic model, with F(x) = z(1 + kzx)^{−1} and p = 1.
pub fn classify_logistic(env: &LevySpec) -> Result<EnvironmentReport> {
    require_one_inside(env)?;
    let reduced = classify_theorem2(Arc::new(env.clone()), &TargetFunction::Rational { a: 1.0, b: 1.0 }, 1.0)?;
    let name = five_names(reduced.label, ["i", "ii", "iii-a", "iii-b", "iii-c"]);
    let mut rep = EnvironmentReport::build(Application::Logistic, env, reduced, name)?;
    if rep.label == RegimeLabel::II {
        // branch ii is an upper bound only
        rep.notes.push("O(t^{-1/2}) upper bound".into());
        rep.reduced.checklist.retain(|c| c.name != "θ⁻<0 required" && c.name != "(A2)");
    }
    Ok(rep)
}

/// Regime of P(max X > t) for the diffusion in the potential built from ξ and η.
pub fn classify_diffusion_max(xi: &LevySpec) -> Result<EnvironmentReport> {
    require_one_inside(xi)?;
    let reduced = classify_theorem2(Arc::new(xi.clone()), &TargetFunction::Rational { a: 1.0, b: 1.0 }, 1.0)?;
    let name = five_names(reduced.label, ["i", "ii", "iii-a", "iii-b", "iii-c"]);
    let mut rep = EnvironmentReport::build(Application::DiffusionMax, xi, reduced, name)?;
    if matches!(rep.label, RegimeLabel::IIIa | RegimeLabel::IIIb) {
        rep.notes.push("constant factorises as c·E[I_∞(η)] when E[I_∞(η)^{1+ε}] < ∞".into());
    }
    if rep.label == RegimeLabel::II {
        rep.reduced.checklist.retain(|c| c.name != "θ⁻<0 required" && c.name != "(A2)");
    }
    Ok(rep)
}

fn require_one_inside(env: &LevySpec) -> Result<()> {
    let (_, hi) = env.laplace_domain();
    if !(hi > 1.0) {
        return Err(Error::Hypothesis(format!("need 1 < θ⁺, got θ⁺ = {hi}")));
    }
    Ok(())
}
