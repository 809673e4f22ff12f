use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Walker;
use crate::error::{Error, Result};
use crate::levy::{LaplaceExponent, LevySpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerpetuityOptions {
    pub step: f64,
    pub eps_tail: f64,
    /// give up beyond this horizon
    pub max_horizon: f64,
}

impl Default for PerpetuityOptions {
    fn default() -> Self {
        Self { step: 0.01, eps_tail: 1e-6, max_horizon: 1e4 }
    }
}

/// Truncated draw of I_∞ = ∫₀^∞ e^{−ξ_s} ds. No tail correction is added.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerpetuitySample {
    pub value: f64,
    pub horizon: f64,
    /// Fixed horizon: bound on the expected remainder. Adaptive: e^{−ξ_T},
    /// the factor in front of an independent copy of I_∞ in the remainder.
    pub tail_bound: f64,
    pub adaptive: bool,
}

/// Horizon T with e^{Tψ(−1)}/|ψ(−1)| = ε, for ψ(−1) < 0.
pub fn fixed_horizon(psi_minus_one: f64, eps: f64) -> f64 {
    (eps * psi_minus_one.abs()).ln() / psi_minus_one
}

/// When ψ(−1) < 0 the path is run to the fixed horizon above. Otherwise the
/// path is extended in unit chunks until e^{−ξ_s} ≤ ε I_s.
pub fn sample_i_infinity<R: Rng + ?Sized>(
    spec: &LevySpec,
    opts: &PerpetuityOptions,
    rng: &mut R,
) -> Result<PerpetuitySample> {
    let drift0 = spec.dpsi(0.0);
    if !(drift0 > 0.0) {
        return Err(Error::Hypothesis(format!("I_∞ needs ψ′(0+) > 0, got {drift0}")));
    }
    if !(opts.eps_tail > 0.0 && opts.eps_tail < 1.0) {
        return Err(Error::InvalidInput(format!("eps_tail must lie in (0, 1), got {}", opts.eps_tail)));
    }
    let psi_m1 = spec.laplace_exponent(-1.0);
    if psi_m1.is_finite() && psi_m1 < 0.0 {
        let horizon = fixed_horizon(psi_m1, opts.eps_tail).max(opts.step);
        let mut w = Walker::new(spec, horizon, opts.step, &[], &[], rng)?;
        let mut acc = 0.0;
        while let Some(seg) = w.next_segment() {
            acc += seg.integral(1.0);
        }
        return Ok(PerpetuitySample { value: acc, horizon, tail_bound: opts.eps_tail, adaptive: false });
    }
    let mut w = Walker::new(spec, opts.max_horizon, opts.step, &[], &[], rng)?;
    let mut acc = 0.0;
    let mut next_check = 1.0;
    while let Some(seg) = w.next_segment() {
        acc += seg.integral(1.0);
        if seg.t1 >= next_check {
            let x = seg.x1 + seg.jump;
            let tail = (-x).exp();
            if tail <= opts.eps_tail * acc {
                return Ok(PerpetuitySample { value: acc, horizon: seg.t1, tail_bound: tail, adaptive: true });
            }
            next_check = seg.t1.floor() + 1.0;
        }
    }
    Err(Error::TailUnstable { horizon: opts.max_horizon })
}
