use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy::{LaplaceExponent, LevySpec};

/// Exponents (η, κ̃, ϑ) for the perpetuity moment conditions, with κ̃ < ϑ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentTriple {
    pub eta: f64,
    pub kappa: f64,
    pub vartheta: f64,
}

impl MomentTriple {
    pub fn new(eta: f64, kappa: f64, vartheta: f64) -> Result<Self> {
        if !(eta > 0.0 && kappa > 0.0 && vartheta > 0.0) {
            return Err(Error::InvalidInput("η, κ̃ and ϑ must be positive".into()));
        }
        if !(kappa < vartheta) {
            return Err(Error::InvalidInput(format!("need κ̃ < ϑ, got {kappa} ≥ {vartheta}")));
        }
        Ok(Self { eta, kappa, vartheta })
    }
}

/// Finiteness of one expectation, with its exact value or an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentVerdict {
    pub finite: bool,
    pub value: Option<f64>,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentVerdicts {
    /// E[a₀^{κ̃}]
    pub a_kappa: MomentVerdict,
    /// E[a₀^{−η}]
    pub a_neg_eta: MomentVerdict,
    /// E[b₀^{η}]
    pub b_eta: MomentVerdict,
    /// E[a₀^{−η} b₀^{−ϑ}]
    pub mixed: MomentVerdict,
}

impl MomentVerdicts {
    pub fn all_finite(&self) -> bool {
        self.a_kappa.finite && self.a_neg_eta.finite && self.b_eta.finite && self.mixed.finite
    }
}

/// E[sup_{u≤T} e^{λξ_u}] ≤ e/(e−1) · e^{T max(ψ(λ),0)} · (1 + T(λψ′(λ) − ψ(λ))), by
/// Doob's L log L inequality for the Esscher martingale.
pub fn doob_sup_bound(spec: &LevySpec, lambda: f64, horizon: f64) -> f64 {
    let psi = spec.laplace_exponent(lambda);
    let dpsi = spec.dpsi(lambda);
    let e = std::f64::consts::E;
    e / (e - 1.0) * (horizon * psi.max(0.0)).exp() * (1.0 + horizon * (lambda * dpsi - psi))
}

/// Decides the four moment conditions at lattice rate q, with a₀ = e^{−ξ_{1/q}}
/// and b₀ = ∫₀^{1/q} e^{−ξ_s} ds.
pub fn moment_conditions(spec: &LevySpec, q: f64, triple: &MomentTriple) -> Result<MomentVerdicts> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidInput(format!("q must be positive, got {q}")));
    }
    let (lo, hi) = spec.laplace_domain();
    let inside = |l: f64| l > lo && l < hi && spec.laplace_exponent(l).is_finite();
    let h = 1.0 / q;
    let exact = |l: f64| {
        if inside(l) {
            MomentVerdict { finite: true, value: Some((spec.laplace_exponent(l) * h).exp()), exact: true }
        } else {
            MomentVerdict { finite: false, value: None, exact: true }
        }
    };
    let bound = |l: f64, prefactor: f64| {
        if inside(l) {
            MomentVerdict { finite: true, value: Some(prefactor * doob_sup_bound(spec, l, h)), exact: false }
        } else {
            MomentVerdict { finite: false, value: None, exact: false }
        }
    };
    let MomentTriple { eta, kappa, vartheta } = *triple;
    Ok(MomentVerdicts {
        a_kappa: exact(-kappa),
        a_neg_eta: exact(eta),
        // b₀ ≤ (1/q) sup e^{−ξ}
        b_eta: bound(-eta, h.powf(eta)),
        // b₀^{−ϑ} ≤ q^{ϑ} sup e^{ϑξ} and e^{ηξ_{1/q}} ≤ sup e^{ηξ}
        mixed: bound(eta + vartheta, q.powf(vartheta)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpMeasure;

    #[test]
    fn brownian_all_finite() {
        let s = LevySpec::brownian(0.3, 1.0).unwrap();
        let v = moment_conditions(&s, 2.0, &MomentTriple::new(5.0, 3.0, 7.0).unwrap()).unwrap();
        assert!(v.all_finite());
    }

    #[test]
    fn domain_excludes_mixed_moment() {
        let s = LevySpec::new(
            0.0,
            1.0,
            JumpMeasure::TwoSidedExponential { rate_pos: 1.0, mean_pos: 1.0 / 3.0, rate_neg: 1.0, mean_neg: 1.0 },
        )
        .unwrap();
        let v = moment_conditions(&s, 1.0, &MomentTriple::new(0.8, 0.5, 2.5).unwrap()).unwrap();
        assert!(!v.mixed.finite);
        assert!(v.a_kappa.finite && v.a_neg_eta.finite && v.b_eta.finite);
    }

    #[test]
    fn quadratic_exponent_values() {
        let s = LevySpec::brownian(-1.0, 2.0).unwrap();
        let v = moment_conditions(&s, 1.0, &MomentTriple::new(0.1, 0.5, 1.0).unwrap()).unwrap();
        assert!(v.all_finite());
        // ψ(−1/2) = 1/4 + 1/2
        assert!((v.a_kappa.value.unwrap() - 0.75f64.exp()).abs() < 1e-14);
        assert!((v.a_neg_eta.value.unwrap() - (0.01f64 - 0.1).exp()).abs() < 1e-14);
    }

    #[test]
    fn triple_ordering_enforced() {
        assert!(MomentTriple::new(0.1, 1.0, 0.5).is_err());
    }
}
