use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Interval where ψ is finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domain {
    #[serde(serialize_with = "extended")]
    pub lower: f64,
    #[serde(serialize_with = "extended")]
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

/// Writes ±∞ as the strings `"inf"` / `"-inf"`; JSON has no infinities.
pub(crate) fn extended<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*x)
    }
}

impl Domain {
    pub fn contains_interior(&self, lambda: f64) -> bool {
        lambda > self.lower && lambda < self.upper
    }
}

/// Anything with a convex Laplace exponent. [`crate::LevySpec`] is the main
/// implementor; classifiers accept any implementor so that exponents with
/// restricted domains can be analysed too.
pub trait LaplaceExponent: Send + Sync {
    fn psi(&self, lambda: f64) -> f64;
    fn dpsi(&self, lambda: f64) -> f64;
    fn d2psi(&self, lambda: f64) -> f64;
    fn domain(&self) -> Domain;
    /// The law of ξ₁ is not supported on a lattice.
    fn is_non_arithmetic(&self) -> bool {
        true
    }
}

/// Gap kept from θ⁺ when searching for τ.
pub const BOUNDARY_EPS: f64 = 1e-9;

/// Cached analytics of ψ.
#[derive(Clone)]
pub struct ExponentProfile {
    pub domain: Domain,
    pub dpsi_zero: f64,
    /// argmin of ψ on [0, θ⁺); `None` when ψ′ < 0 on all of (0, θ⁺)
    pub tau: Option<f64>,
    pub psi_tau: Option<f64>,
    exponent: Arc<dyn LaplaceExponent>,
}

impl fmt::Debug for ExponentProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExponentProfile")
            .field("domain", &self.domain)
            .field("dpsi_zero", &self.dpsi_zero)
            .field("tau", &self.tau)
            .field("psi_tau", &self.psi_tau)
            .finish()
    }
}

impl ExponentProfile {
    /// Builds the profile; τ is left undefined rather than failing.
    pub fn analyse(exponent: Arc<dyn LaplaceExponent>) -> Result<Self> {
        let domain = exponent.domain();
        if !(domain.upper > 0.0) {
            return Err(Error::Hypothesis("θ⁺ must be positive".into()));
        }
        let dpsi_zero = exponent.dpsi(0.0);
        let tau = match locate_tau(exponent.as_ref(), dpsi_zero) {
            Ok(t) => Some(t),
            Err(Error::MinimumAtBoundary) => None,
            Err(e) => return Err(e),
        };
        let psi_tau = tau.map(|t| if t == 0.0 { 0.0 } else { exponent.psi(t) });
        Ok(Self { domain, dpsi_zero, tau, psi_tau, exponent })
    }

    pub fn exponent(&self) -> &dyn LaplaceExponent {
        self.exponent.as_ref()
    }
    pub fn psi(&self, lambda: f64) -> f64 {
        self.exponent.psi(lambda)
    }
    pub fn dpsi(&self, lambda: f64) -> f64 {
        self.exponent.dpsi(lambda)
    }
    pub fn d2psi(&self, lambda: f64) -> f64 {
        self.exponent.d2psi(lambda)
    }
    pub fn theta_minus(&self) -> f64 {
        self.domain.lower
    }
    pub fn theta_plus(&self) -> f64 {
        self.domain.upper
    }
}

/// Profile with a defined τ; fails when the minimum of ψ sits at θ⁺.
pub fn find_tau(exponent: Arc<dyn LaplaceExponent>) -> Result<ExponentProfile> {
    let p = ExponentProfile::analyse(exponent)?;
    if p.tau.is_none() {
        return Err(Error::MinimumAtBoundary);
    }
    Ok(p)
}

fn locate_tau(e: &dyn LaplaceExponent, dpsi_zero: f64) -> Result<f64> {
    if dpsi_zero >= 0.0 {
        return Ok(0.0);
    }
    let upper = e.domain().upper;
    let mut hi = if upper.is_finite() {
        let b = upper - BOUNDARY_EPS;
        if !(e.dpsi(b) > 0.0) {
            return Err(Error::MinimumAtBoundary);
        }
        b
    } else {
        let mut b = 1.0;
        while !(e.dpsi(b) > 0.0) {
            b *= 2.0;
            if b > 1e8 {
                return Err(Error::MinimumAtBoundary);
            }
        }
        b
    };
    let mut lo = 0.0;
    let mut x = 0.5 * hi;
    for _ in 0..200 {
        let d = e.dpsi(x);
        let dd = e.d2psi(x);
        if d.abs() < 1e-12 * dd.abs().max(1.0) {
            return Ok(x);
        }
        if d < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - d / dd;
        x = if dd > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(x);
        }
    }
    Err(Error::Numerical("τ search did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{JumpMeasure, LevySpec, PointMass};

    #[test]
    fn quadratic_tau() {
        let p = find_tau(Arc::new(LevySpec::brownian(-1.0, 2.0).unwrap())).unwrap();
        assert!((p.tau.unwrap() - 0.5).abs() < 1e-12);
        assert!((p.psi_tau.unwrap() + 0.25).abs() < 1e-12);

        let p = find_tau(Arc::new(LevySpec::brownian(1.0, 2.0).unwrap())).unwrap();
        assert_eq!(p.tau, Some(0.0));
        assert_eq!(p.psi_tau, Some(0.0));
    }

    #[test]
    fn jump_tau_is_ln2() {
        let s = LevySpec::new(-1.0, 0.0, JumpMeasure::PointMasses { masses: vec![PointMass { size: 1.0, rate: 1.0 }] })
            .unwrap();
        let p = find_tau(Arc::new(s)).unwrap();
        let ln2 = 2f64.ln();
        assert!((p.tau.unwrap() - ln2).abs() < 1e-12);
        assert!((p.psi_tau.unwrap() - (1.0 - 2.0 * ln2)).abs() < 1e-12);
    }

    struct Linear;
    impl LaplaceExponent for Linear {
        fn psi(&self, l: f64) -> f64 {
            -l
        }
        fn dpsi(&self, _: f64) -> f64 {
            -1.0
        }
        fn d2psi(&self, _: f64) -> f64 {
            0.0
        }
        fn domain(&self) -> Domain {
            Domain { lower: f64::NEG_INFINITY, upper: 1.0, lower_closed: false, upper_closed: true }
        }
    }

    #[test]
    fn minimum_at_boundary() {
        assert!(matches!(find_tau(Arc::new(Linear)), Err(Error::MinimumAtBoundary)));
        let p = ExponentProfile::analyse(Arc::new(Linear)).unwrap();
        assert!(p.tau.is_none());
    }
}
