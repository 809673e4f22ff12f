//! Lévy triples, their Laplace exponents, Esscher tilts and moment bounds.

mod jumps;
mod profile;

pub use jumps::{JumpMeasure, PointMass};
pub(crate) use profile::extended;
pub use profile::{find_tau, Domain, ExponentProfile, LaplaceExponent};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation function ℓ in the Lévy–Khintchine formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// ℓ(x) = 1 for |x| < 1, else 0
    Indicator1,
    /// ℓ ≡ 1
    Identity,
}

impl Cutoff {
    #[inline]
    pub fn weight(self, x: f64) -> f64 {
        match self {
            Cutoff::Identity => 1.0,
            Cutoff::Indicator1 => {
                if x.abs() < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Lévy triple (μ, ρ², Π) with its cutoff convention.
///
/// ψ(λ) = ½ρ²λ² + μλ + ∫ (e^{λx} − 1 − λxℓ(x)) Π(dx).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct LevySpec {
    drift: f64,
    gaussian2: f64,
    jumps: JumpMeasure,
    cutoff: Cutoff,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    drift: f64,
    #[serde(default)]
    gaussian2: f64,
    #[serde(default = "no_jumps")]
    jumps: JumpMeasure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cutoff: Option<Cutoff>,
}

fn no_jumps() -> JumpMeasure {
    JumpMeasure::None
}

impl TryFrom<RawSpec> for LevySpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        LevySpec::with_cutoff(raw.drift, raw.gaussian2, raw.jumps, raw.cutoff)
    }
}

impl From<LevySpec> for RawSpec {
    fn from(s: LevySpec) -> Self {
        RawSpec { drift: s.drift, gaussian2: s.gaussian2, jumps: s.jumps, cutoff: Some(s.cutoff) }
    }
}

impl LevySpec {
    /// Builds a spec with the default cutoff. Every supported family has a
    /// finite first moment, so ℓ ≡ 1 is chosen.
    pub fn new(drift: f64, gaussian2: f64, jumps: JumpMeasure) -> Result<Self> {
        Self::with_cutoff(drift, gaussian2, jumps, None)
    }

    pub fn with_cutoff(drift: f64, gaussian2: f64, jumps: JumpMeasure, cutoff: Option<Cutoff>) -> Result<Self> {
        if !drift.is_finite() {
            return Err(Error::InvalidSpec(format!("drift must be finite, got {drift}")));
        }
        if !(gaussian2.is_finite() && gaussian2 >= 0.0) {
            return Err(Error::InvalidSpec(format!("gaussian2 must be finite and ≥ 0, got {gaussian2}")));
        }
        jumps.validate()?;
        Ok(Self { drift, gaussian2, jumps, cutoff: cutoff.unwrap_or(Cutoff::Identity) })
    }

    /// Brownian motion with drift: ψ(λ) = ½σ²λ² + μλ.
    pub fn brownian(drift: f64, gaussian2: f64) -> Result<Self> {
        Self::new(drift, gaussian2, JumpMeasure::None)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }
    pub fn gaussian2(&self) -> f64 {
        self.gaussian2
    }
    pub fn jumps(&self) -> &JumpMeasure {
        &self.jumps
    }
    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    /// Same process written with another cutoff (the drift is adjusted).
    pub fn recut(&self, cutoff: Cutoff) -> Self {
        let shift = self.jumps.compensator(cutoff) - self.jumps.compensator(self.cutoff);
        Self { drift: self.drift + shift, cutoff, ..self.clone() }
    }

    /// Drift of the path between jumps: μ − ∫ xℓ(x) Π(dx).
    pub fn path_drift(&self) -> f64 {
        self.drift - self.jumps.compensator(self.cutoff)
    }

    pub fn jump_rate(&self) -> f64 {
        self.jumps.total_rate()
    }

    /// ψ(λ); +∞ outside the domain, exactly 0 at λ = 0.
    pub fn laplace_exponent(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        let j = self.jumps.psi(lambda, self.cutoff);
        if !j.is_finite() {
            return f64::INFINITY;
        }
        0.5 * self.gaussian2 * lambda * lambda + self.drift * lambda + j
    }

    pub fn laplace_domain(&self) -> (f64, f64) {
        self.jumps.domain()
    }

    /// Laplace exponent of −ξ.
    pub fn negated(&self) -> Self {
        let jumps = match &self.jumps {
            JumpMeasure::None => JumpMeasure::None,
            JumpMeasure::PointMasses { masses } => JumpMeasure::PointMasses {
                masses: masses.iter().map(|m| PointMass { size: -m.size, rate: m.rate }).collect(),
            },
            JumpMeasure::TwoSidedExponential { rate_pos, mean_pos, rate_neg, mean_neg } => {
                JumpMeasure::TwoSidedExponential {
                    rate_pos: *rate_neg,
                    mean_pos: *mean_neg,
                    rate_neg: *rate_pos,
                    mean_neg: *mean_pos,
                }
            }
            JumpMeasure::TabulatedDensity { grid, values } => JumpMeasure::TabulatedDensity {
                grid: grid.iter().rev().map(|x| -x).collect(),
                values: values.iter().rev().copied().collect(),
            },
        };
        Self { drift: -self.drift, gaussian2: self.gaussian2, jumps, cutoff: self.cutoff }
    }

    /// ξ scaled by c > 0: exponent λ ↦ ψ(cλ).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {c}")));
        }
        let jumps = match &self.jumps {
            JumpMeasure::None => JumpMeasure::None,
            JumpMeasure::PointMasses { masses } => JumpMeasure::PointMasses {
                masses: masses.iter().map(|m| PointMass { size: c * m.size, rate: m.rate }).collect(),
            },
            JumpMeasure::TwoSidedExponential { rate_pos, mean_pos, rate_neg, mean_neg } => {
                JumpMeasure::TwoSidedExponential {
                    rate_pos: *rate_pos,
                    mean_pos: c * mean_pos,
                    rate_neg: *rate_neg,
                    mean_neg: c * mean_neg,
                }
            }
            JumpMeasure::TabulatedDensity { grid, values } => JumpMeasure::TabulatedDensity {
                grid: grid.iter().map(|x| c * x).collect(),
                values: values.iter().map(|v| v / c).collect(),
            },
        };
        let base = self.recut(Cutoff::Identity);
        Self::with_cutoff(c * base.drift, c * c * self.gaussian2, jumps, Some(Cutoff::Identity))
    }

    /// Esscher transform: the returned spec has exponent z ↦ ψ(λ+z) − ψ(λ).
    pub fn esscher_tilt(&self, lambda: f64) -> Result<Self> {
        if lambda == 0.0 {
            return Ok(self.clone());
        }
        let (lo, hi) = self.laplace_domain();
        if !(lambda > lo && lambda < hi) || !self.laplace_exponent(lambda).is_finite() {
            return Err(Error::OutsideDomain { lambda, lower: lo, upper: hi });
        }
        let (jumps, shift) = self.jumps.tilt(lambda, self.cutoff)?;
        Ok(Self {
            drift: self.drift + self.gaussian2 * lambda + shift,
            gaussian2: self.gaussian2,
            jumps,
            cutoff: self.cutoff,
        })
    }

    /// Upper bound on E[I_t^{−q}] for t ∈ (0, 1]:
    /// t^{−q} e^{1 + max(ψ(q), 0)} / (e − 1) · (1 + qψ′(q) − ψ(q)).
    pub fn moment_bound(&self, q: f64, t: f64) -> Result<f64> {
        let (_, hi) = self.laplace_domain();
        if !(q > 0.0 && q < hi) {
            return Err(Error::OutsideDomain { lambda: q, lower: 0.0, upper: hi });
        }
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidInput(format!("moment bound needs t in (0, 1], got {t}")));
        }
        let psi = self.laplace_exponent(q);
        let dpsi = self.dpsi(q);
        if !(psi.is_finite() && dpsi.is_finite()) {
            return Err(Error::Numerical(format!("ψ′({q}) is undefined")));
        }
        let e = std::f64::consts::E;
        Ok(t.powf(-q) * (1.0 + psi.max(0.0)).exp() / (e - 1.0) * (1.0 + q * dpsi - psi))
    }

    /// Π̄̄⁺(x) = ∫_{z>x} (z − x) Π(dz).
    pub fn double_tail_pos(&self, x: f64) -> f64 {
        self.jumps.double_tail_pos(x)
    }

    /// Π̄̄⁻(x) = ∫_{z<−x} (|z| − x) Π(dz).
    pub fn double_tail_neg(&self, x: f64) -> f64 {
        self.jumps.double_tail_neg(x)
    }

    /// Copy with the jump measure written as a tabulated density on `grid`.
    /// Only defined for families with a density.
    pub fn tabulated(&self, grid: Vec<f64>) -> Result<Self> {
        let values = match &self.jumps {
            JumpMeasure::TwoSidedExponential { rate_pos, mean_pos, rate_neg, mean_neg } => grid
                .iter()
                .map(|&x| {
                    if x > 0.0 {
                        rate_pos / mean_pos * (-x / mean_pos).exp()
                    } else if x < 0.0 {
                        rate_neg / mean_neg * (x / mean_neg).exp()
                    } else {
                        0.5 * (rate_pos / mean_pos + rate_neg / mean_neg)
                    }
                })
                .collect(),
            JumpMeasure::TabulatedDensity { .. } => return Ok(self.clone()),
            _ => return Err(Error::InvalidInput("jump measure has no density".into())),
        };
        Self::with_cutoff(self.drift, self.gaussian2, JumpMeasure::TabulatedDensity { grid, values }, Some(self.cutoff))
    }
}

impl LaplaceExponent for LevySpec {
    fn psi(&self, lambda: f64) -> f64 {
        self.laplace_exponent(lambda)
    }

    fn dpsi(&self, lambda: f64) -> f64 {
        self.gaussian2 * lambda + self.drift + self.jumps.dpsi(lambda, self.cutoff)
    }

    fn d2psi(&self, lambda: f64) -> f64 {
        self.gaussian2 + self.jumps.d2psi(lambda, self.cutoff)
    }

    fn domain(&self) -> Domain {
        let (lo, hi) = self.laplace_domain();
        Domain { lower: lo, upper: hi, lower_closed: false, upper_closed: false }
    }

    /// Arithmetic only without a Gaussian part and with lattice point masses.
    fn is_non_arithmetic(&self) -> bool {
        self.gaussian2 > 0.0 || self.jumps.has_density() || !self.jumps.is_lattice()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_jump(size: f64, rate: f64) -> JumpMeasure {
        JumpMeasure::PointMasses { masses: vec![PointMass { size, rate }] }
    }

    #[test]
    fn brownian_root_at_one() {
        let s = LevySpec::brownian(-1.0, 2.0).unwrap();
        assert_eq!(s.laplace_exponent(1.0), 0.0);
        assert_eq!(s.laplace_exponent(0.0), 0.0);
    }

    #[test]
    fn unit_jump_compensated_exponent() {
        let s = LevySpec::new(0.0, 0.0, unit_jump(1.0, 1.0)).unwrap();
        let e = std::f64::consts::E;
        assert!((s.laplace_exponent(1.0) - (e - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn domains() {
        assert_eq!(LevySpec::brownian(1.0, 1.0).unwrap().laplace_domain(), (f64::NEG_INFINITY, f64::INFINITY));
        let e = LevySpec::new(
            0.0,
            0.0,
            JumpMeasure::TwoSidedExponential { rate_pos: 1.0, mean_pos: 1.0 / 3.0, rate_neg: 1.0, mean_neg: 0.5 },
        )
        .unwrap();
        assert_eq!(e.laplace_domain(), (-2.0, 3.0));
        let n = LevySpec::new(0.0, 0.0, unit_jump(-1.0, 1.0)).unwrap();
        assert_eq!(n.laplace_domain(), (f64::NEG_INFINITY, f64::INFINITY));
        assert_eq!(e.laplace_exponent(3.0), f64::INFINITY);
    }

    #[test]
    fn tilt_examples() {
        let s = LevySpec::brownian(-1.0, 2.0).unwrap();
        let t = s.esscher_tilt(0.5).unwrap();
        assert_eq!(t.drift(), 0.0);
        assert_eq!(t.gaussian2(), 2.0);
        assert_eq!(s.esscher_tilt(0.0).unwrap(), s);

        let j = LevySpec::new(0.0, 0.0, unit_jump(1.0, 1.0)).unwrap();
        let tj = j.esscher_tilt(2f64.ln()).unwrap();
        match tj.jumps() {
            JumpMeasure::PointMasses { masses } => assert!((masses[0].rate - 2.0).abs() < 1e-15),
            _ => panic!("family changed"),
        }
    }

    #[test]
    fn tilt_outside_domain_fails() {
        let e = LevySpec::new(
            0.0,
            0.0,
            JumpMeasure::TwoSidedExponential { rate_pos: 1.0, mean_pos: 1.0 / 3.0, rate_neg: 1.0, mean_neg: 0.5 },
        )
        .unwrap();
        assert!(matches!(e.esscher_tilt(3.5), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn moment_bound_examples() {
        let e = std::f64::consts::E;
        let s = LevySpec::brownian(-1.0, 2.0).unwrap();
        let b = s.moment_bound(1.0, 0.5).unwrap();
        assert!((b - 4.0 * e / (e - 1.0)).abs() < 1e-12);
        assert!((b - 6.32806).abs() < 1e-3);

        let s2 = LevySpec::brownian(0.0, 2.0).unwrap();
        let b2 = s2.moment_bound(1.0, 1.0).unwrap();
        assert!((b2 - 2.0 * e * e / (e - 1.0)).abs() < 1e-12);
        assert!((b2 - 8.6005).abs() < 1e-4);

        // the bracket tends to 1 as q ↓ 0
        let q = 1e-9;
        let bracket = 1.0 + q * s.dpsi(q) - s.laplace_exponent(q);
        assert!((bracket - 1.0).abs() < 1e-8);
    }

    #[test]
    fn json_round_trip_and_default_cutoff() {
        let s = LevySpec::from_json(
            r#"{"drift": 0.5, "gaussian2": 1.0, "jumps": {"family": "point_masses", "masses": [{"size": 2.0, "rate": 0.3}]}}"#,
        )
        .unwrap();
        assert_eq!(s.cutoff(), Cutoff::Identity);
        let back = LevySpec::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(LevySpec::from_json(r#"{"drift": 0.0, "sigma": 1.0}"#).is_err());
        assert!(LevySpec::from_json(r#"{"drift": 0.0, "gaussian2": -1.0}"#).is_err());
        assert!(LevySpec::from_json(
            r#"{"drift": 0.0, "jumps": {"family": "two_sided_exponential", "rate_pos": 0, "mean_pos": 1, "rate_neg": 1, "mean_neg": 1}}"#
        )
        .is_err());
    }

    #[test]
    fn recut_preserves_exponent() {
        let s = LevySpec::with_cutoff(
            0.3,
            0.5,
            JumpMeasure::TwoSidedExponential { rate_pos: 1.0, mean_pos: 0.4, rate_neg: 2.0, mean_neg: 0.7 },
            Some(Cutoff::Indicator1),
        )
        .unwrap();
        let r = s.recut(Cutoff::Identity);
        for l in [-1.0, -0.3, 0.4, 2.0] {
            assert!((s.laplace_exponent(l) - r.laplace_exponent(l)).abs() < 1e-12);
        }
    }

    #[test]
    fn negated_and_scaled_exponents() {
        let s = LevySpec::new(
            0.3,
            0.5,
            JumpMeasure::TwoSidedExponential { rate_pos: 1.0, mean_pos: 0.4, rate_neg: 2.0, mean_neg: 0.7 },
        )
        .unwrap();
        let n = s.negated();
        let c = s.scaled(1.5).unwrap();
        for l in [-0.9, -0.3, 0.4, 1.0] {
            assert!((n.laplace_exponent(l) - s.laplace_exponent(-l)).abs() < 1e-12);
            assert!((c.laplace_exponent(l) - s.laplace_exponent(1.5 * l)).abs() < 1e-12);
        }
    }

    #[test]
    fn arithmetic_flag() {
        assert!(!LevySpec::new(1.0, 0.0, unit_jump(1.0, 1.0)).unwrap().is_non_arithmetic());
        assert!(LevySpec::new(1.0, 0.1, unit_jump(1.0, 1.0)).unwrap().is_non_arithmetic());
    }
}
