//! Jump-measure families and their contributions to the Laplace exponent.

use rand::{Rng, RngExt};
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::Cutoff;
use crate::error::{Error, Result};
use crate::quad;

const QUAD_ABS: f64 = 1e-13;
const QUAD_REL: f64 = 1e-12;
/// exp overflows past this argument
const EXP_MAX: f64 = 709.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMass {
    pub size: f64,
    pub rate: f64,
}

/// Lévy measure Π. Every family is of finite activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpMeasure {
    None,
    PointMasses {
        masses: Vec<PointMass>,
    },
    /// Positive jumps arrive at intensity `rate_pos` with Exp(mean `mean_pos`)
    /// sizes; negative jumps likewise with `rate_neg` and `mean_neg`.
    TwoSidedExponential {
        rate_pos: f64,
        mean_pos: f64,
        rate_neg: f64,
        mean_neg: f64,
    },
    /// Density tabulated on an increasing grid. Between nodes with positive
    /// values the density is interpolated log-linearly (so exponential tails
    /// are reproduced exactly); next to a zero node it is interpolated
    /// linearly. Π vanishes outside the grid.
    TabulatedDensity {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Truncated mean ∫ x ℓ(x) e^{-x/m}/m dx over x > 0.
fn exp_truncated_mean(mean: f64, cutoff: Cutoff) -> f64 {
    match cutoff {
        Cutoff::Identity => mean,
        Cutoff::Indicator1 => mean - (mean + 1.0) * (-1.0 / mean).exp(),
    }
}

impl JumpMeasure {
    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        match self {
            JumpMeasure::None => Ok(()),
            JumpMeasure::PointMasses { masses } => {
                for pm in masses {
                    if !(pm.rate > 0.0 && pm.rate.is_finite()) {
                        return bad(format!("point mass rate must be positive, got {}", pm.rate));
                    }
                    if !(pm.size.is_finite() && pm.size != 0.0) {
                        return bad(format!("point mass size must be finite and nonzero, got {}", pm.size));
                    }
                }
                Ok(())
            }
            JumpMeasure::TwoSidedExponential { rate_pos, mean_pos, rate_neg, mean_neg } => {
                for (name, v) in [
                    ("rate_pos", rate_pos),
                    ("mean_pos", mean_pos),
                    ("rate_neg", rate_neg),
                    ("mean_neg", mean_neg),
                ] {
                    if !(*v > 0.0 && v.is_finite()) {
                        return bad(format!("{name} must be positive and finite, got {v}"));
                    }
                }
                Ok(())
            }
            JumpMeasure::TabulatedDensity { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return bad("tabulated density needs matching grid/values of length ≥ 2".into());
                }
                if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("tabulated grid must be finite and strictly increasing".into());
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("tabulated density values must be finite and nonnegative".into());
                }
                Ok(())
            }
        }
    }

    pub fn has_density(&self) -> bool {
        matches!(self, JumpMeasure::TwoSidedExponential { .. } | JumpMeasure::TabulatedDensity { .. })
    }

    pub fn is_empty(&self) -> bool {
        match self {
            JumpMeasure::None => true,
            JumpMeasure::PointMasses { masses } => masses.is_empty(),
            JumpMeasure::TabulatedDensity { values, .. } => values.iter().all(|v| *v == 0.0),
            JumpMeasure::TwoSidedExponential { .. } => false,
        }
    }

    /// Jump sizes of a PointMasses family all lie on a common lattice dℤ.
    pub fn is_lattice(&self) -> bool {
        match self {
            JumpMeasure::None => true,
            JumpMeasure::PointMasses { masses } => {
                let Some(first) = masses.first() else { return true };
                masses.iter().all(|pm| {
                    let r = pm.size / first.size;
                    (1..=1000).any(|den| {
                        let num = r * den as f64;
                        (num - num.round()).abs() < 1e-9 * den as f64
                    })
                })
            }
            _ => false,
        }
    }

    /// (θ⁻, θ⁺) of the jump part alone.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            JumpMeasure::TwoSidedExponential { mean_pos, mean_neg, .. } => (-1.0 / mean_neg, 1.0 / mean_pos),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn total_rate(&self) -> f64 {
        match self {
            JumpMeasure::None => 0.0,
            JumpMeasure::PointMasses { masses } => masses.iter().map(|m| m.rate).sum(),
            JumpMeasure::TwoSidedExponential { rate_pos, rate_neg, .. } => rate_pos + rate_neg,
            JumpMeasure::TabulatedDensity { grid, values } => Tabulated::new(grid, values).cell_masses().iter().sum(),
        }
    }

    /// ∫ x ℓ(x) Π(dx), the compensator rate removed from the drift.
    pub fn compensator(&self, cutoff: Cutoff) -> f64 {
        match self {
            JumpMeasure::None => 0.0,
            JumpMeasure::PointMasses { masses } => {
                masses.iter().map(|m| m.rate * m.size * cutoff.weight(m.size)).sum()
            }
            JumpMeasure::TwoSidedExponential { rate_pos, mean_pos, rate_neg, mean_neg } => {
                rate_pos * exp_truncated_mean(*mean_pos, cutoff) - rate_neg * exp_truncated_mean(*mean_neg, cutoff)
            }
            JumpMeasure::TabulatedDensity { grid, values } => Tabulated::new(grid, values)
                .integrate(|x| x * cutoff.weight(x), cutoff)
                .unwrap_or(f64::NAN),
        }
    }

    /// ∫ (e^{λx} − 1 − λxℓ(x)) Π(dx); +∞ outside the domain.
    pub fn psi(&self, lambda: f64, cutoff: Cutoff) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        match self {
            JumpMeasure::None => 0.0,
            JumpMeasure::PointMasses { masses } => masses
                .iter()
                .map(|m| {
                    let y = lambda * m.size;
                    if y > EXP_MAX {
                        f64::INFINITY
                    } else {
                        m.rate * (y.exp_m1() - y * cutoff.weight(m.size))
                    }
                })
                .sum(),
            JumpMeasure::TwoSidedExponential { rate_pos, mean_pos, rate_neg, mean_neg } => {
                let (lo, hi) = self.domain();
                if lambda <= lo || lambda >= hi {
                    return f64::INFINITY;
                }
                let up = 1.0 - lambda * mean_pos;
                let dn = 1.0 + lambda * mean_neg;
                rate_pos * (lambda * mean_pos / up - lambda * exp_truncated_mean(*mean_pos, cutoff))
                    + rate_neg * (-lambda * mean_neg / dn + lambda * exp_truncated_mean(*mean_neg, cutoff))
            }
            JumpMeasure::TabulatedDensity { grid, values } => {
                let tab = Tabulated::new(grid, values);
                if tab.exp_overflows(lambda) {
                    return f64::INFINITY;
                }
                tab.integrate(|x| (lambda * x).exp_m1() - lambda * x * cutoff.weight(x), cutoff)
                    .unwrap_or(f64::INFINITY)
            }
        }
    }

    pub fn dpsi(&self, lambda: f64, cutoff: Cutoff) -> f64 {
        match self {
            JumpMeasure::None => 0.0,
            JumpMeasure::PointMasses { masses } => masses
                .iter()
                .map(|m| m.rate * m.size * ((lambda * m.size).exp() - cutoff.weight(m.size)))
                .sum(),
            JumpMeasure::TwoSidedExponential { rate_pos, mean_pos, rate_neg, mean_neg } => {
                let (lo, hi) = self.domain();
                if lambda <= lo || lambda >= hi {
                    return f64::NAN;
                }
                let up = 1.0 - lambda * mean_pos;
                let dn = 1.0 + lambda * mean_neg;
                rate_pos * (mean_pos / (up * up) - exp_truncated_mean(*mean_pos, cutoff))
                    + rate_neg * (-mean_neg / (dn * dn) + exp_truncated_mean(*mean_neg, cutoff))
            }
            JumpMeasure::TabulatedDensity { grid, values } => {
                let tab = Tabulated::new(grid, values);
                if tab.exp_overflows(lambda) {
                    return f64::NAN;
                }
                tab.integrate(|x| x * ((lambda * x).exp() - cutoff.weight(x)), cutoff)
                    .unwrap_or(f64::NAN)
            }
        }
    }

    pub fn d2psi(&self, lambda: f64, cutoff: Cutoff) -> f64 {
        match self {
            JumpMeasure::None => 0.0,
            JumpMeasure::PointMasses { masses } => masses
                .iter()
                .map(|m| m.rate * m.size * m.size * (lambda * m.size).exp())
                .sum(),
            JumpMeasure::TwoSidedExponential { rate_pos, mean_pos, rate_neg, mean_neg } => {
                let (lo, hi) = self.domain();
                if lambda <= lo || lambda >= hi {
                    return f64::INFINITY;
                }
                let up = 1.0 - lambda * mean_pos;
                let dn = 1.0 + lambda * mean_neg;
                2.0 * rate_pos * mean_pos * mean_pos / (up * up * up)
                    + 2.0 * rate_neg * mean_neg * mean_neg / (dn * dn * dn)
            }
            JumpMeasure::TabulatedDensity { grid, values } => {
                let tab = Tabulated::new(grid, values);
                if tab.exp_overflows(lambda) {
                    return f64::INFINITY;
                }
                tab.integrate(|x| x * x * (lambda * x).exp(), cutoff).unwrap_or(f64::INFINITY)
            }
        }
    }

    /// e^{λx} Π(dx), and the drift shift ∫ x ℓ(x) (e^{λx} − 1) Π(dx).
    pub fn tilt(&self, lambda: f64, cutoff: Cutoff) -> Result<(JumpMeasure, f64)> {
        Ok(match self {
            JumpMeasure::None => (JumpMeasure::None, 0.0),
            JumpMeasure::PointMasses { masses } => {
                let tilted: Vec<PointMass> = masses
                    .iter()
                    .map(|m| PointMass { size: m.size, rate: m.rate * (lambda * m.size).exp() })
                    .collect();
                let shift = masses
                    .iter()
                    .zip(&tilted)
                    .map(|(m, t)| m.size * cutoff.weight(m.size) * (t.rate - m.rate))
                    .sum();
                (JumpMeasure::PointMasses { masses: tilted }, shift)
            }
            JumpMeasure::TwoSidedExponential { rate_pos, mean_pos, rate_neg, mean_neg } => {
                let up = 1.0 - lambda * mean_pos;
                let dn = 1.0 + lambda * mean_neg;
                let (mp, cp) = (mean_pos / up, rate_pos / up);
                let (mn, cn) = (mean_neg / dn, rate_neg / dn);
                let shift = (cp * exp_truncated_mean(mp, cutoff) - rate_pos * exp_truncated_mean(*mean_pos, cutoff))
                    - (cn * exp_truncated_mean(mn, cutoff) - rate_neg * exp_truncated_mean(*mean_neg, cutoff));
                (
                    JumpMeasure::TwoSidedExponential { rate_pos: cp, mean_pos: mp, rate_neg: cn, mean_neg: mn },
                    shift,
                )
            }
            JumpMeasure::TabulatedDensity { grid, values } => {
                let tab = Tabulated::new(grid, values);
                if tab.exp_overflows(lambda) {
                    return Err(Error::Numerical(format!("tilt by {lambda} overflows the tabulated density")));
                }
                let shift = tab.integrate(|x| x * cutoff.weight(x) * (lambda * x).exp_m1(), cutoff)?;
                let values = grid.iter().zip(values).map(|(x, v)| v * (lambda * x).exp()).collect();
                (JumpMeasure::TabulatedDensity { grid: grid.clone(), values }, shift)
            }
        })
    }

    /// Π̄̄⁺(x) = ∫_{z>x} (z − x) Π(dz), for x ≥ 0.
    pub fn double_tail_pos(&self, x: f64) -> f64 {
        match self {
            JumpMeasure::None => 0.0,
            JumpMeasure::PointMasses { masses } => {
                masses.iter().filter(|m| m.size > x).map(|m| m.rate * (m.size - x)).sum()
            }
            JumpMeasure::TwoSidedExponential { rate_pos, mean_pos, .. } => rate_pos * mean_pos * (-x / mean_pos).exp(),
            JumpMeasure::TabulatedDensity { grid, values } => {
                let tab = Tabulated::new(grid, values);
                tab.integrate_from(x, f64::INFINITY, |z| z - x).unwrap_or(f64::NAN)
            }
        }
    }

    /// Π̄̄⁻(x) = ∫_{z<−x} (|z| − x) Π(dz), for x ≥ 0.
    pub fn double_tail_neg(&self, x: f64) -> f64 {
        match self {
            JumpMeasure::None => 0.0,
            JumpMeasure::PointMasses { masses } => {
                masses.iter().filter(|m| m.size < -x).map(|m| m.rate * (-m.size - x)).sum()
            }
            JumpMeasure::TwoSidedExponential { rate_neg, mean_neg, .. } => rate_neg * mean_neg * (-x / mean_neg).exp(),
            JumpMeasure::TabulatedDensity { grid, values } => {
                let tab = Tabulated::new(grid, values);
                tab.integrate_from(f64::NEG_INFINITY, -x, |z| -z - x).unwrap_or(f64::NAN)
            }
        }
    }

    /// Draws one jump size from Π / Π(ℝ).
    pub fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpMeasure::None => 0.0,
            JumpMeasure::PointMasses { masses } => {
                let total: f64 = masses.iter().map(|m| m.rate).sum();
                let mut u = rng.random::<f64>() * total;
                for m in masses {
                    if u < m.rate {
                        return m.size;
                    }
                    u -= m.rate;
                }
                masses.last().map(|m| m.size).unwrap_or(0.0)
            }
            JumpMeasure::TwoSidedExponential { rate_pos, mean_pos, rate_neg, mean_neg } => {
                let up = rng.random::<f64>() * (rate_pos + rate_neg) < *rate_pos;
                let e: f64 = Exp1.sample(rng);
                if up {
                    e * mean_pos
                } else {
                    -e * mean_neg
                }
            }
            JumpMeasure::TabulatedDensity { grid, values } => {
                let u1 = rng.random::<f64>();
                let u2 = rng.random::<f64>();
                Tabulated::new(grid, values).sample(u1, u2)
            }
        }
    }
}

/// View over a tabulated density.
pub(crate) struct Tabulated<'a> {
    grid: &'a [f64],
    values: &'a [f64],
}

impl<'a> Tabulated<'a> {
    pub fn new(grid: &'a [f64], values: &'a [f64]) -> Self {
        Self { grid, values }
    }

    fn cell_slope(&self, j: usize) -> Option<f64> {
        let (f0, f1) = (self.values[j], self.values[j + 1]);
        (f0 > 0.0 && f1 > 0.0).then(|| (f1.ln() - f0.ln()) / (self.grid[j + 1] - self.grid[j]))
    }

    pub fn density(&self, x: f64) -> f64 {
        let g = self.grid;
        if x < g[0] || x > g[g.len() - 1] {
            return 0.0;
        }
        let j = match g.partition_point(|v| *v <= x) {
            0 => 0,
            k if k >= g.len() => g.len() - 2,
            k => k - 1,
        };
        let dx = x - g[j];
        match self.cell_slope(j) {
            Some(s) => self.values[j] * (s * dx).exp(),
            None => {
                let w = dx / (g[j + 1] - g[j]);
                self.values[j] * (1.0 - w) + self.values[j + 1] * w
            }
        }
    }

    pub fn cell_masses(&self) -> Vec<f64> {
        (0..self.grid.len() - 1)
            .map(|j| {
                let dx = self.grid[j + 1] - self.grid[j];
                match self.cell_slope(j) {
                    Some(s) if (s * dx).abs() > 1e-12 => self.values[j] * (s * dx).exp_m1() / s,
                    Some(_) => self.values[j] * dx,
                    None => 0.5 * dx * (self.values[j] + self.values[j + 1]),
                }
            })
            .collect()
    }

    fn exp_overflows(&self, lambda: f64) -> bool {
        let reach = (lambda * self.grid[0]).max(lambda * self.grid[self.grid.len() - 1]);
        reach > EXP_MAX
    }

    /// ∫ g(x) Π(dx) with kinks of the cutoff placed on subinterval ends.
    pub fn integrate(&self, g: impl Fn(f64) -> f64, _cutoff: Cutoff) -> Result<f64> {
        self.integrate_from(f64::NEG_INFINITY, f64::INFINITY, g)
    }

    pub fn integrate_from(&self, lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
        let first = self.grid[0];
        let last = self.grid[self.grid.len() - 1];
        let lo = lo.max(first);
        let hi = hi.min(last);
        if lo >= hi {
            return Ok(0.0);
        }
        let mut breaks: Vec<f64> = self.grid.iter().copied().filter(|x| *x > lo && *x < hi).collect();
        breaks.extend([-1.0, 0.0, 1.0].into_iter().filter(|x| *x > lo && *x < hi));
        breaks.push(lo);
        breaks.push(hi);
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();
        quad::integrate_pieces(|x| g(x) * self.density(x), &breaks, QUAD_ABS, QUAD_REL)
    }

    /// Inverse-CDF draw: `u1` picks the cell, `u2` the position inside it.
    pub fn sample(&self, u1: f64, u2: f64) -> f64 {
        let masses = self.cell_masses();
        let total: f64 = masses.iter().sum();
        let mut target = u1 * total;
        let mut j = masses.len() - 1;
        for (k, m) in masses.iter().enumerate() {
            if target < *m {
                j = k;
                break;
            }
            target -= m;
        }
        let x0 = self.grid[j];
        let dx = self.grid[j + 1] - x0;
        match self.cell_slope(j) {
            Some(s) if (s * dx).abs() > 1e-12 => x0 + (u2 * (s * dx).exp_m1()).ln_1p() / s,
            Some(_) => x0 + u2 * dx,
            None => {
                let (f0, f1) = (self.values[j], self.values[j + 1]);
                let g = (f1 - f0) / dx;
                let m = masses[j];
                let y = 2.0 * u2 * m / (f0 + (f0 * f0 + 2.0 * g * u2 * m).max(0.0).sqrt());
                x0 + y.clamp(0.0, dx)
            }
        }
    }
}
