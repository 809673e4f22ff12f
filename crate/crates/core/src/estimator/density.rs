//! Residual of the integral equation characterising the density h of I_∞.
//!
//! For ξ drifting to +∞ with finite mean, every v > 0 satisfies
//!
//! ```text
//! −ψ′(0) ∫_v^∞ h(x) dx + (ρ²/2) v h(v)
//!   + ∫_v^∞ Π̄̄⁺(ln(x/v)) h(x) dx + ∫_0^v Π̄̄⁻(ln(v/x)) h(x) dx
//!   + ∫_v^∞ h(x)/x dx = 0
//! ```
//!
//! with Π̄̄⁺(y) = ∫_{z>y} (z − y) Π(dz) and Π̄̄⁻(y) = ∫_{z<−y} (|z| − y) Π(dz).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy::{JumpMeasure, LaplaceExponent, LevySpec};
use crate::quad;

/// Samples required by [`density_residual`].
pub const MIN_DENSITY_SAMPLES: usize = 100_000;

const LOG_LO: f64 = -14.0; // ≈ 1e−6
const LOG_HI: f64 = 20.7; // ≈ 1e9

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualProfile {
    pub v: Vec<f64>,
    pub residual: Vec<f64>,
    pub method: &'static str,
}

impl ResidualProfile {
    pub fn max_abs(&self) -> f64 {
        self.residual.iter().fold(0.0f64, |a, r| a.max(r.abs()))
    }
}

/// Residual of the equation for a given density `h` at each `v`.
pub fn residual_for_density(spec: &LevySpec, h: &(dyn Fn(f64) -> f64 + Sync), v_grid: &[f64]) -> Result<Vec<f64>> {
    let mean = spec.dpsi(0.0);
    let has_jumps = !matches!(spec.jumps(), JumpMeasure::None) && !spec.jumps().is_empty();
    let (abs_tol, rel_tol) = (1e-12, 1e-10);
    // substitute x = e^y
    let upper = |g: &dyn Fn(f64) -> f64, v: f64| {
        quad::integrate(|y: f64| { let x = y.exp(); g(x) * x }, v.ln(), LOG_HI, abs_tol, rel_tol)
    };
    let lower = |g: &dyn Fn(f64) -> f64, v: f64| {
        quad::integrate(|y: f64| { let x = y.exp(); g(x) * x }, LOG_LO, v.ln(), abs_tol, rel_tol)
    };
    v_grid
        .iter()
        .map(|&v| {
            if !(v > 0.0) {
                return Err(Error::InvalidInput(format!("v must be positive, got {v}")));
            }
            let tail = upper(&|x| h(x), v)?;
            let inv = upper(&|x| h(x) / x, v)?;
            let mut r = -mean * tail + 0.5 * spec.gaussian2() * v * h(v) + inv;
            if has_jumps {
                r += upper(&|x| spec.double_tail_pos((x / v).ln()) * h(x), v)?;
                r += lower(&|x| spec.double_tail_neg((v / x).ln()) * h(x), v)?;
            }
            Ok(r)
        })
        .collect()
}

/// Density of I_∞ = ∫₀^∞ e^{−(2νs + 2B_s)} ds, i.e. of 1/(2 Gamma(ν)), for ν = 1.
pub fn dufresne_density(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-0.5 / x).exp() / (2.0 * x * x)
    }
}

/// Density of I from samples: Gaussian KDE of ln I with Silverman's bandwidth,
/// evaluated by binned convolution. Falls back to a 200-bin log histogram when
/// the bandwidth degenerates.
pub struct EmpiricalDensity {
    y0: f64,
    dy: f64,
    log_density: Vec<f64>,
    pub method: &'static str,
}

impl EmpiricalDensity {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let ys: Vec<f64> = samples.iter().filter(|x| **x > 0.0 && x.is_finite()).map(|x| x.ln()).collect();
        if ys.len() < 2 {
            return Err(Error::InsufficientData("need positive finite samples".into()));
        }
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let mut sorted = ys.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let q = |p: f64| sorted[((p * (n - 1.0)) as usize).min(sorted.len() - 1)];
        let iqr = q(0.75) - q(0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        let bw = 0.9 * spread * n.powf(-0.2);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);

        if !(bw > 0.0) || hi <= lo {
            let bins = 200;
            let width = ((hi - lo) / bins as f64).max(1e-12);
            let mut counts = vec![0.0; bins];
            for y in &ys {
                let k = (((y - lo) / width) as usize).min(bins - 1);
                counts[k] += 1.0;
            }
            let log_density = counts.iter().map(|c| (c / (n * width)).ln()).collect();
            return Ok(Self { y0: lo + 0.5 * width, dy: width, log_density, method: "histogram" });
        }

        let pad = 5.0 * bw;
        let m = 4096usize;
        let y0 = lo - pad;
        let dy = (hi - lo + 2.0 * pad) / (m - 1) as f64;
        let mut bins = vec![0.0; m];
        for y in &ys {
            let pos = (y - y0) / dy;
            let k = (pos.floor() as usize).min(m - 2);
            let w = pos - k as f64;
            bins[k] += 1.0 - w;
            bins[k + 1] += w;
        }
        let half = (pad / dy).ceil() as usize;
        let kernel: Vec<f64> = (0..=half)
            .map(|j| {
                let u = j as f64 * dy / bw;
                (-0.5 * u * u).exp() / (bw * (2.0 * std::f64::consts::PI).sqrt())
            })
            .collect();
        let mut dens = vec![0.0; m];
        for (i, d) in dens.iter_mut().enumerate() {
            let mut s = bins[i] * kernel[0];
            for j in 1..=half {
                if i >= j {
                    s += bins[i - j] * kernel[j];
                }
                if i + j < m {
                    s += bins[i + j] * kernel[j];
                }
            }
            *d = s / n;
        }
        let log_density = dens.iter().map(|d| d.ln()).collect();
        Ok(Self { y0, dy, log_density, method: "kde" })
    }

    /// Density of I at x > 0.
    pub fn density(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        let pos = (x.ln() - self.y0) / self.dy;
        if pos < 0.0 || pos > (self.log_density.len() - 1) as f64 {
            return 0.0;
        }
        let k = (pos.floor() as usize).min(self.log_density.len() - 2);
        let w = pos - k as f64;
        let (a, b) = (self.log_density[k], self.log_density[k + 1]);
        let fy = if a.is_finite() && b.is_finite() {
            (a * (1.0 - w) + b * w).exp()
        } else {
            a.exp() * (1.0 - w) + b.exp() * w
        };
        fy / x
    }
}

/// Residual profile of the empirical density of `samples` of I_∞.
pub fn density_residual(samples: &[f64], spec: &LevySpec, v_grid: &[f64]) -> Result<ResidualProfile> {
    if samples.len() < MIN_DENSITY_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "density residual needs {MIN_DENSITY_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(spec.dpsi(0.0) > 0.0) {
        return Err(Error::Hypothesis("I_∞ is finite only when ψ′(0+) > 0".into()));
    }
    let emp = EmpiricalDensity::from_samples(samples)?;
    let h = |x: f64| emp.density(x);
    let residual = residual_for_empirical(spec, &h, v_grid)?;
    Ok(ResidualProfile { v: v_grid.to_vec(), residual, method: emp.method })
}

/// Looser quadrature for piecewise-smooth empirical densities.
fn residual_for_empirical(spec: &LevySpec, h: &(dyn Fn(f64) -> f64 + Sync), v_grid: &[f64]) -> Result<Vec<f64>> {
    let mean = spec.dpsi(0.0);
    // trapezoid on a fine log grid is adequate for a piecewise-linear log density
    let m = 20_000;
    let dy = (LOG_HI - LOG_LO) / m as f64;
    let ys: Vec<f64> = (0..=m).map(|k| LOG_LO + k as f64 * dy).collect();
    v_grid
        .iter()
        .map(|&v| {
            let lv = v.ln();
            let mut tail = 0.0;
            let mut inv = 0.0;
            let mut jp = 0.0;
            let mut jn = 0.0;
            for (k, &y) in ys.iter().enumerate() {
                let w = if k == 0 || k == m { 0.5 * dy } else { dy };
                let x = y.exp();
                let hx = h(x) * x * w;
                if hx == 0.0 {
                    continue;
                }
                if y >= lv {
                    tail += hx;
                    inv += hx / x;
                    jp += spec.double_tail_pos(y - lv) * hx;
                } else {
                    jn += spec.double_tail_neg(lv - y) * hx;
                }
            }
            Ok(-mean * tail + 0.5 * spec.gaussian2() * v * h(v) + inv + jp + jn)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dufresne_spec() -> LevySpec {
        LevySpec::brownian(2.0, 4.0).unwrap()
    }

    #[test]
    fn dufresne_density_solves_equation() {
        let v: Vec<f64> = (0..50).map(|k| 0.1 + k as f64 * 0.1).collect();
        let r = residual_for_density(&dufresne_spec(), &dufresne_density, &v).unwrap();
        let worst = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(worst <= 1e-3, "max residual {worst}");
        assert!(worst < 1e-8);
    }

    #[test]
    fn zero_density_has_zero_residual() {
        let r = residual_for_density(&dufresne_spec(), &|_| 0.0, &[0.5, 1.0, 2.0]).unwrap();
        assert!(r.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn no_jump_tails_vanish() {
        let s = dufresne_spec();
        for y in [0.0, 0.5, 3.0] {
            assert_eq!(s.double_tail_pos(y), 0.0);
            assert_eq!(s.double_tail_neg(y), 0.0);
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            density_residual(&[1.0; 10], &dufresne_spec(), &[1.0]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn kde_of_exact_quantiles_tracks_density() {
        // deterministic sample: quantiles of 1/(2E)
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|k| {
                let u = (k as f64 + 0.5) / n as f64;
                // P(I ≤ x) = e^{−1/(2x)}
                -0.5 / u.ln()
            })
            .collect();
        let emp = EmpiricalDensity::from_samples(&xs).unwrap();
        for x in [0.3, 0.5, 1.0, 2.0] {
            let rel = (emp.density(x) - dufresne_density(x)).abs() / dufresne_density(x);
            assert!(rel < 0.05, "x = {x}: rel err {rel}");
        }
        let r = density_residual(&xs, &dufresne_spec(), &[0.5, 1.0, 2.0]).unwrap();
        assert!(r.max_abs() < 0.05, "{:?}", r.residual);
    }
}
