use super::{PathSample, SNAP};
use crate::error::{Error, Result};

/// Perpetuity sequences on the lattice k/q:
/// aₖ = e^{−(ξ_{(k+1)/q} − ξ_{k/q})}, bₖ = ∫_{k/q}^{(k+1)/q} e^{−(ξ_s − ξ_{k/q})} ds,
/// Aₖ = ∏_{j<k} aⱼ and Bₙ = Σ_{i<n} Aᵢ bᵢ.
#[derive(Debug, Clone, PartialEq)]
pub struct GlSequences {
    pub q: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// A₀ … A_N
    pub products: Vec<f64>,
    /// B₀ = 0, B₁, …, B_N
    pub partial: Vec<f64>,
    /// I at the lattice times, read off the path, for comparison with `partial`
    pub functional: Vec<f64>,
}

impl GlSequences {
    /// max relative |Bₙ − I_{n/q}| over n ≥ 1.
    pub fn max_rel_gap(&self) -> f64 {
        self.partial
            .iter()
            .zip(&self.functional)
            .skip(1)
            .map(|(b, i)| (b - i).abs() / i.abs())
            .fold(0.0, f64::max)
    }
}

/// Needs every multiple of 1/q up to the horizon to be a node of the path.
pub fn gl_sequences(path: &PathSample, q: f64) -> Result<GlSequences> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidInput(format!("lattice rate must be positive, got {q}")));
    }
    let horizon = path.horizon();
    let n = (horizon * q * (1.0 + 1e-12)).floor() as usize;
    if n == 0 {
        return Err(Error::GridMisaligned(format!("horizon {horizon} shorter than 1/q = {}", 1.0 / q)));
    }
    let min_step = path.times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let tol = SNAP * (1.0 / q).min(1.0).max(min_step);
    let mut idx = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let s = k as f64 / q;
        let i = path
            .node_index(s, tol)
            .ok_or_else(|| Error::GridMisaligned(format!("time {s} = {k}/q is not a grid node")))?;
        idx.push(i);
    }
    let segs: Vec<_> = path.segments().collect();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut products = Vec::with_capacity(n + 1);
    let mut partial = Vec::with_capacity(n + 1);
    products.push(1.0);
    partial.push(0.0);
    for k in 0..n {
        let (i0, i1) = (idx[k], idx[k + 1]);
        let base = path.values[i0];
        a.push((-(path.values[i1] - base)).exp());
        let mut bk = 0.0;
        for seg in &segs[i0..i1] {
            bk += seg.integral_shifted(base);
        }
        b.push(bk);
        // Aₖ is kept as e^{−ξ_{k/q}} so that rounding does not compound
        let ak = (-base).exp();
        partial.push(partial[k] + ak * bk);
        products.push((-path.values[i1]).exp());
    }
    let functional = idx.iter().map(|&i| path.running[i]).collect();
    Ok(GlSequences { q, a, b, products, partial, functional })
}
