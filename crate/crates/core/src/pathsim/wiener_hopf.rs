use rand::{Rng, RngExt};
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::levy::LevySpec;

/// Supremum and infimum of ξ over [0, e_q) for an independent Exp(q) time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerHopfSample {
    pub m0: f64,
    pub i0: f64,
    pub horizon: f64,
}

/// Within each cell the Brownian part is a bridge, and its extrema are drawn
/// exactly given the endpoints, so no grid bias enters the extrema.
pub fn wiener_hopf_sample<R: Rng + ?Sized>(spec: &LevySpec, q: f64, step: f64, rng: &mut R) -> Result<WienerHopfSample> {
    if !(q > 0.0 && q.is_finite() && step > 0.0) {
        return Err(Error::InvalidInput(format!("need q > 0 and step > 0, got {q}, {step}")));
    }
    let e: f64 = Exp1.sample(rng);
    let horizon = e / q;
    let b = spec.path_drift();
    let var = spec.gaussian2();
    let sigma = var.sqrt();
    let rate = spec.jump_rate();
    let mut next_jump = if rate > 0.0 {
        let g: f64 = Exp1.sample(rng);
        g / rate
    } else {
        f64::INFINITY
    };
    let (mut t, mut x) = (0.0f64, 0.0f64);
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    while t < horizon {
        let end = (t + step).min(horizon).min(next_jump);
        let dt = end - t;
        let mut y = x + b * dt;
        if sigma > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            y += sigma * dt.sqrt() * z;
            let d2 = (y - x) * (y - x);
            let u1 = 1.0 - rng.random::<f64>();
            let u2 = 1.0 - rng.random::<f64>();
            let top = 0.5 * (x + y + (d2 - 2.0 * var * dt * u1.ln()).sqrt());
            let bot = 0.5 * (x + y - (d2 - 2.0 * var * dt * u2.ln()).sqrt());
            hi = hi.max(top);
            lo = lo.min(bot);
        } else {
            hi = hi.max(y);
            lo = lo.min(y);
        }
        x = y;
        t = end;
        if t == next_jump && t < horizon {
            x += spec.jumps().sample_size(rng);
            hi = hi.max(x);
            lo = lo.min(x);
            let g: f64 = Exp1.sample(rng);
            next_jump = t + g / rate;
        }
    }
    Ok(WienerHopfSample { m0: hi, i0: lo, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    #[test]
    fn signs_and_drift_only_case() {
        let spec = LevySpec::brownian(1.0, 0.0).unwrap();
        let f = StreamFactory::new(4);
        for r in 0..20 {
            let s = wiener_hopf_sample(&spec, 2.0, 0.1, &mut f.stream("wh", r)).unwrap();
            assert_eq!(s.i0, 0.0);
            assert!((s.m0 - s.horizon).abs() < 1e-12);
        }
    }

    #[test]
    fn brownian_supremum_mean() {
        // for ξ = B with unit variance, sup over Exp(q) is Exp(√(2q))
        let spec = LevySpec::brownian(0.0, 1.0).unwrap();
        let f = StreamFactory::new(4);
        let n = 20_000;
        let q = 2.0;
        let mean: f64 = (0..n).map(|r| wiener_hopf_sample(&spec, q, 0.1, &mut f.stream("wh", r)).unwrap().m0).sum::<f64>()
            / n as f64;
        let exact = 1.0 / (2.0 * q).sqrt();
        assert!((mean - exact).abs() < 0.02, "{mean} vs {exact}");
    }
}
