use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{PathSample, Segment};
use crate::error::{Error, Result};

/// Poisson sampling of a path at rate q, with segment extrema.
///
/// Segment n is [τₙ, τₙ₊₁) with τ₀ = 0; the last one is cut at the horizon.
/// Extrema are those of the path interpolant, so they are exact for the
/// functional computed on the same path.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSkeleton {
    pub q: f64,
    /// τ₁ < τ₂ < … inside (0, t)
    pub times: Vec<f64>,
    /// Sₙ = ξ(τₙ), starting with S₀ = 0
    pub walk: Vec<f64>,
    /// segment suprema Mₙ
    pub maxima: Vec<f64>,
    /// segment infima Iₙ
    pub minima: Vec<f64>,
    /// segment lengths
    pub lengths: Vec<f64>,
    /// m₀ = M₀ − ξ(0) ≥ 0
    pub m0: f64,
    /// i₀ = I₀ − ξ(0) ≤ 0
    pub i0: f64,
    /// Sₙ⁽⁺⁾ = Mₙ − m₀
    pub s_plus: Vec<f64>,
    /// Sₙ⁽⁻⁾ = Iₙ − i₀
    pub s_minus: Vec<f64>,
}

impl PoissonSkeleton {
    /// ∫₀ᵗ e^{−Y⁽⁺⁾_s} ds for the piecewise-constant walk Y⁽⁺⁾.
    pub fn y_plus_integral(&self) -> f64 {
        self.s_plus.iter().zip(&self.lengths).map(|(s, l)| (-s).exp() * l).sum()
    }

    pub fn y_minus_integral(&self) -> f64 {
        self.s_minus.iter().zip(&self.lengths).map(|(s, l)| (-s).exp() * l).sum()
    }

    /// e^{−m₀} ∫ e^{−Y⁽⁺⁾}: lower bound for I_t.
    pub fn lower_bound(&self) -> f64 {
        self.maxima.iter().zip(&self.lengths).map(|(m, l)| (-m).exp() * l).sum()
    }

    /// e^{−i₀} ∫ e^{−Y⁽⁻⁾}: upper bound for I_t.
    pub fn upper_bound(&self) -> f64 {
        self.minima.iter().zip(&self.lengths).map(|(m, l)| (-m).exp() * l).sum()
    }
}

pub fn poisson_skeleton<R: Rng + ?Sized>(path: &PathSample, q: f64, rng: &mut R) -> Result<PoissonSkeleton> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidInput(format!("skeleton rate must be positive, got {q}")));
    }
    let max_step = path.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if q * max_step > 1.0 {
        return Err(Error::RefineGrid { q, max_step: 1.0 / q });
    }
    let horizon = path.horizon();
    let mut times = Vec::new();
    let mut s = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        s += e / q;
        if s >= horizon {
            break;
        }
        times.push(s);
    }

    let nseg = times.len() + 1;
    let mut walk = Vec::with_capacity(nseg);
    let mut maxima = vec![f64::NEG_INFINITY; nseg];
    let mut minima = vec![f64::INFINITY; nseg];
    let mut lengths = Vec::with_capacity(nseg);
    walk.push(0.0);
    let bounds: Vec<f64> = std::iter::once(0.0).chain(times.iter().copied()).chain(std::iter::once(horizon)).collect();
    for w in bounds.windows(2) {
        lengths.push(w[1] - w[0]);
    }

    let mut n = 0usize;
    let upd = |n: usize, v: f64, maxima: &mut Vec<f64>, minima: &mut Vec<f64>| {
        if v > maxima[n] {
            maxima[n] = v;
        }
        if v < minima[n] {
            minima[n] = v;
        }
    };
    let segs: Vec<Segment> = path.segments().collect();
    upd(0, 0.0, &mut maxima, &mut minima);
    for seg in &segs {
        // Poisson times inside this cell split the segment sequence
        while n < times.len() && times[n] < seg.t1 {
            let v = seg.value_at(times[n]);
            upd(n, v, &mut maxima, &mut minima);
            n += 1;
            walk.push(v);
            upd(n, v, &mut maxima, &mut minima);
        }
        // left limit at the cell end belongs to the current segment
        upd(n, seg.x1, &mut maxima, &mut minima);
        let right = seg.x1 + seg.jump;
        if seg.t1 < horizon {
            upd(n, right, &mut maxima, &mut minima);
        }
    }
    let m0 = maxima[0];
    let i0 = minima[0];
    let s_plus = maxima.iter().map(|m| m - m0).collect();
    let s_minus = minima.iter().map(|m| m - i0).collect();
    Ok(PoissonSkeleton { q, times, walk, maxima, minima, lengths, m0, i0, s_plus, s_minus })
}

/// Slack on both sides of e^{−m₀}∫e^{−Y⁽⁺⁾} ≤ I_t ≤ e^{−i₀}∫e^{−Y⁽⁻⁾}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichMargins {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub lower_slack: f64,
    pub upper_slack: f64,
}

/// Fails when either slack is below −1e−9 (relative to max(1, I_t)).
pub fn sandwich_check(path: &PathSample, skel: &PoissonSkeleton) -> Result<SandwichMargins> {
    let value = path.expfun();
    let lower = (-skel.m0).exp() * skel.y_plus_integral();
    let upper = (-skel.i0).exp() * skel.y_minus_integral();
    let m = SandwichMargins { lower, value, upper, lower_slack: value - lower, upper_slack: upper - value };
    let tol = 1e-9 * value.max(1.0);
    if m.lower_slack < -tol {
        return Err(Error::SandwichViolation { side: "lower", excess: -m.lower_slack });
    }
    if m.upper_slack < -tol {
        return Err(Error::SandwichViolation { side: "upper", excess: -m.upper_slack });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevySpec;
    use crate::pathsim::simulate_path;
    use crate::rng::StreamFactory;

    #[test]
    fn monotone_drift_extrema() {
        let f = StreamFactory::new(5);
        for b in [1.5, -0.7] {
            let spec = LevySpec::brownian(b, 0.0).unwrap();
            let p = simulate_path(&spec, 10.0, 0.01, &mut f.stream("p", 0)).unwrap();
            let sk = poisson_skeleton(&p, 1.0, &mut f.stream("s", 0)).unwrap();
            let tau1 = sk.times.first().copied().unwrap_or(10.0);
            if b > 0.0 {
                assert!((sk.m0 - b * tau1).abs() < 1e-12);
                assert_eq!(sk.i0, 0.0);
            } else {
                assert_eq!(sk.m0, 0.0);
                assert!((sk.i0 - b * tau1).abs() < 1e-12);
            }
            let m = sandwich_check(&p, &sk).unwrap();
            assert!(m.lower_slack > 0.0 && m.upper_slack > 0.0);
        }
    }

    #[test]
    fn zero_process_has_tight_sandwich() {
        let f = StreamFactory::new(6);
        let spec = LevySpec::brownian(0.0, 0.0).unwrap();
        let p = simulate_path(&spec, 2.0, 0.1, &mut f.stream("p", 0)).unwrap();
        let sk = poisson_skeleton(&p, 3.0, &mut f.stream("s", 0)).unwrap();
        let m = sandwich_check(&p, &sk).unwrap();
        assert!((m.lower - 2.0).abs() < 1e-14 && (m.upper - 2.0).abs() < 1e-14);
        assert!(m.lower_slack.abs() < 1e-14 && m.upper_slack.abs() < 1e-14);
    }

    #[test]
    fn coarse_grid_requests_refinement() {
        let f = StreamFactory::new(6);
        let spec = LevySpec::brownian(0.0, 1.0).unwrap();
        let p = simulate_path(&spec, 2.0, 0.5, &mut f.stream("p", 0)).unwrap();
        assert!(matches!(poisson_skeleton(&p, 10.0, &mut f.stream("s", 0)), Err(Error::RefineGrid { .. })));
    }

    #[test]
    fn overshoots_have_signs_and_walk_decomposes() {
        let f = StreamFactory::new(8);
        let spec = LevySpec::brownian(0.3, 1.0).unwrap();
        for r in 0..50 {
            let p = simulate_path(&spec, 5.0, 0.01, &mut f.stream("p", r)).unwrap();
            let sk = poisson_skeleton(&p, 2.0, &mut f.stream("s", r)).unwrap();
            assert!(sk.i0 <= 0.0 && sk.m0 >= 0.0);
            for n in 0..sk.maxima.len() {
                assert!((sk.maxima[n] - (sk.s_plus[n] + sk.m0)).abs() < 1e-12);
                assert!((sk.minima[n] - (sk.s_minus[n] + sk.i0)).abs() < 1e-12);
                assert!(sk.minima[n] <= sk.walk[n] && sk.walk[n] <= sk.maxima[n]);
            }
            sandwich_check(&p, &sk).unwrap();
        }
    }
}
