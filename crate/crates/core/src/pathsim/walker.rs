//! Segment generator shared by path materialisation and streaming estimators.
//!
//! Between consecutive nodes the path is represented by the straight line from
//! the value just after the left node to the left limit at the right node. For
//! drift and jump parts this is exact; for the Brownian part it is the usual
//! grid interpolant.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::levy::{JumpMeasure, LevySpec};

/// Relative snapping distance (in units of the step) for required times.
pub const SNAP: f64 = 1e-9;

/// −expm1(−d)/d, continuous at 0.
#[inline]
pub fn phi(d: f64) -> f64 {
    if d.abs() < 1e-8 {
        1.0 - 0.5 * d
    } else {
        -(-d).exp_m1() / d
    }
}

/// One piece of path between two nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    /// ξ(t0), after any jump at t0
    pub x0: f64,
    /// ξ(t1−)
    pub x1: f64,
    /// jump at t1 (0 when none)
    pub jump: f64,
}

impl Segment {
    /// ∫_{t0}^{t1} e^{−c ξ_s} ds over the linear interpolant.
    #[inline]
    pub fn integral(&self, c: f64) -> f64 {
        let dt = self.t1 - self.t0;
        dt * (-c * self.x0).exp() * phi(c * (self.x1 - self.x0))
    }

    /// Same, with ξ shifted by `base` before exponentiating.
    #[inline]
    pub fn integral_shifted(&self, base: f64) -> f64 {
        let dt = self.t1 - self.t0;
        dt * (-(self.x0 - base)).exp() * phi(self.x1 - self.x0)
    }

    /// Interpolated value at s ∈ [t0, t1).
    #[inline]
    pub fn value_at(&self, s: f64) -> f64 {
        let dt = self.t1 - self.t0;
        if dt <= 0.0 {
            return self.x0;
        }
        self.x0 + (self.x1 - self.x0) * ((s - self.t0) / dt)
    }
}

/// Streams segments of one Lévy path.
pub struct Walker<'a, R: Rng + ?Sized> {
    drift: f64,
    sigma: f64,
    jumps: &'a JumpMeasure,
    rate: f64,
    step: f64,
    horizon: f64,
    extras: &'a [f64],
    forced: &'a [(f64, f64)],
    rng: &'a mut R,
    // state
    t: f64,
    w: f64,
    jsum: f64,
    k: u64,
    e: usize,
    f: usize,
    next_random_jump: f64,
    done: bool,
}

impl<'a, R: Rng + ?Sized> Walker<'a, R> {
    /// `extras` must be sorted; they become nodes. `forced` holds extra jumps
    /// `(time, size)` sorted by time. `horizon` may be infinite.
    pub fn new(
        spec: &'a LevySpec,
        horizon: f64,
        step: f64,
        extras: &'a [f64],
        forced: &'a [(f64, f64)],
        rng: &'a mut R,
    ) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if extras.windows(2).any(|w| w[1] < w[0]) || forced.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::InvalidInput("required times must be sorted".into()));
        }
        if forced.iter().any(|j| !(j.0 > 0.0 && j.0 <= horizon)) {
            return Err(Error::InvalidInput("forced jump times must lie in (0, horizon]".into()));
        }
        let rate = spec.jump_rate();
        let mut w = Walker {
            drift: spec.path_drift(),
            sigma: spec.gaussian2().sqrt(),
            jumps: spec.jumps(),
            rate,
            step,
            horizon,
            extras,
            forced,
            rng,
            t: 0.0,
            w: 0.0,
            jsum: 0.0,
            k: 1,
            e: 0,
            f: 0,
            next_random_jump: f64::INFINITY,
            done: false,
        };
        while w.e < extras.len() && extras[w.e] <= SNAP * step {
            w.e += 1;
        }
        w.next_random_jump = w.draw_jump_gap();
        Ok(w)
    }

    fn draw_jump_gap(&mut self) -> f64 {
        if self.rate > 0.0 {
            let e: f64 = Exp1.sample(self.rng);
            self.t + e / self.rate
        } else {
            f64::INFINITY
        }
    }

    /// Current value ξ(t) (right-continuous).
    #[inline]
    pub fn value(&self) -> f64 {
        self.drift * self.t + self.w + self.jsum
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Next deterministic node and whether it consumes the base grid point.
    fn next_node(&self) -> (f64, bool, bool) {
        let snap = SNAP * self.step;
        let base = self.k as f64 * self.step;
        let (mut node, mut take_base, mut take_extra) = (base, true, false);
        if self.e < self.extras.len() {
            let x = self.extras[self.e];
            if x <= base + snap {
                node = x;
                take_extra = true;
                take_base = (x - base).abs() <= snap;
            }
        }
        if node >= self.horizon - snap {
            node = self.horizon;
        }
        (node, take_base, take_extra)
    }

    pub fn next_segment(&mut self) -> Option<Segment> {
        if self.done {
            return None;
        }
        let (node, take_base, take_extra) = self.next_node();
        let forced_t = self.forced.get(self.f).map(|j| j.0).unwrap_or(f64::INFINITY);
        let jump_t = self.next_random_jump.min(forced_t);
        let x0 = self.value();
        let t0 = self.t;
        let (t1, is_jump) = if jump_t < node && jump_t > t0 { (jump_t, true) } else { (node, false) };

        let dt = t1 - t0;
        if self.sigma > 0.0 {
            let z: f64 = StandardNormal.sample(self.rng);
            self.w += self.sigma * dt.sqrt() * z;
        }
        self.t = t1;
        let x1 = self.value();

        let mut jump = 0.0;
        if is_jump {
            if forced_t <= self.next_random_jump {
                jump = self.forced[self.f].1;
                self.f += 1;
            } else {
                jump = self.jumps.sample_size(self.rng);
                self.next_random_jump = self.draw_jump_gap();
            }
            self.jsum += jump;
        } else {
            if take_base {
                self.k += 1;
            }
            if take_extra {
                self.e += 1;
                while self.e < self.extras.len() && self.extras[self.e] <= t1 + SNAP * self.step {
                    self.e += 1;
                }
            }
            if t1 >= self.horizon {
                self.done = true;
            }
        }
        // forced jumps at node times
        while self.f < self.forced.len() && (self.forced[self.f].0 - t1).abs() <= SNAP * self.step {
            jump += self.forced[self.f].1;
            self.jsum += self.forced[self.f].1;
            self.f += 1;
        }
        Some(Segment { t0, t1, x0, x1, jump })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    #[test]
    fn phi_is_smooth_at_zero() {
        assert_eq!(phi(0.0), 1.0);
        assert!((phi(1e-9) - phi(-1e-9)).abs() < 1e-8);
        assert!((phi(1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn nodes_cover_grid_and_required_times() {
        let spec = LevySpec::brownian(1.0, 0.0).unwrap();
        let mut rng = StreamFactory::new(1).stream("w", 0);
        let extras = [0.25, 0.3, 1.0];
        let mut w = Walker::new(&spec, 1.0, 0.1, &extras, &[], &mut rng).unwrap();
        let mut ends = vec![];
        while let Some(s) = w.next_segment() {
            ends.push(s.t1);
        }
        assert_eq!(ends.len(), 11);
        assert!(ends.contains(&0.25));
        assert_eq!(*ends.last().unwrap(), 1.0);
        assert!(ends.windows(2).all(|p| p[1] > p[0]));
    }
}
