//! Path simulation, exponential functionals and the Poisson-skeleton,
//! Guivarc'h–Liu and Wiener–Hopf constructions built on top of them.

mod perpetuity;
mod sequences;
mod skeleton;
mod walker;
mod wiener_hopf;

pub use perpetuity::{sample_i_infinity, PerpetuityOptions, PerpetuitySample};
pub use sequences::{gl_sequences, GlSequences};
pub use skeleton::{poisson_skeleton, sandwich_check, PoissonSkeleton, SandwichMargins};
pub use walker::{phi, Segment, Walker, SNAP};
pub use wiener_hopf::{wiener_hopf_sample, WienerHopfSample};

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::levy::LevySpec;

/// Options for [`simulate_path_with`].
#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Times that must appear as grid nodes (sorted not required).
    pub required_times: Vec<f64>,
    /// Deterministic jumps `(time, size)` added on top of the random ones.
    pub forced_jumps: Vec<(f64, f64)>,
}

/// One simulated trajectory on [0, t].
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    /// node times, starting at 0 and ending at the horizon
    pub times: Vec<f64>,
    /// ξ at each node (right-continuous value)
    pub values: Vec<f64>,
    /// ξ just before each node; differs from `values` only at jumps
    pub left: Vec<f64>,
    /// `(time, size)` of every jump; each time is a node
    pub jumps: Vec<(f64, f64)>,
    /// running functional ∫₀^{tᵢ} e^{−ξ_s} ds
    pub running: Vec<f64>,
}

pub fn simulate_path<R: Rng + ?Sized>(spec: &LevySpec, t: f64, step: f64, rng: &mut R) -> Result<PathSample> {
    simulate_path_with(spec, t, step, &SimOptions::default(), rng)
}

pub fn simulate_path_with<R: Rng + ?Sized>(
    spec: &LevySpec,
    t: f64,
    step: f64,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<PathSample> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon must be positive and finite, got {t}")));
    }
    if !(step > 0.0 && step <= t) {
        return Err(Error::InvalidInput(format!("step must lie in (0, t], got {step}")));
    }
    let mut req = opts.required_times.clone();
    req.retain(|x| *x > 0.0 && *x <= t);
    req.sort_by(|a, b| a.total_cmp(b));
    let mut forced = opts.forced_jumps.clone();
    forced.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n_hint = (t / step).ceil() as usize + req.len() + 2;
    let mut p = PathSample {
        times: Vec::with_capacity(n_hint),
        values: Vec::with_capacity(n_hint),
        left: Vec::with_capacity(n_hint),
        jumps: Vec::new(),
        running: Vec::with_capacity(n_hint),
    };
    p.times.push(0.0);
    p.values.push(0.0);
    p.left.push(0.0);
    p.running.push(0.0);
    let mut walker = Walker::new(spec, t, step, &req, &forced, rng)?;
    let mut acc = 0.0;
    while let Some(seg) = walker.next_segment() {
        acc += seg.integral(1.0);
        p.times.push(seg.t1);
        p.left.push(seg.x1);
        p.values.push(seg.x1 + seg.jump);
        p.running.push(acc);
        if seg.jump != 0.0 {
            p.jumps.push((seg.t1, seg.jump));
        }
    }
    Ok(p)
}

impl PathSample {
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("path has nodes")
    }

    /// I_t at the horizon.
    pub fn expfun(&self) -> f64 {
        *self.running.last().expect("path has nodes")
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.times.len() - 1).map(move |i| Segment {
            t0: self.times[i],
            t1: self.times[i + 1],
            x0: self.values[i],
            x1: self.left[i + 1],
            jump: self.values[i + 1] - self.left[i + 1],
        })
    }

    /// ∫₀ᵗ e^{−c ξ_s} ds on the same interpolant.
    pub fn functional(&self, c: f64) -> f64 {
        let mut acc = 0.0;
        for s in self.segments() {
            acc += s.integral(c);
        }
        acc
    }

    /// Index of the node at time `s`, if any (within the snapping distance).
    pub fn node_index(&self, s: f64, tol: f64) -> Option<usize> {
        let k = self.times.partition_point(|x| *x < s - tol);
        (k < self.times.len() && (self.times[k] - s).abs() <= tol).then_some(k)
    }

    /// Keeps every `factor`-th node plus the horizon and all jump nodes, as if
    /// simulated on a coarser grid with the same randomness.
    pub fn coarsen(&self, factor: usize) -> PathSample {
        let n = self.times.len();
        let keep: Vec<usize> = (0..n)
            .filter(|&i| i % factor.max(1) == 0 || i == n - 1 || self.values[i] != self.left[i])
            .collect();
        let mut out = PathSample {
            times: keep.iter().map(|&i| self.times[i]).collect(),
            values: keep.iter().map(|&i| self.values[i]).collect(),
            left: keep.iter().map(|&i| self.left[i]).collect(),
            jumps: self.jumps.clone(),
            running: vec![0.0; keep.len()],
        };
        let mut acc = 0.0;
        for i in 1..keep.len() {
            let s = Segment {
                t0: out.times[i - 1],
                t1: out.times[i],
                x0: out.values[i - 1],
                x1: out.left[i],
                jump: 0.0,
            };
            acc += s.integral(1.0);
            out.running[i] = acc;
        }
        out
    }

    /// CSV dump with columns `time,xi,I`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,xi,I")?;
        for i in 0..self.times.len() {
            writeln!(w, "{},{},{}", self.times[i], self.values[i], self.running[i])?;
        }
        Ok(())
    }
}

/// Evaluates ξ_t and ∫₀ᵗ e^{−c ξ_s} ds for every `c` in `scales` at each of
/// the sorted `times`, streaming a single path. Writes
/// `[ξ, I_{c₁}, I_{c₂}, …]` per time into `out`.
pub fn observe<R: Rng + ?Sized>(
    spec: &LevySpec,
    times: &[f64],
    step: f64,
    scales: &[f64],
    rng: &mut R,
    out: &mut [f64],
) -> Result<()> {
    let width = 1 + scales.len();
    debug_assert_eq!(out.len(), width * times.len());
    let horizon = *times.last().ok_or_else(|| Error::InvalidInput("no evaluation times".into()))?;
    let mut walker = Walker::new(spec, horizon, step, times, &[], rng)?;
    let mut acc = [0.0f64; 8];
    assert!(scales.len() <= acc.len(), "at most 8 scales");
    let mut k = 0;
    let tol = SNAP * step;
    while let Some(seg) = walker.next_segment() {
        for (a, c) in acc.iter_mut().zip(scales) {
            *a += seg.integral(*c);
        }
        while k < times.len() && (times[k] - seg.t1).abs() <= tol {
            let row = &mut out[k * width..(k + 1) * width];
            row[0] = seg.x1 + seg.jump;
            row[1..].copy_from_slice(&acc[..scales.len()]);
            k += 1;
        }
    }
    if k != times.len() {
        return Err(Error::Numerical("evaluation time missed by the grid".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{JumpMeasure, PointMass};
    use crate::rng::StreamFactory;

    fn rng() -> crate::rng::Stream {
        StreamFactory::new(11).stream("test", 0)
    }

    #[test]
    fn pure_drift_path_is_exact() {
        let spec = LevySpec::brownian(1.0, 0.0).unwrap();
        let p = simulate_path(&spec, 1.0, 0.1, &mut rng()).unwrap();
        for (t, x) in p.times.iter().zip(&p.values) {
            assert_eq!(t, x);
        }
        assert!((p.expfun() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn forced_jump_functional() {
        let spec = LevySpec::brownian(0.0, 0.0).unwrap();
        let opts = SimOptions { forced_jumps: vec![(0.5, 2f64.ln())], ..Default::default() };
        let p = simulate_path_with(&spec, 1.0, 0.1, &opts, &mut rng()).unwrap();
        assert!((p.expfun() - 0.75).abs() < 1e-15);
        assert_eq!(p.jumps.len(), 1);
        assert!(p.times.contains(&0.5));
    }

    #[test]
    fn zero_process_gives_horizon() {
        let spec = LevySpec::brownian(0.0, 0.0).unwrap();
        let p = simulate_path(&spec, 3.7, 0.25, &mut rng()).unwrap();
        assert!((p.expfun() - 3.7).abs() < 1e-14);
    }

    #[test]
    fn drift_on_half_grid_matches_closed_form() {
        let spec = LevySpec::brownian(1.0, 0.0).unwrap();
        let opts = SimOptions { required_times: vec![0.5, 1.0, 1.5, 2.0], ..Default::default() };
        let p = simulate_path_with(&spec, 2.0, 0.5, &opts, &mut rng()).unwrap();
        assert!((p.expfun() - (1.0 - (-2.0f64).exp())).abs() <= 1e-12);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let spec = LevySpec::new(
            0.2,
            1.0,
            JumpMeasure::PointMasses { masses: vec![PointMass { size: -0.5, rate: 2.0 }] },
        )
        .unwrap();
        let a = simulate_path(&spec, 5.0, 0.01, &mut rng()).unwrap();
        let b = simulate_path(&spec, 5.0, 0.01, &mut rng()).unwrap();
        assert_eq!(a, b);
        assert!(!a.jumps.is_empty());
        assert!(a.running.windows(2).all(|w| w[1] >= w[0]));
        for (t, _) in &a.jumps {
            assert!(a.node_index(*t, 0.0).is_some());
        }
    }

    #[test]
    fn observe_matches_materialised_path() {
        let spec = LevySpec::new(
            0.2,
            1.0,
            JumpMeasure::TwoSidedExponential { rate_pos: 1.0, mean_pos: 0.3, rate_neg: 0.5, mean_neg: 0.4 },
        )
        .unwrap();
        let times = [1.0, 2.5, 4.0];
        let opts = SimOptions { required_times: times.to_vec(), ..Default::default() };
        let p = simulate_path_with(&spec, 4.0, 0.05, &opts, &mut rng()).unwrap();
        let mut out = vec![0.0; 9];
        observe(&spec, &times, 0.05, &[1.0, -1.0], &mut rng(), &mut out).unwrap();
        for (k, t) in times.iter().enumerate() {
            let i = p.node_index(*t, 1e-9).unwrap();
            assert_eq!(out[3 * k], p.values[i]);
            assert!((out[3 * k + 1] - p.running[i]).abs() <= 1e-12 * p.running[i]);
        }
        assert!((out[8] - p.functional(-1.0)).abs() <= 1e-12 * out[8]);
    }

    #[test]
    fn coarsening_reproduces_a_coarse_grid() {
        let spec = LevySpec::brownian(0.0, 0.0).unwrap();
        let p = simulate_path(&spec, 1.0, 0.01, &mut rng()).unwrap();
        let c = p.coarsen(10);
        assert_eq!(c.times.len(), 11);
        assert!((c.expfun() - 1.0).abs() < 1e-14);
    }
}
