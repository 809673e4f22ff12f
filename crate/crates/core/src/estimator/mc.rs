use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TargetFunction;
use crate::error::{Error, Result};
use crate::levy::LevySpec;
use crate::pathsim::{observe, Walker};
use crate::rng::{tags, Stream, StreamFactory};
use crate::stats::mean_stderr;

/// Replicas handed to one rayon task.
const CHUNK: usize = 64;

/// Runs `n` independent replicas, each writing `width` numbers. Replica `r`
/// draws from stream `(seed, tag, r)`; the buffer is index ordered, so the
/// output does not depend on the number of workers.
pub fn run_replicas<F>(factory: &StreamFactory, tag: &str, n: usize, width: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut Stream, &mut [f64]) -> Result<()> + Sync,
{
    let mut buf = vec![0.0; n * width];
    buf.par_chunks_mut(CHUNK * width).enumerate().try_for_each(|(c, chunk)| {
        for (j, row) in chunk.chunks_mut(width).enumerate() {
            let r = (c * CHUNK + j) as u64;
            let mut rng = factory.stream(tag, r);
            f(&mut rng, row)?;
        }
        Ok(())
    })?;
    Ok(buf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    /// accepted samples
    pub n: usize,
    /// non-finite samples dropped
    pub rejected: usize,
    pub tilt: Option<f64>,
    pub seed: u64,
}

impl McEstimate {
    /// Summarises `samples`, multiplying mean and stderr by `factor`.
    pub fn from_samples(t: f64, samples: impl Iterator<Item = f64>, factor: f64, tilt: Option<f64>, seed: u64) -> Self {
        let mut kept = Vec::new();
        let mut rejected = 0;
        for s in samples {
            if s.is_finite() {
                kept.push(s);
            } else {
                rejected += 1;
            }
        }
        let (m, se) = mean_stderr(&kept);
        McEstimate { t, mean: factor * m, stderr: factor * se, n: kept.len(), rejected, tilt, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McOptions {
    pub n: usize,
    pub step: f64,
    pub tilt: Option<f64>,
}

/// E[F(I_t)] at each of the increasing `times`, all read off the same paths.
///
/// With a tilt λ, paths are drawn under the Esscher measure and the estimator
/// is e^{tψ(λ)} · mean(e^{−λξ_t} F(I_t)).
pub fn mc_estimate_times(
    spec: &LevySpec,
    target: &TargetFunction,
    times: &[f64],
    opts: &McOptions,
    factory: &StreamFactory,
) -> Result<Vec<McEstimate>> {
    target.validate()?;
    if opts.n < 2 {
        return Err(Error::InvalidInput("need at least two replicas".into()));
    }
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times[0] <= 0.0 {
        return Err(Error::InvalidInput("evaluation times must be positive and increasing".into()));
    }
    let lambda = opts.tilt.unwrap_or(0.0);
    let sim = spec.esscher_tilt(lambda)?;
    let psi = spec.laplace_exponent(lambda);
    let width = 2 * times.len();
    let buf = run_replicas(factory, tags::PATH, opts.n, width, |rng, row| {
        observe(&sim, times, opts.step, &[1.0], rng, row)
    })?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let samples = buf.chunks(width).map(|row| {
                let (xi, i) = (row[2 * k], row[2 * k + 1]);
                (target.ln_eval(i) - lambda * xi).exp()
            });
            McEstimate::from_samples(t, samples, (t * psi).exp(), opts.tilt, factory.seed())
        })
        .collect())
}

pub fn mc_estimate(
    spec: &LevySpec,
    target: &TargetFunction,
    t: f64,
    opts: &McOptions,
    factory: &StreamFactory,
) -> Result<McEstimate> {
    Ok(mc_estimate_times(spec, target, &[t], opts, factory)?.remove(0))
}

/// Sample mean of e^{λξ_t − tψ(λ)}.
pub fn esscher_martingale_check(
    spec: &LevySpec,
    lambda: f64,
    t: f64,
    n: usize,
    factory: &StreamFactory,
) -> Result<McEstimate> {
    let (lo, hi) = spec.laplace_domain();
    if !(lambda > lo && lambda < hi) {
        return Err(Error::OutsideDomain { lambda, lower: lo, upper: hi });
    }
    let psi = spec.laplace_exponent(lambda);
    if lambda == 0.0 {
        return Ok(McEstimate { t, mean: 1.0, stderr: 0.0, n, rejected: 0, tilt: None, seed: factory.seed() });
    }
    let buf = run_replicas(factory, tags::PATH, n, 1, |rng, row| {
        // ξ_t is exact with a single cell: Gaussian part drawn at once, jumps at exact times
        let mut w = Walker::new(spec, t, t, &[], &[], rng)?;
        let mut last = 0.0;
        while let Some(seg) = w.next_segment() {
            last = seg.x1 + seg.jump;
        }
        row[0] = lambda * last - t * psi;
        Ok(())
    })?;
    Ok(McEstimate::from_samples(t, buf.iter().map(|x| x.exp()), 1.0, Some(lambda), factory.seed()))
}

/// Tilt selection as written in configs: `"none"`, `"auto"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TiltMode {
    #[default]
    None,
    Auto,
    Value(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawTilt {
    Word(String),
    Number(f64),
}

impl Serialize for TiltMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            TiltMode::None => RawTilt::Word("none".into()),
            TiltMode::Auto => RawTilt::Word("auto".into()),
            TiltMode::Value(v) => RawTilt::Number(v),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TiltMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RawTilt::deserialize(d)? {
            RawTilt::Word(w) if w == "none" => Ok(TiltMode::None),
            RawTilt::Word(w) if w == "auto" => Ok(TiltMode::Auto),
            RawTilt::Word(w) => Err(serde::de::Error::custom(format!("tilt must be \"none\", \"auto\" or a number, got \"{w}\""))),
            RawTilt::Number(v) => Ok(TiltMode::Value(v)),
        }
    }
}

impl TiltMode {
    /// Resolves `Auto` with the regime's default tilt.
    pub fn resolve(self, auto: impl FnOnce() -> Result<Option<f64>>) -> Result<Option<f64>> {
        match self {
            TiltMode::None => Ok(None),
            TiltMode::Value(v) => Ok(Some(v)),
            TiltMode::Auto => auto(),
        }
    }
}

/// Default tilt for a regime: p for IIIa/IIIb, τ for IIIc, none otherwise.
pub fn auto_tilt(label: crate::regimes::RegimeLabel, p: f64, tau: Option<f64>) -> Option<f64> {
    use crate::regimes::RegimeLabel::*;
    match label {
        IIIa | IIIb => Some(p),
        IIIc => tau,
        I | II | Boundary => None,
    }
}
