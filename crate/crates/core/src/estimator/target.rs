use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Functions F applied to I_t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetFunction {
    /// x^{−p}
    PowerNeg { p: f64 },
    /// 1 − exp(−z (scale·x)^{−p})
    OneMinusExpPow { z: f64, scale: f64, p: f64 },
    /// exp(−z (scale·x)^{r}); decays faster than any power
    ExpNegPow { z: f64, scale: f64, r: f64 },
    /// e^{−x}
    ExpNeg,
    /// a / (b + x)
    Rational { a: f64, b: f64 },
    /// k (1 + x)^{−p}
    Custom {
        k: f64,
        p: f64,
        #[serde(default = "one")]
        varsigma: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Tail description used by the regime classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetMeta {
    /// polynomial decay exponent; `None` when F decays faster than any power
    pub p: Option<f64>,
    /// leading constant k in F(x) ~ k x^{−p}
    pub k: f64,
    /// ς in F(x) = k(x+1)^{−p}[1 + (1+x)^{−ς} h(x)]
    pub varsigma: Option<f64>,
    pub lipschitz_h: bool,
    pub holder_index: Option<f64>,
    pub bounded: bool,
    /// F is the pure power x^{−p} (no boundedness near 0)
    pub pure_power: bool,
}

impl TargetMeta {
    /// F(x) = k(x+1)^{−p}[1 + (1+x)^{−ς} h(x)] with ς ≥ 1 and h bounded Lipschitz.
    pub fn declares_a1(&self) -> bool {
        self.p.is_some() && self.k > 0.0 && self.varsigma.is_some_and(|s| s >= 1.0) && self.lipschitz_h
    }

    /// Hölder and F ≤ k(x+1)^{−p} for the given p.
    pub fn declares_a2_for(&self, p: f64) -> bool {
        self.holder_index.is_some_and(|a| a > 0.0)
            && self.bounded
            && match self.p {
                None => true,
                Some(own) => p <= own,
            }
    }
}

impl TargetFunction {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            TargetFunction::PowerNeg { p } => pos("p", p),
            TargetFunction::OneMinusExpPow { z, scale, p } => pos("z", z).and(pos("scale", scale)).and(pos("p", p)),
            TargetFunction::ExpNegPow { z, scale, r } => pos("z", z).and(pos("scale", scale)).and(pos("r", r)),
            TargetFunction::ExpNeg => Ok(()),
            TargetFunction::Rational { a, b } => pos("a", a).and(pos("b", b)),
            TargetFunction::Custom { k, p, varsigma } => pos("k", k).and(pos("p", p)).and(pos("varsigma", varsigma)),
        }
    }

    pub fn meta(&self) -> TargetMeta {
        match *self {
            TargetFunction::PowerNeg { p } => TargetMeta {
                p: Some(p),
                k: 1.0,
                varsigma: None,
                lipschitz_h: false,
                holder_index: None,
                bounded: false,
                pure_power: true,
            },
            // (1 − e^{−u})/u = 1 + O(u) and ((x+1)/x)^p = 1 + O(1/x), so the
            // correction is O(x^{−min(p,1)})
            TargetFunction::OneMinusExpPow { z, scale, p } => TargetMeta {
                p: Some(p),
                k: z * scale.powf(-p),
                varsigma: Some(p.min(1.0)),
                lipschitz_h: true,
                holder_index: Some(p.min(1.0)),
                bounded: true,
                pure_power: false,
            },
            TargetFunction::ExpNegPow { r, .. } => TargetMeta {
                p: None,
                k: 1.0,
                varsigma: None,
                lipschitz_h: false,
                holder_index: Some(r.min(1.0)),
                bounded: true,
                pure_power: false,
            },
            TargetFunction::ExpNeg => TargetMeta {
                p: None,
                k: 1.0,
                varsigma: None,
                lipschitz_h: false,
                holder_index: Some(1.0),
                bounded: true,
                pure_power: false,
            },
            // a/(b+x) = a(x+1)^{−1}[1 + (1−b)/(x+b)]
            TargetFunction::Rational { a, .. } => TargetMeta {
                p: Some(1.0),
                k: a,
                varsigma: Some(1.0),
                lipschitz_h: true,
                holder_index: Some(1.0),
                bounded: true,
                pure_power: false,
            },
            TargetFunction::Custom { k, p, varsigma } => TargetMeta {
                p: Some(p),
                k,
                varsigma: Some(varsigma),
                lipschitz_h: true,
                holder_index: Some(1.0),
                bounded: true,
                pure_power: false,
            },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TargetFunction::OneMinusExpPow { z, scale, p } => -(-z * (scale * x).powf(-p)).exp_m1(),
            _ => self.ln_eval(x).exp(),
        }
    }

    /// ln F(x), accurate where F is tiny.
    pub fn ln_eval(&self, x: f64) -> f64 {
        match *self {
            TargetFunction::PowerNeg { p } => -p * x.ln(),
            TargetFunction::OneMinusExpPow { z, scale, p } => {
                let u = z * (scale * x).powf(-p);
                if u > 1.0 {
                    (-(-u).exp()).ln_1p()
                } else {
                    (-(-u).exp_m1()).ln()
                }
            }
            TargetFunction::ExpNegPow { z, scale, r } => -z * (scale * x).powf(r),
            TargetFunction::ExpNeg => -x,
            TargetFunction::Rational { a, b } => a.ln() - (b + x).ln(),
            TargetFunction::Custom { k, p, .. } => k.ln() - p * x.ln_1p(),
        }
    }
}
