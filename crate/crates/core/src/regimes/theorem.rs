use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::TargetFunction;
use crate::levy::{ExponentProfile, LaplaceExponent};

/// Width of the band above the sign tolerance that is reported as [`RegimeLabel::Boundary`].
pub const BOUNDARY_BAND: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegimeLabel {
    I,
    II,
    IIIa,
    IIIb,
    IIIc,
    Boundary,
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegimeLabel::I => "I",
            RegimeLabel::II => "II",
            RegimeLabel::IIIa => "IIIa",
            RegimeLabel::IIIb => "IIIb",
            RegimeLabel::IIIc => "IIIc",
            RegimeLabel::Boundary => "Boundary",
        };
        f.write_str(s)
    }
}

/// Sign of a derivative after applying the tolerance tol = 1e−9 (1 + |ψ″|).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
    /// outside the tolerance but within [`BOUNDARY_BAND`] times it
    NearZero,
}

pub fn sign_tolerance(d2: f64) -> f64 {
    let d2 = if d2.is_finite() { d2.abs() } else { 0.0 };
    1e-9 * (1.0 + d2)
}

pub fn classify_sign(d: f64, tol: f64) -> Sign {
    if d.abs() <= tol {
        Sign::Zero
    } else if d.abs() <= BOUNDARY_BAND * tol {
        Sign::NearZero
    } else if d > 0.0 {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// One hypothesis of the applicable branch and whether it holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
}

fn check(name: &str, holds: bool) -> Check {
    Check { name: name.to_string(), holds }
}

/// Predicted behaviour E ~ c t^{−γ} e^{−r t}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub label: RegimeLabel,
    pub r: f64,
    /// `None` when only a range is known (arithmetic IIIc)
    pub gamma: Option<f64>,
    pub gamma_range: Option<(f64, f64)>,
    pub p: f64,
    pub dpsi_zero: f64,
    pub dpsi_p: f64,
    pub psi_p: f64,
    pub tau: Option<f64>,
    pub psi_tau: Option<f64>,
    #[serde(serialize_with = "crate::levy::extended")]
    pub theta_minus: f64,
    #[serde(serialize_with = "crate::levy::extended")]
    pub theta_plus: f64,
    /// labels on either side of a Boundary result
    pub between: Option<(RegimeLabel, RegimeLabel)>,
    pub checklist: Vec<Check>,
    pub tol: f64,
    /// (A1) / (A2) applicability, only filled in for targets
    pub a1: Option<bool>,
    pub a2: Option<bool>,
    pub notes: Vec<String>,
}

impl RegimeReport {
    /// Every hypothesis of the chosen branch holds.
    pub fn applicable(&self) -> bool {
        self.label != RegimeLabel::Boundary && self.checklist.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checklist.iter().filter(|c| !c.holds).map(|c| c.name.as_str()).collect()
    }

    /// The report itself, or `Unclassified` naming the failed hypotheses.
    pub fn require_applicable(self) -> Result<Self> {
        if self.label == RegimeLabel::Boundary {
            let (a, b) = self.between.unwrap_or((RegimeLabel::Boundary, RegimeLabel::Boundary));
            return Err(Error::Unclassified(format!("derivative sign is within tolerance band between {a} and {b}")));
        }
        if self.applicable() {
            Ok(self)
        } else {
            Err(Error::Unclassified(format!("{} fails: {}", self.label, self.failures().join(", "))))
        }
    }

    /// Predicted t^{−γ} e^{−rt} up to the constant; uses the lower end of a γ range.
    pub fn predicted(&self, t: f64) -> f64 {
        let g = self.gamma.or(self.gamma_range.map(|r| r.0)).unwrap_or(0.0);
        t.powf(-g) * (-self.r * t).exp()
    }

    pub fn rate_string(&self) -> String {
        let exp = if self.r == 0.0 { String::new() } else { format!("e^{{{}t}}", fmt_num(-self.r)) };
        let pow = match (self.gamma, self.gamma_range) {
            (Some(g), _) if g == 0.0 => String::new(),
            (Some(g), _) => format!("t^{{-{}}}", fmt_num(g)),
            (None, Some((a, b))) => format!("t^{{-γ}} (γ in [{}, {}], unverified)", fmt_num(a), fmt_num(b)),
            (None, None) => String::new(),
        };
        match (pow.is_empty(), exp.is_empty()) {
            (true, true) => "constant".into(),
            (false, true) => pow,
            (true, false) => exp,
            (false, false) => format!("{pow} {exp}"),
        }
    }
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Branch structure common to both theorems.
struct Branching {
    profile: ExponentProfile,
    p: f64,
    label: RegimeLabel,
    between: Option<(RegimeLabel, RegimeLabel)>,
    tol: f64,
    dpsi_p: f64,
    psi_p: f64,
}

fn branch(exponent: Arc<dyn LaplaceExponent>, p: f64) -> Result<Branching> {
    let profile = ExponentProfile::analyse(exponent)?;
    if !(p > 0.0 && p < profile.theta_plus()) {
        return Err(Error::OutsideDomain { lambda: p, lower: 0.0, upper: profile.theta_plus() });
    }
    let d0 = profile.dpsi_zero;
    let tol0 = sign_tolerance(profile.d2psi(0.0));
    let dpsi_p = profile.dpsi(p);
    let psi_p = profile.psi(p);
    let tolp = sign_tolerance(profile.d2psi(p));
    use RegimeLabel::*;
    let (label, between, tol) = match classify_sign(d0, tol0) {
        Sign::Positive => (I, None, tol0),
        Sign::Zero => (II, None, tol0),
        Sign::NearZero => (Boundary, Some(if d0 > 0.0 { (I, II) } else { (II, IIIa) }), tol0),
        Sign::Negative => match classify_sign(dpsi_p, tolp) {
            Sign::Negative => (IIIa, None, tolp),
            Sign::Zero => (IIIb, None, tolp),
            Sign::Positive => (IIIc, None, tolp),
            Sign::NearZero => (Boundary, Some(if dpsi_p > 0.0 { (IIIb, IIIc) } else { (IIIa, IIIb) }), tolp),
        },
    };
    Ok(Branching { profile, p, label, between, tol, dpsi_p, psi_p })
}

fn base_report(b: &Branching) -> RegimeReport {
    use RegimeLabel::*;
    let non_arith = b.profile.exponent().is_non_arithmetic();
    // a Boundary report carries the rate of the critical side
    let effective = match (b.label, b.between) {
        (Boundary, Some((I, II))) | (Boundary, Some((II, _))) => II,
        (Boundary, Some(_)) => IIIb,
        (l, _) => l,
    };
    let (r, gamma, gamma_range) = match effective {
        I => (0.0, Some(0.0), None),
        II => (0.0, Some(0.5), None),
        IIIa => (-b.psi_p, Some(0.0), None),
        IIIb => (-b.psi_p, Some(0.5), None),
        IIIc => {
            let psi_tau = b.profile.psi_tau.unwrap_or(f64::NAN);
            if non_arith {
                (-psi_tau, Some(1.5), None)
            } else {
                (-psi_tau, None, Some((0.5, 1.5)))
            }
        }
        Boundary => unreachable!(),
    };
    let mut notes = Vec::new();
    if b.label == IIIc && !non_arith {
        notes.push("arithmetic process: only o(t^{-1/2} e^{tψ(τ)}) is available".into());
    }
    RegimeReport {
        label: b.label,
        r: if r == 0.0 { 0.0 } else { r },
        gamma,
        gamma_range,
        p: b.p,
        dpsi_zero: b.profile.dpsi_zero,
        dpsi_p: b.dpsi_p,
        psi_p: b.psi_p,
        tau: b.profile.tau,
        psi_tau: b.profile.psi_tau,
        theta_minus: b.profile.theta_minus(),
        theta_plus: b.profile.theta_plus(),
        between: b.between,
        checklist: Vec::new(),
        tol: b.tol,
        a1: None,
        a2: None,
        notes,
    }
}

/// Regime of E[I_t^{−p}] for large t.
pub fn classify_theorem1(exponent: Arc<dyn LaplaceExponent>, p: f64) -> Result<RegimeReport> {
    let b = branch(exponent, p)?;
    let mut rep = base_report(&b);
    let pr = &b.profile;
    use RegimeLabel::*;
    rep.checklist = match b.label {
        I => vec![check("ψ′(0+) > 0", true)],
        II => vec![check("ψ′(0+) = 0", true), check("ψ″(0+) < ∞", pr.d2psi(0.0).is_finite())],
        IIIa => vec![check("ψ′(0+) < 0", true), check("ψ′(p) < 0", true)],
        IIIb => vec![check("ψ′(0+) < 0", true), check("ψ′(p) = 0", true), check("ψ″(p) < ∞", pr.d2psi(p).is_finite())],
        IIIc => {
            let tau = pr.tau.unwrap_or(f64::NAN);
            vec![
                check("ψ′(0+) < 0", true),
                check("ψ′(p) > 0", true),
                check("ψ″(τ) < ∞", pr.d2psi(tau).is_finite()),
                check("non-arithmetic", pr.exponent().is_non_arithmetic()),
            ]
        }
        Boundary => Vec::new(),
    };
    // the non-arithmetic hypothesis only sharpens γ; its absence is reflected in gamma_range
    if b.label == IIIc {
        rep.checklist.retain(|c| c.name != "non-arithmetic" || c.holds);
    }
    Ok(rep)
}

/// Regime of E[F(I_t)] for large t, checking (A1)/(A2) for the branch.
///
/// Pure powers x^{−p} are admitted wherever the first classifier applies;
/// they are unbounded at 0 and so never satisfy (A2).
pub fn classify_theorem2(exponent: Arc<dyn LaplaceExponent>, target: &TargetFunction, p: f64) -> Result<RegimeReport> {
    target.validate()?;
    let meta = target.meta();
    if let Some(own) = meta.p {
        if p > own * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!("F decays like x^(-{own}); cannot use p = {p}")));
        }
    }
    let b = branch(exponent, p)?;
    let mut rep = base_report(&b);
    let pr = &b.profile;
    let tau = pr.tau;
    let tau_v = tau.unwrap_or(0.0);
    // (A1) needs F(x) = k(x+1)^{−p}[…] with this exact p and p ≤ τ
    let exact_p = meta.p.is_some_and(|own| (own - p).abs() <= 1e-12 * own.max(1.0));
    let p_le_tau = tau.is_some_and(|t| p <= t * (1.0 + 1e-12) + 1e-15);
    let a1 = exact_p && p_le_tau && (meta.declares_a1() || meta.pure_power);
    let a2 = meta.declares_a2_for(p) && tau.is_none_or(|t| p > t * (1.0 + 1e-12) + 1e-15);
    rep.a1 = Some(a1);
    rep.a2 = Some(a2);
    let theta_minus_neg = pr.theta_minus() < 0.0;
    use RegimeLabel::*;
    rep.checklist = match b.label {
        I => vec![check("ψ′(0+) > 0", true), check("F bounded", meta.bounded || meta.pure_power)],
        II => {
            if meta.pure_power {
                vec![check("ψ′(0+) = 0", true), check("ψ″(0+) < ∞", pr.d2psi(0.0).is_finite())]
            } else {
                vec![check("ψ′(0+) = 0", true), check("(A2)", a2), check("θ⁻<0 required", theta_minus_neg)]
            }
        }
        IIIa => vec![check("ψ′(0+) < 0", true), check("ψ′(p) < 0", true), check("(A1)", a1)],
        IIIb => vec![
            check("ψ′(0+) < 0", true),
            check("ψ′(p) = 0", true),
            check("ψ″(p) < ∞", pr.d2psi(p).is_finite()),
            check("(A1)", a1),
        ],
        IIIc => {
            if meta.pure_power {
                vec![
                    check("ψ′(0+) < 0", true),
                    check("ψ′(p) > 0", true),
                    check("ψ″(τ) < ∞", pr.d2psi(tau_v).is_finite()),
                ]
            } else {
                vec![
                    check("ψ′(0+) < 0", true),
                    check("ψ′(p) > 0", true),
                    check("(A2)", a2),
                    check("τ+p<θ⁺", tau_v + p < pr.theta_plus()),
                ]
            }
        }
        Boundary => Vec::new(),
    };
    if !(a1 || a2 || b.label == I) {
        rep.notes.push("F satisfies neither (A1) nor (A2) at this p".into());
    }
    Ok(rep)
}
