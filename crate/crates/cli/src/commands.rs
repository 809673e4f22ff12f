use std::sync::Arc;

use expfun::applications::{
    diffusion_max_tail, explosion_probability, logistic_mean, survival_probability, AppOptions, BranchingEnvModel,
    DiffusionModel, LogisticModel,
};
use expfun::checks::{check_all, reference_spec, CheckConfig};
use expfun::estimator::{auto_tilt, mc_estimate_times, rate_fit, McEstimate, McOptions, TargetFunction, TiltMode};
use expfun::pathsim::PerpetuityOptions;
use expfun::regimes::{
    classify_diffusion_max, classify_explosion, classify_extinction, classify_logistic, classify_theorem1,
    classify_theorem2, EnvironmentReport, RegimeReport,
};
use expfun::rng::StreamFactory;
use expfun::{ExponentProfile, LaplaceExponent, LevySpec};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{csv, field, header, json_doc, merge, num, opt, Output};
use crate::{AppKind, CheckKind};

const DEFAULT_N: usize = 10_000;
const DEFAULT_STEP: f64 = 0.01;
const DEFAULT_TIMES: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

fn require_spec(cfg: &RunConfig) -> Result<&LevySpec, CliError> {
    cfg.spec.as_ref().ok_or_else(|| CliError::Usage("a Lévy spec is required (--spec or \"spec\" in the config)".into()))
}

fn times(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    match &cfg.times {
        Some(t) => t.resolve(),
        None => Ok(DEFAULT_TIMES.to_vec()),
    }
}

fn factory(cfg: &RunConfig) -> StreamFactory {
    StreamFactory::new(cfg.seed.expect("seed resolved before dispatch"))
}

fn domain_json(lo: f64, hi: f64) -> Value {
    json!({ "theta_minus": finite_or_null(lo), "theta_plus": finite_or_null(hi) })
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() { json!(x) } else { json!(if x > 0.0 { "inf" } else { "-inf" }) }
}

pub fn analyze(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let spec = require_spec(cfg)?;
    let profile = ExponentProfile::analyse(Arc::new(spec.clone()))?;
    let (lo, hi) = (profile.theta_minus(), profile.theta_plus());
    let a = if lo.is_finite() { 0.95 * lo } else { -2.0 };
    let b = if hi.is_finite() { 0.95 * hi } else { 2.0 };
    let rows: Vec<Vec<String>> = (0..=20)
        .map(|k| {
            let l = a + (b - a) * k as f64 / 20.0;
            vec![num(l), num(spec.psi(l)), num(spec.dpsi(l)), num(spec.d2psi(l))]
        })
        .collect();
    let mut bounds = Vec::new();
    for q in [0.5, 1.0, 2.0] {
        if q < hi {
            for t in [0.25, 0.5, 1.0] {
                bounds.push(json!({ "q": q, "t": t, "bound": spec.moment_bound(q, t)? }));
            }
        }
    }
    let seed = cfg.seed.unwrap_or_default();
    let head = merge(
        header("analyze", cfg, seed),
        json!({
            "domain": domain_json(lo, hi),
            "dpsi_zero": profile.dpsi_zero,
            "tau": profile.tau,
            "psi_tau": profile.psi_tau,
            "non_arithmetic": spec.is_non_arithmetic(),
            "moment_bounds": bounds,
        }),
    );
    let cols = ["lambda", "psi", "dpsi", "d2psi"];
    let text = match out.format {
        Format::Csv => csv(&head, &cols, &rows),
        Format::Json => {
            let table: Vec<Value> = rows.iter().map(|r| json!({ "lambda": r[0], "psi": r[1], "dpsi": r[2], "d2psi": r[3] })).collect();
            json_doc(&merge(head, json!({ "table": table })))
        }
    };
    out.emit(&text)
}

/// Report for E[F(I_t)]: the first classifier for pure powers, the second otherwise.
fn target_report(spec: &LevySpec, target: &TargetFunction, p: Option<f64>) -> Result<RegimeReport, CliError> {
    let p = match (p, target.meta().p) {
        (Some(p), _) => p,
        (None, Some(p)) => p,
        (None, None) => return Err(CliError::Usage("--p is required for targets without a power tail".into())),
    };
    let exp: Arc<dyn LaplaceExponent> = Arc::new(spec.clone());
    Ok(match target {
        TargetFunction::PowerNeg { .. } => classify_theorem1(exp, p)?,
        _ => classify_theorem2(exp, target, p)?,
    })
}

fn regime_text(r: &RegimeReport) -> String {
    let mut s = format!("label: {}\nrate: {}\nr: {}\n", r.label, r.rate_string(), num(r.r));
    match (r.gamma, r.gamma_range) {
        (Some(g), _) => s.push_str(&format!("gamma: {}\n", num(g))),
        (None, Some((a, b))) => s.push_str(&format!("gamma: between {} and {} (unverified)\n", num(a), num(b))),
        _ => {}
    }
    s.push_str(&format!("p: {}\npsi'(0+): {}\npsi'(p): {}\n", num(r.p), num(r.dpsi_zero), num(r.dpsi_p)));
    if let Some(t) = r.tau {
        s.push_str(&format!("tau: {}\npsi(tau): {}\n", num(t), opt(r.psi_tau)));
    }
    if let Some(a) = r.a1 {
        s.push_str(&format!("(A1): {}\n(A2): {}\n", yes(a), yes(r.a2.unwrap_or(false))));
    }
    s.push_str(&format!("tolerance: {:e}\nhypotheses:\n", r.tol));
    for c in &r.checklist {
        s.push_str(&format!("  [{}] {}\n", if c.holds { "x" } else { " " }, c.name));
    }
    for n in &r.notes {
        s.push_str(&format!("note: {n}\n"));
    }
    s
}

fn yes(b: bool) -> &'static str {
    if b { "admitted" } else { "rejected" }
}

fn environment_report(cfg: &RunConfig, kind: AppKind) -> Result<EnvironmentReport, CliError> {
    let spec = require_spec(cfg)?;
    let beta = || cfg.beta.ok_or_else(|| CliError::Usage("--beta is required".into()));
    Ok(match kind {
        AppKind::Survival => classify_extinction(spec, beta()?)?,
        AppKind::Explosion => classify_explosion(spec, beta()?)?,
        AppKind::Logistic => classify_logistic(spec)?,
        AppKind::Diffusion => classify_diffusion_max(spec)?,
    })
}

pub fn classify(cfg: &RunConfig, application: Option<AppKind>, out: &Output) -> Result<(), CliError> {
    let seed = cfg.seed.unwrap_or_default();
    let (report, body, text) = match application {
        Some(kind) => {
            let env = environment_report(cfg, kind)?;
            let mut text = format!("application: {:?}\nregime: {}\nm: {}\nm1: {}\n", env.application, env.regime, num(env.m), opt(env.m1));
            text.push_str(&regime_text(&env.reduced));
            for n in &env.notes {
                text.push_str(&format!("note: {n}\n"));
            }
            (env.reduced.clone(), json!({ "environment": env }), text)
        }
        None => {
            let spec = require_spec(cfg)?;
            let r = match &cfg.target {
                Some(t) => target_report(spec, t, cfg.p)?,
                None => {
                    let p = cfg.p.ok_or_else(|| CliError::Usage("--p is required".into()))?;
                    classify_theorem1(Arc::new(spec.clone()), p)?
                }
            };
            let text = regime_text(&r);
            (r.clone(), json!({ "report": r }), text)
        }
    };
    let doc = merge(header("classify", cfg, seed), body);
    let rendered = match out.format {
        Format::Json => json_doc(&doc),
        Format::Csv => format!("{text}\n{}", json_doc(&doc)),
    };
    out.emit(&rendered)?;
    if report.applicable() {
        Ok(())
    } else {
        let why = if report.failures().is_empty() { "boundary case".to_string() } else { report.failures().join(", ") };
        Err(CliError::NotApplicable(why))
    }
}

fn run_estimates(cfg: &RunConfig) -> Result<(Vec<McEstimate>, Option<RegimeReport>), CliError> {
    let spec = require_spec(cfg)?;
    let target = cfg.target.ok_or_else(|| CliError::Usage("a target is required (--target)".into()))?;
    let ts = times(cfg)?;
    let report = target_report(spec, &target, cfg.p).ok();
    let tilt = cfg.tilt.unwrap_or_default().resolve(|| {
        let r = report.as_ref().ok_or_else(|| expfun::Error::Unclassified("auto tilt needs a regime report".into()))?;
        Ok(auto_tilt(r.label, r.p, r.tau))
    })?;
    let opts = McOptions { n: cfg.n.unwrap_or(DEFAULT_N), step: cfg.step.unwrap_or(DEFAULT_STEP), tilt };
    let est = mc_estimate_times(spec, &target, &ts, &opts, &factory(cfg))?;
    Ok((est, report))
}

pub fn estimate(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (est, report) = run_estimates(cfg)?;
    let head = merge(header("estimate", cfg, cfg.seed.unwrap_or_default()), json!({ "report": report }));
    let text = match out.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = est
                .iter()
                .map(|e| vec![num(e.t), num(e.mean), num(e.stderr), e.n.to_string(), e.rejected.to_string(), opt(e.tilt)])
                .collect();
            csv(&head, &["t", "mean", "stderr", "n", "rejected", "tilt"], &rows)
        }
        Format::Json => json_doc(&merge(head, json!({ "estimates": est }))),
    };
    out.emit(&text)?;
    out.emit_gnuplot(2, "E[F(I_t)]", true)
}

pub fn fit(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (est, report) = run_estimates(cfg)?;
    let fit = rate_fit(&est)?;
    let head = merge(
        header("fit", cfg, cfg.seed.unwrap_or_default()),
        json!({ "report": report, "fit": fit }),
    );
    let text = match out.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = est
                .iter()
                .map(|e| {
                    let fitted = fit.c * (-fit.beta * e.t).exp() * e.t.powf(-fit.gamma);
                    let pred = report.as_ref().map(|r| r.predicted(e.t));
                    vec![num(e.t), num(e.mean), num(e.stderr), num(fitted), opt(pred)]
                })
                .collect();
            csv(&head, &["t", "mean", "stderr", "fitted", "predicted_rate"], &rows)
        }
        Format::Json => json_doc(&merge(head, json!({ "estimates": est }))),
    };
    out.emit(&text)?;
    out.emit_gnuplot(2, "E[F(I_t)]", true)
}

fn check_name(k: CheckKind) -> Option<&'static str> {
    Some(match k {
        CheckKind::All => return None,
        CheckKind::PsiAtZero => "psi_at_zero",
        CheckKind::PsiConvex => "psi_convex",
        CheckKind::TiltComposition => "tilt_composition",
        CheckKind::JsonRoundTrip => "json_round_trip",
        CheckKind::EsscherMartingale => "esscher_martingale",
        CheckKind::Sandwich => "sandwich",
        CheckKind::LatticeIdentity => "lattice_identity",
        CheckKind::WienerHopf => "wiener_hopf",
        CheckKind::TimeReversal => "time_reversal",
        CheckKind::DensityEquation => "density_equation",
        CheckKind::RegimeReport => "regime_report",
    })
}

pub fn check(cfg: &RunConfig, which: CheckKind, out: &Output) -> Result<(), CliError> {
    let spec = cfg.spec.clone().unwrap_or_else(reference_spec);
    let mut sizes = CheckConfig::default();
    if let Some(n) = cfg.n {
        sizes.mc = n;
    }
    if let Some(h) = cfg.step {
        sizes.step = h;
    }
    let mut results = check_all(&spec, &sizes, &factory(cfg))?;
    if let Some(name) = check_name(which) {
        results.retain(|r| r.name == name);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let head = merge(
        header("check", cfg, cfg.seed.unwrap_or_default()),
        json!({ "spec": spec, "sizes": sizes, "failed": failed }),
    );
    let text = match out.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|r| vec![r.name.to_string(), r.passed.to_string(), num(r.value), num(r.threshold), field(&r.detail)])
                .collect();
            csv(&head, &["name", "passed", "value", "threshold", "detail"], &rows)
        }
        Format::Json => json_doc(&merge(head, json!({ "results": results }))),
    };
    out.emit(&text)?;
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(())
}

pub fn app(cfg: &RunConfig, kind: AppKind, out: &Output) -> Result<(), CliError> {
    let spec = require_spec(cfg)?.clone();
    let ts = times(cfg)?;
    let mut opts = AppOptions::new(cfg.n.unwrap_or(DEFAULT_N), cfg.step.unwrap_or(DEFAULT_STEP))
        .with_tilt(cfg.tilt.unwrap_or(TiltMode::None));
    opts.perpetuity = PerpetuityOptions {
        eps_tail: cfg.eps_tail.unwrap_or(PerpetuityOptions::default().eps_tail),
        ..PerpetuityOptions::default()
    };
    let f = factory(cfg);
    let z = cfg.z.unwrap_or(1.0);
    let beta = || cfg.beta.ok_or_else(|| CliError::Usage("--beta is required".into()));
    let (model, est, extra): (Value, Vec<McEstimate>, Value) = match kind {
        AppKind::Survival | AppKind::Explosion => {
            let b = beta()?;
            let m = BranchingEnvModel::new(spec, b, cfg.c_beta.unwrap_or(1.0 / b), z)?;
            let est = if kind == AppKind::Survival {
                survival_probability(&m, &ts, &opts, &f)?
            } else {
                explosion_probability(&m, &ts, &opts, &f)?
            };
            (json!(m), est, Value::Null)
        }
        AppKind::Logistic => {
            let m = LogisticModel::new(spec, cfg.k.unwrap_or(1.0), z)?;
            let est = logistic_mean(&m, &ts, &opts, &f)?;
            (json!(m), est, Value::Null)
        }
        AppKind::Diffusion => {
            let eta = cfg.eta.clone().ok_or_else(|| CliError::Usage("--eta is required for diffusion".into()))?;
            let m = DiffusionModel::new(spec, eta)?;
            let d = diffusion_max_tail(&m, &ts, &opts, &f)?;
            (json!(m), d.estimates, json!({ "eps_tail": d.eps_tail, "max_tail_bound": d.max_tail_bound }))
        }
    };
    let report = environment_report(cfg, kind).ok();
    let head = merge(
        header("app", cfg, cfg.seed.unwrap_or_default()),
        json!({ "application": format!("{kind:?}").to_lowercase(), "model": model, "report": report, "eta_tail": extra }),
    );
    let text = match out.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = est
                .iter()
                .map(|e| {
                    let pred = report.as_ref().map(|r| r.reduced.predicted(e.t));
                    vec![num(e.t), num(e.mean), num(e.stderr), opt(pred)]
                })
                .collect();
            csv(&head, &["t", "estimate", "stderr", "predicted_rate"], &rows)
        }
        Format::Json => json_doc(&merge(head, json!({ "estimates": est }))),
    };
    out.emit(&text)?;
    out.emit_gnuplot(2, "estimate", true)
}
