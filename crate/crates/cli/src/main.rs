//! `levy-expfun`: command-line front end for the `expfun` library.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use expfun::estimator::TiltMode;

use crate::config::{json_arg, Format, RunConfig, Times};
use crate::error::CliError;
use crate::output::Output;

#[derive(Parser, Debug)]
#[command(name = "levy-expfun", version, about = "Exponential functionals of Lévy processes: simulation, estimation and regime classification")]
struct Cli {
    /// JSON run configuration; flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// root seed (falls back to $LEVY_EXPFUN_SEED, then 1)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// output file, written atomically (default: stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// also write a gnuplot script to <out>.gp
    #[arg(long, global = true)]
    gnuplot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct ModelArgs {
    /// Lévy spec: JSON literal or file
    #[arg(long)]
    spec: Option<String>,
    /// spec of η for the diffusion application: JSON literal or file
    #[arg(long)]
    eta: Option<String>,
    /// target function F: JSON literal or file, e.g. {"kind":"power_neg","p":1}
    #[arg(long)]
    target: Option<String>,
    /// evaluation times: `1,2,4` or `geom:start:stop:count`
    #[arg(long)]
    times: Option<String>,
    /// Monte Carlo replicas
    #[arg(short, long)]
    n: Option<usize>,
    /// path grid step
    #[arg(long)]
    step: Option<f64>,
    /// `none`, `auto` or a number
    #[arg(long)]
    tilt: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    c_beta: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    eps_tail: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AppKind {
    Survival,
    Explosion,
    Logistic,
    Diffusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    All,
    PsiAtZero,
    PsiConvex,
    TiltComposition,
    JsonRoundTrip,
    EsscherMartingale,
    Sandwich,
    LatticeIdentity,
    WienerHopf,
    TimeReversal,
    DensityEquation,
    RegimeReport,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Laplace exponent table, domain, τ, ψ(τ) and moment bounds.
    #[command(after_help = "CSV columns: lambda,psi,dpsi,d2psi (domain, τ and moment bounds in the header)")]
    Analyze(ModelArgs),
    /// Asymptotic regime of E[I_t^{-p}], E[F(I_t)] or an application.
    #[command(after_help = "Prints a text report followed by a JSON block; --format json prints only the JSON.\nExit code 4 when the hypotheses of the selected branch fail.")]
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        /// classify an application instead; --spec is the environment K (ξ for diffusion)
        #[arg(long, value_enum)]
        application: Option<AppKind>,
    },
    /// Monte Carlo estimates of E[F(I_t)].
    #[command(after_help = "CSV columns: t,mean,stderr,n,rejected,tilt")]
    Estimate(ModelArgs),
    /// Estimates plus a fit of ln E = ln c − βt − γ ln t.
    #[command(after_help = "CSV columns: t,mean,stderr,fitted,predicted_rate (fit in the header)")]
    Fit(ModelArgs),
    /// Invariant checks; without --spec they run on a jump-diffusion reference process.
    #[command(after_help = "CSV columns: name,passed,value,threshold,detail. Exit code 3 when any check fails.")]
    Check {
        #[arg(value_enum, default_value = "all")]
        which: CheckKind,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Random-environment applications.
    #[command(after_help = "CSV columns: t,estimate,stderr,predicted_rate (model and regime report in the header)\n\
survival/explosion: --spec is K; --beta, --c-beta (default 1/β), --z\nlogistic: --spec is K including growth, --k, --z\ndiffusion: --spec is ξ, --eta is η")]
    App {
        #[arg(value_enum)]
        kind: AppKind,
        #[command(flatten)]
        model: ModelArgs,
    },
}

fn parse_tilt(s: &str) -> Result<TiltMode, CliError> {
    match s {
        "none" => Ok(TiltMode::None),
        "auto" => Ok(TiltMode::Auto),
        v => v.parse().map(TiltMode::Value).map_err(|_| CliError::Usage(format!("tilt must be none, auto or a number, got {v}"))),
    }
}

fn merged_config(cli: &Cli, m: &ModelArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &m.spec {
        cfg.spec = Some(json_arg(s, "spec")?);
    }
    if let Some(s) = &m.eta {
        cfg.eta = Some(json_arg(s, "eta")?);
    }
    if let Some(s) = &m.target {
        cfg.target = Some(json_arg(s, "target")?);
    }
    if let Some(s) = &m.times {
        cfg.times = Some(Times::parse_flag(s)?);
    }
    if let Some(s) = &m.tilt {
        cfg.tilt = Some(parse_tilt(s)?);
    }
    macro_rules! take {
        ($($f:ident),*) => { $( if m.$f.is_some() { cfg.$f = m.$f; } )* };
    }
    take!(n, step, p, q, beta, c_beta, z, k, eps_tail);
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.seed = Some(cfg.seed()?);
    if cli.out.is_some() {
        cfg.output.path = cli.out.clone();
    }
    if cli.format.is_some() {
        cfg.output.format = cli.format;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let model = match &cli.command {
        Command::Analyze(m) | Command::Estimate(m) | Command::Fit(m) => m,
        Command::Classify { model, .. } | Command::Check { model, .. } | Command::App { model, .. } => model,
    };
    let cfg = merged_config(&cli, model)?;
    let out = Output {
        path: cfg.output.path.clone(),
        format: cfg.output.format.unwrap_or_default(),
        gnuplot: cli.gnuplot,
    };
    match cli.command {
        Command::Analyze(_) => commands::analyze(&cfg, &out),
        Command::Classify { application, .. } => commands::classify(&cfg, application, &out),
        Command::Estimate(_) => commands::estimate(&cfg, &out),
        Command::Fit(_) => commands::fit(&cfg, &out),
        Command::Check { which, .. } => commands::check(&cfg, which, &out),
        Command::App { kind, .. } => commands::app(&cfg, kind, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("levy-expfun: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
