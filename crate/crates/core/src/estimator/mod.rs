//! Monte Carlo estimation of E[F(I_t)], rate fitting and statistical checks.

mod density;
mod fit;
mod ks;
mod mc;
mod moments;
mod target;

pub use density::{
    density_residual, dufresne_density, residual_for_density, EmpiricalDensity, ResidualProfile, MIN_DENSITY_SAMPLES,
};
pub use fit::{rate_fit, RateFit, MIN_SPAN};
pub use ks::{ks_two_sample, KsResult};
pub use mc::{
    auto_tilt, esscher_martingale_check, mc_estimate, mc_estimate_times, run_replicas, McEstimate, McOptions, TiltMode,
};
pub use moments::{doob_sup_bound, moment_conditions, MomentTriple, MomentVerdict, MomentVerdicts};
pub use target::{TargetFunction, TargetMeta};
