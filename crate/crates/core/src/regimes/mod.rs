mod environment;
mod theorem;

pub use environment::{
    classify_diffusion_max, classify_explosion, classify_extinction, classify_logistic, nonexplosion_target,
    scaled_environment, survival_target, Application, EnvironmentReport,
};
pub use theorem::{
    classify_sign, classify_theorem1, classify_theorem2, sign_tolerance, Check, RegimeLabel, RegimeReport, Sign,
    BOUNDARY_BAND,
};
