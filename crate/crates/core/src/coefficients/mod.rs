//! Models, truncation mapping and assumption diagnostics.

mod assumptions;
mod model;
mod truncation;

pub use assumptions::{
    check_dissipativity, check_truncated_monotonicity, default_grid, log_grid, DissipativityReport,
    MonotonicityReport,
};
pub use model::{
    lamperti_back, lamperti_forward, AitSahaliaParams, CirParams, CustomModel, Evaluator, Exponents, ModelKind,
    ModelSpec, ThreeHalvesParams,
};
pub(crate) use model::{finite, Power};
pub use truncation::{
    default_l1, default_log_constant, generic_truncation, project, project_symmetric, recommended_truncation,
    truncated_diffusion, truncated_drift, truncated_levy, truncation_radius, RadiusVariant, Truncated,
    TruncationConfig, TruncationKind,
};
pub(crate) use truncation::{check_dt, clamp_two_sided};
