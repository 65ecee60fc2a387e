//! Open-loop solution by gradient descent on the control.
//!
//! For additive noise the adjoint's conditional expectations are carried
//! exactly through a deterministic-coefficient representation
//! ([`exact`]); in general they are estimated by regression on simulated
//! paths ([`mc`]).

pub mod coeff;
pub mod exact;
pub mod mc;

pub use coeff::{evaluate_control_on_path, CoefficientControl, Expansion};
pub use exact::{
    adjoint_by_expansion, control_inner_exact, control_norm_sq_exact, evaluate_cost_exact, gd_run,
    gd_step_exact, kappa_bound, state_expansions, GdConfig, GdReport,
};
pub use mc::{gd_run_mc, theta_accumulate, theta_direct, ConditionalEstimator, McConfig, McRun};
