//! Zero-temperature variational problem for the ground-state energy.

mod functional;
mod newton;
mod order_param;
mod solver;

pub use functional::{certificate, eval_q, grad_q, Certificate, Gradient};
pub use order_param::{pava, uniform_grid, OrderParamZeroT, DEFAULT_MARGIN};
pub use solver::{
    classify_phase, closed_form, closed_form_1rsb, closed_form_frsb, closed_form_rs, gs_partials, minimize_q,
    minimize_q_with, one_rsb_rhs, one_rsb_z, GsPartials, Phase, SolverOptions, ZeroTempSolution, CLOSED_FORM_GRID,
    DEFAULT_GRID,
};
