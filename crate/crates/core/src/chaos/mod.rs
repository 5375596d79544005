//! Disorder-chaos prediction: the coupled functional of two ground states
//! with correlated disorder, the overlap root `u_t`, and the CLT variance
//! constant `chi`.

mod context;
mod coupled;
mod overlap;

pub use context::{ChaosContext, CERTIFICATE_TOL, IDENTITY_TOL};
pub use coupled::{eval_coupled_parisi, eval_e, eval_error_term};
pub use overlap::{chaos_profile, chi, f_t, solve_u_t, ChaosProfile, ROOT_ITERS};
