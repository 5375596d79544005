//! Ground-state energy toolkit for spherical mixed p-spin glasses.
//!
//! * [`mixture`]: the model and its covariance function.
//! * [`zero_temp`]: the zero-temperature variational problem, its optimality
//!   certificate and the closed-form phases.
//! * [`finite_temp`]: Crisanti–Sommers and Parisi functionals at finite
//!   inverse temperature, and the large-beta sweep.
//! * [`chaos`]: overlap prediction under disorder perturbation.
//! * [`monte_carlo`]: finite-N disorder sampling and ground-state search.

pub mod chaos;
pub mod error;
pub mod finite_temp;
pub mod mixture;
pub mod monte_carlo;
pub mod quad;
pub mod zero_temp;

pub use error::{Error, Result};
pub use mixture::MixtureSpec;
