//! Finite-temperature variational problems and the large-beta sweep.

mod functional;
mod optimize;
mod order;
mod sweep;

pub(crate) use functional::Resolvent;
pub use functional::{eval_cs, eval_cs_at, eval_cs_direct, eval_parisi_p, minimize_parisi_b};
pub use optimize::{minimize_cs_krsb, minimize_cs_krsb_from, KrsbFit, RESTARTS};
pub use order::{FiniteTempOrder, Piece};
pub use sweep::{beta_sweep, sweep_grid, SweepRow};
