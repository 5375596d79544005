use serde::{Deserialize, Serialize};

use super::optimize::minimize_cs_krsb_from;
use crate::error::{precondition, Result};
use crate::mixture::MixtureSpec;

/// Points of `[0, 0.95]` at which `beta x_beta` is reported.
pub fn sweep_grid() -> Vec<f64> {
    (0..=19).map(|i| 0.05 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub f_over_beta: f64,
    /// `int_0^1 beta x_beta`.
    pub l_beta: f64,
    /// `beta (1 - q_hat)`, reported without any claimed limit.
    pub beta_gap: f64,
    /// `beta x_beta(s)` at [`sweep_grid`].
    pub scaled_x: Vec<f64>,
    pub q: Vec<f64>,
    pub x: Vec<f64>,
}

/// Solves the k-jump problem at each `beta`, warm-starting from the previous
/// one.
pub fn beta_sweep(m: &MixtureSpec, betas: &[f64], k: usize) -> Result<Vec<SweepRow>> {
    if betas.is_empty() || betas.windows(2).any(|w| !(w[1] > w[0])) {
        return precondition(format!("betas {betas:?} must be nonempty and increasing"));
    }
    let grid = sweep_grid();
    let mut rows: Vec<SweepRow> = Vec::with_capacity(betas.len());
    let mut prev = None;
    for &beta in betas {
        let fit = minimize_cs_krsb_from(m, beta, k, 1e-9, prev.as_ref())?;
        let o = &fit.order;
        rows.push(SweepRow {
            beta,
            f_over_beta: fit.value / beta,
            l_beta: o.scaled_mass(),
            beta_gap: beta * (1.0 - o.q_hat()),
            scaled_x: grid.iter().map(|&s| beta * o.x_at(s)).collect(),
            q: o.q().to_vec(),
            x: o.x().to_vec(),
        });
        // Re-center the warm start at the new temperature.
        prev = super::order::FiniteTempOrder::new(o.q().to_vec(), o.x().to_vec(), beta).ok();
    }
    Ok(rows)
}
