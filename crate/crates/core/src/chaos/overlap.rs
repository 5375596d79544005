use serde::{Deserialize, Serialize};

use super::context::ChaosContext;
use crate::error::{precondition, Error, Result};
use crate::quad::{bisect, gauss_legendre};

/// Bisection steps used for the overlap root.
pub const ROOT_ITERS: usize = 60;

/// `f_t(u) = L0^2 (t xi'(u) + h^2) - u`.
pub fn f_t(ctx: &ChaosContext, t: f64, u: f64) -> f64 {
    let m = ctx.mixture();
    ctx.l0().powi(2) * (t * m.xi1(u) + m.h() * m.h()) - u
}

/// The predicted overlap `u_t` of coupled ground states, the root of `f_t`
/// on `[0, q0]`.
pub fn solve_u_t(ctx: &ChaosContext, t: f64, tol: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return precondition(format!("t={t} must lie in (0, 1)"));
    }
    if ctx.mixture().h() == 0.0 {
        return Ok(0.0);
    }
    let q0 = ctx.q0();
    let (lo, hi) = (f_t(ctx, t, 0.0), f_t(ctx, t, q0));
    if !(lo > 0.0 && hi < 0.0) {
        return Err(Error::Inconsistent(format!("f_t does not change sign on [0, q0={q0}]: f(0)={lo}, f(q0)={hi}")));
    }
    bisect(0.0, q0, tol, ROOT_ITERS, |u| f_t(ctx, t, u))
        .ok_or_else(|| Error::Inconsistent("f_t bracket lost during bisection".into()))
}

/// `chi = int_0^1 xi(u_t) dt` by Gauss–Legendre with `quad_points` nodes.
pub fn chi(ctx: &ChaosContext, quad_points: usize) -> Result<f64> {
    if quad_points == 0 {
        return precondition("quad_points must be positive");
    }
    if ctx.mixture().h() == 0.0 {
        return Ok(0.0);
    }
    let (nodes, weights) = gauss_legendre(quad_points);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let t = 0.5 * (x + 1.0);
        acc += 0.5 * w * ctx.mixture().xi0(solve_u_t(ctx, t, 0.0)?);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosProfile {
    pub t_grid: Vec<f64>,
    pub u_t_vals: Vec<f64>,
    pub chi: f64,
}

pub fn chaos_profile(ctx: &ChaosContext, t_grid: &[f64], quad_points: usize) -> Result<ChaosProfile> {
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return precondition("t grid must be increasing");
    }
    let u_t_vals = t_grid.iter().map(|&t| solve_u_t(ctx, t, 0.0)).collect::<Result<Vec<_>>>()?;
    Ok(ChaosProfile { t_grid: t_grid.to_vec(), u_t_vals, chi: chi(ctx, quad_points)? })
}
