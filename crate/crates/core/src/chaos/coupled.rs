use super::context::ChaosContext;
use crate::error::{precondition, Result};
use crate::finite_temp::{FiniteTempOrder, Resolvent};
use crate::mixture::MixtureSpec;

fn check_tu(t: f64, u: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return precondition(format!("t={t} must lie in [0, 1]"));
    }
    if !(u.abs() <= 1.0) {
        return precondition(format!("u={u} must lie in [-1, 1]"));
    }
    Ok(())
}

fn sign(u: f64) -> f64 {
    if u >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Zero-temperature coupled functional `E(t, u, lambda)`.
pub fn eval_e(ctx: &ChaosContext, t: f64, u: f64, lambda: f64) -> Result<f64> {
    check_tu(t, u)?;
    let d0 = ctx.d(0.0);
    if !(lambda.abs() < ctx.b - d0) {
        return precondition(format!("|lambda|={} must be below B - D(0)={}", lambda.abs(), ctx.b - d0));
    }
    let iota = sign(u);
    let au = u.abs();
    let b = ctx.b;
    let inner = 0.5 * (1.0 + t) * ctx.integrate(0.0, au, |q| 1.0 / (b - iota * lambda - ctx.d(q)))
        + 0.5 * (1.0 - t) * ctx.integrate(0.0, au, |q| 1.0 / (b + iota * lambda - ctx.d_u(t, u, q)));
    let outer = 0.5 * ctx.integrate(au, 1.0, |q| 1.0 / (b - lambda - ctx.d(q)) + 1.0 / (b + lambda - ctx.d(q)));
    let tt = inner + outer - lambda * u + b - ctx.v1;
    let h2 = ctx.mixture().h().powi(2);
    let field = if u >= 0.0 { h2 / (b - lambda - d0) } else { h2 / (b - lambda - ctx.d_u(t, u, 0.0)) };
    Ok(tt + field)
}

/// The gap `2 GS - E(t, u, 0)` in closed form.
pub fn eval_error_term(ctx: &ChaosContext, t: f64, u: f64) -> Result<f64> {
    check_tu(t, u)?;
    let b = ctx.b;
    let bulk = 0.5
        * (1.0 - t)
        * ctx.integrate(0.0, u.abs(), |q| {
            let (d, du) = (ctx.d(q), ctx.d_u(t, u, q));
            (d - du) / ((b - d) * (b - du))
        });
    let field = if u >= 0.0 {
        0.0
    } else {
        let (d, du) = (ctx.d(0.0), ctx.d_u(t, u, 0.0));
        ctx.mixture().h().powi(2) * (d - du) / ((b - d) * (b - du))
    };
    Ok(bulk + field)
}

/// Finite-temperature bound on the coupled free energy with overlap pinned
/// near `u`.
pub fn eval_coupled_parisi(m: &MixtureSpec, o: &FiniteTempOrder, t: f64, u: f64, b: f64, lambda: f64) -> Result<f64> {
    check_tu(t, u)?;
    let r = Resolvent::new(m, o);
    let d0 = r.d0();
    if !(b > d0 + lambda.abs() && b.is_finite()) {
        return precondition(format!("b={b} must exceed int xi_b'' x + |lambda| = {}", d0 + lambda.abs()));
    }
    let k = (1.0 - t) / (1.0 + t);
    let au = u.abs();
    let iota = sign(u);
    let d_top = r.d(au);
    let d_u = |j: usize, q: f64| d_top + k * (r.d_in(j, q) - d_top);
    let inner = r.integrate_range(0.0, au, |j, q| {
        0.5 * (1.0 + t) / (b - iota * lambda - r.d_in(j, q)) + 0.5 * (1.0 - t) / (b + iota * lambda - d_u(j, q))
    });
    let outer = r.integrate_range(au, 1.0, |j, q| 0.5 / (b - lambda - r.d_in(j, q)) + 0.5 / (b + lambda - r.d_in(j, q)));
    let log_term = 0.5 * (b * b / (b * b - lambda * lambda)).ln();
    let tt = log_term + inner + outer - lambda * u + b - 1.0 - b.ln() - r.first_moment();
    let hb2 = (m.h() * o.beta()).powi(2);
    let field = if u >= 0.0 { hb2 / (b - lambda - d0) } else { hb2 / (b - lambda - d_u(0, 0.0)) };
    Ok(tt + field)
}
