//! Exact evaluation of the zero-temperature functional for step-function
//! order parameters, its gradient, and the optimality certificate.
//!
//! On each grid cell `c(q) = L - int_0^q alpha` is linear, so every integral
//! of a power of `1/c` has a closed form. The only non-elementary pieces are
//! `-ln(1-x)/x` and its relatives, evaluated by series near zero.

use serde::{Deserialize, Serialize};

use super::order_param::OrderParamZeroT;
use crate::error::Result;
use crate::mixture::MixtureSpec;
use crate::quad::log_ratio;

/// `int_0^1 t dt / (1 - x t) = (-ln(1-x) - x)/x^2` for `0 <= x < 1`.
pub(crate) fn log_ratio_first_moment(x: f64) -> f64 {
    if x < 0.05 {
        (0..14).rev().fold(0.0, |acc, k| acc * x + 1.0 / (k + 2) as f64)
    } else {
        (-(-x).ln_1p() - x) / (x * x)
    }
}

/// Node-wise quantities derived from `(L, alpha)`.
#[derive(Debug, Clone)]
pub(crate) struct Profile {
    /// `int_0^{s_j} dq / c(q)^2`
    pub inv_sq: Vec<f64>,
    /// `g(s_j) = int_{s_j}^1 gbar`
    pub g: Vec<f64>,
    /// `int_0^1 dq / c(q)`
    pub inv_int: f64,
}

impl Profile {
    pub fn new(m: &MixtureSpec, p: &OrderParamZeroT) -> Self {
        let cells = p.cells();
        let grid = p.grid();
        let h2 = m.h() * m.h();
        let c: Vec<f64> = p.cumulative().iter().map(|a| p.l() - a).collect();
        let mut inv_sq = Vec::with_capacity(cells + 1);
        inv_sq.push(0.0);
        let mut inv_int = 0.0;
        // int over cell i of int_{s_i}^{s} c^{-2}
        let mut inner = vec![0.0; cells];
        for i in 0..cells {
            let w = p.width(i);
            let x = p.alpha()[i] * w / c[i];
            inv_int += w / c[i] * log_ratio(x);
            inner[i] = w * w / (c[i] * c[i]) * log_ratio_first_moment(x);
            inv_sq.push(inv_sq[i] + w / (c[i] * c[i + 1]));
        }
        let mut g = vec![0.0; cells + 1];
        for i in (0..cells).rev() {
            let w = p.width(i);
            let lin = m.xi0(grid[i + 1]) - m.xi0(grid[i]) + h2 * w;
            g[i] = g[i + 1] + lin - (inv_sq[i] * w + inner[i]);
        }
        Self { inv_sq, g, inv_int }
    }
}

/// `int_0^1 xi''(q) (int_0^q alpha) dq`, integrated by parts exactly.
pub(crate) fn curvature_term(m: &MixtureSpec, p: &OrderParamZeroT) -> f64 {
    let grid = p.grid();
    let inner: f64 = p
        .alpha()
        .iter()
        .enumerate()
        .map(|(i, a)| a * (m.xi0(grid[i + 1]) - m.xi0(grid[i])))
        .sum();
    m.xi1(1.0) * p.total_mass() - inner
}

/// Value of the zero-temperature functional at `(L, alpha)`.
pub fn eval_q(m: &MixtureSpec, p: &OrderParamZeroT) -> Result<f64> {
    p.check_margin(f64::MIN_POSITIVE)?;
    Ok(eval_q_unchecked(m, p, &Profile::new(m, p)))
}

pub(crate) fn eval_q_unchecked(m: &MixtureSpec, p: &OrderParamZeroT, prof: &Profile) -> f64 {
    0.5 * (m.field_slope() * p.l() - curvature_term(m, p) + prof.inv_int)
}

/// Partial derivatives of the functional with respect to `L` and each `alpha[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub d_l: f64,
    pub d_alpha: Vec<f64>,
}

pub fn grad_q(m: &MixtureSpec, p: &OrderParamZeroT) -> Result<Gradient> {
    p.check_margin(f64::MIN_POSITIVE)?;
    Ok(grad_from_profile(m, p, &Profile::new(m, p)))
}

pub(crate) fn grad_from_profile(m: &MixtureSpec, p: &OrderParamZeroT, prof: &Profile) -> Gradient {
    let cells = p.cells();
    let d_l = 0.5 * (m.field_slope() - prof.inv_sq[cells]);
    // d/da_i = 1/2 int_cell (gbar - gbar(1)), and gbar(1) = 2 d_l.
    let d_alpha = (0..cells)
        .map(|i| 0.5 * (prof.g[i] - prof.g[i + 1]) - p.width(i) * d_l)
        .collect();
    Gradient { d_l, d_alpha }
}

/// Optimality certificate for a candidate minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `min_u g(u)` over the grid nodes (always `<= 0` since `g(1) = 0`).
    pub min_g: f64,
    /// `|xi'(1) + h^2 - int_0^1 dq / (L - int_0^q alpha)^2|`
    pub eq_residual: f64,
    /// `(u, g(u))` at every grid node.
    pub g_samples: Vec<(f64, f64)>,
    /// nu-weighted average of `g` over the support of alpha; 0 when nu = 0.
    pub support_violation: f64,
    /// `xi'(1) + h^2`, the scale for the relative residual.
    pub field_slope: f64,
}

impl Certificate {
    pub fn relative_residual(&self) -> f64 {
        self.eq_residual / self.field_slope
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.relative_residual() <= tol && self.min_g >= -tol && self.support_violation.abs() <= tol
    }
}

pub fn certificate(m: &MixtureSpec, p: &OrderParamZeroT) -> Result<Certificate> {
    p.check_margin(f64::MIN_POSITIVE)?;
    Ok(certificate_from_profile(m, p, &Profile::new(m, p)))
}

pub(crate) fn certificate_from_profile(m: &MixtureSpec, p: &OrderParamZeroT, prof: &Profile) -> Certificate {
    let field = m.field_slope();
    let min_g = prof.g.iter().cloned().fold(f64::INFINITY, f64::min);
    let atoms = p.atoms();
    let mass: f64 = atoms.iter().sum();
    let support_violation = if mass > 0.0 {
        atoms.iter().zip(&prof.g).map(|(d, g)| d * g).sum::<f64>() / mass
    } else {
        0.0
    };
    Certificate {
        min_g,
        eq_residual: (field - prof.inv_sq[p.cells()]).abs(),
        g_samples: p.grid().iter().cloned().zip(prof.g.iter().cloned()).collect(),
        support_violation,
        field_slope: field,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zero_temp::order_param::uniform_grid;

    #[test]
    fn series_match_closed_forms_at_switch() {
        let x: f64 = 0.0499999;
        let lr = -(-x).ln_1p() / x;
        let lm = (-(-x).ln_1p() - x) / (x * x);
        assert!((log_ratio(x) - lr).abs() < 1e-12);
        assert!((log_ratio_first_moment(x) - lm).abs() < 1e-9);
        assert_eq!(log_ratio(0.0), 1.0);
        assert_eq!(log_ratio_first_moment(0.0), 0.5);
    }

    #[test]
    fn rs_point_values() {
        let sk = MixtureSpec::sk(0.0);
        let p = OrderParamZeroT::new(uniform_grid(50), vec![0.0; 50], 1.0, 1e-6).unwrap();
        assert!((eval_q(&sk, &p).unwrap() - 1.0).abs() < 1e-14);
        let sk1 = MixtureSpec::sk(1.0);
        let p = p.with_l(0.5f64.sqrt());
        assert!((eval_q(&sk1, &p).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        let gr = grad_q(&sk1, &p).unwrap();
        assert!(gr.d_l.abs() < 1e-12);
    }

    #[test]
    fn flat_alpha_gradient_formula() {
        // alpha = 0: gbar(s) = xi'(s) + h^2 - s/L^2, so the alpha partial is
        // 1/2 int_cell gbar - w * gbar(1)/2.
        let m = MixtureSpec::from_squared([(2, 0.5), (4, 0.1)], 0.4).unwrap();
        let l = 0.9;
        let p = OrderParamZeroT::new(uniform_grid(20), vec![0.0; 20], l, 1e-6).unwrap();
        let gr = grad_q(&m, &p).unwrap();
        let gbar_int = |a: f64, b: f64| {
            m.xi0(b) - m.xi0(a) + m.h().powi(2) * (b - a) - (b * b - a * a) / (2.0 * l * l)
        };
        let gbar1 = m.field_slope() - 1.0 / (l * l);
        for i in 0..20 {
            let (a, b) = (p.grid()[i], p.grid()[i + 1]);
            let expected = 0.5 * gbar_int(a, b) - 0.5 * (b - a) * gbar1;
            assert!((gr.d_alpha[i] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn margin_violation_is_domain_error() {
        let m = MixtureSpec::sk(0.0);
        let p = OrderParamZeroT::from_parts_unchecked(uniform_grid(4), vec![1.0; 4], 0.5);
        assert!(matches!(eval_q(&m, &p), Err(crate::Error::Domain(_))));
        assert!(certificate(&m, &p).is_err());
    }
}
