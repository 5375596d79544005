//! Projected Newton polish in atom coordinates.
//!
//! The step function is rewritten as `alpha = sum_j d_j 1[s_j, 1)` with atoms
//! `d_j >= 0`, which turns the monotone cone into the nonnegative orthant.
//! Bertsekas-style projected Newton then drives the certificate down to
//! rounding level.

use nalgebra::{DMatrix, DVector};

use super::functional::{eval_q_unchecked, grad_from_profile, Profile};
use super::order_param::OrderParamZeroT;
use crate::mixture::MixtureSpec;
use crate::quad::gl_interval;

struct State {
    param: OrderParamZeroT,
    atoms: Vec<f64>,
    value: f64,
    /// Gradient in (L, atoms) coordinates.
    grad: Vec<f64>,
}

impl State {
    fn new(m: &MixtureSpec, param: OrderParamZeroT) -> Self {
        let prof = Profile::new(m, &param);
        let value = eval_q_unchecked(m, &param, &prof);
        let g = grad_from_profile(m, &param, &prof);
        let cells = param.cells();
        let mut grad = vec![0.0; cells + 1];
        grad[0] = g.d_l;
        let mut acc = 0.0;
        for j in (0..cells).rev() {
            acc += g.d_alpha[j];
            grad[j + 1] = acc;
        }
        let atoms = param.atoms();
        Self { param, atoms, value, grad }
    }

    fn projected_gradient_norm(&self) -> f64 {
        let mut n = self.grad[0].abs();
        for (j, d) in self.atoms.iter().enumerate() {
            let g = self.grad[j + 1];
            n = n.max((d - (d - g).max(0.0)).abs());
        }
        n
    }
}

/// Suffix sums over cells of `int_cell r^k / c^3`, `r = 1 - q`, k = 0..2.
fn suffix_moments(p: &OrderParamZeroT) -> Vec<[f64; 3]> {
    let cells = p.cells();
    let grid = p.grid();
    let cum = p.cumulative();
    let mut s = vec![[0.0f64; 3]; cells + 1];
    for i in (0..cells).rev() {
        let (a, c0, s0) = (p.alpha()[i], p.l() - cum[i], grid[i]);
        for k in 0..3 {
            let mom = gl_interval(grid[i], grid[i + 1], |q| {
                let c = c0 - a * (q - s0);
                (1.0 - q).powi(k as i32) / (c * c * c)
            });
            s[i][k] = s[i + 1][k] + mom;
        }
    }
    s
}

/// Hessian entry in (L, atoms) coordinates; index 0 is `L`, index `j+1` the
/// atom at `grid[j]`. Only `1/2 int 1/c` is nonlinear, and its Hessian is
/// `int c^-3 v v^T` with `v = (1, -(q - s_0)_+, ..., -(q - s_{M-1})_+)`.
fn hessian_entry(s: &[[f64; 3]], grid: &[f64], va: usize, vb: usize) -> f64 {
    let t = |j: usize| 1.0 - grid[j];
    match (va, vb) {
        (0, 0) => s[0][0],
        (0, k) | (k, 0) => {
            let j = k - 1;
            -(t(j) * s[j][0] - s[j][1])
        }
        (x, y) => {
            let (j, k) = (x - 1, y - 1);
            let m = j.max(k);
            t(j) * t(k) * s[m][0] - (t(j) + t(k)) * s[m][1] + s[m][2]
        }
    }
}

fn hessian(s: &[[f64; 3]], grid: &[f64], free: &[usize]) -> DMatrix<f64> {
    let n = free.len();
    let mut h = DMatrix::zeros(n, n);
    for (a, &va) in free.iter().enumerate() {
        for (b, &vb) in free.iter().enumerate().skip(a) {
            let v = hessian_entry(s, grid, va, vb);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    h
}

fn solve_spd(mut h: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = (0..h.nrows()).map(|i| h[(i, i)]).fold(0.0, f64::max);
    let mut ridge = 0.0;
    for _ in 0..8 {
        if let Some(ch) = h.clone().cholesky() {
            return Some(ch.solve(rhs));
        }
        let add = if ridge == 0.0 { 1e-14 * scale } else { ridge * 9.0 };
        for i in 0..h.nrows() {
            h[(i, i)] += add;
        }
        ridge += add;
    }
    None
}

/// Runs an active-set Newton iteration from `start`; returns the improved
/// order parameter.
pub(crate) fn polish(m: &MixtureSpec, start: OrderParamZeroT, margin: f64, max_iter: usize) -> OrderParamZeroT {
    let grid = start.grid().to_vec();
    let mut st = State::new(m, start);
    let cells = st.atoms.len();
    for _ in 0..max_iter {
        let pg = st.projected_gradient_norm();
        if pg < 1e-15 {
            break;
        }
        let moments = suffix_moments(&st.param);
        let mut x = vec![st.param.l()];
        x.extend_from_slice(&st.atoms);

        // Atoms at zero with a pushing-out gradient stay fixed; free atoms
        // whose Newton target turns negative are pinned and the system is
        // solved again.
        let mut fixed: Vec<bool> = (0..=cells).map(|v| v > 0 && x[v] == 0.0 && st.grad[v] >= 0.0).collect();
        let mut y = x.clone();
        let mut solved = false;
        for _ in 0..=cells {
            let free: Vec<usize> = (0..=cells).filter(|&v| !fixed[v]).collect();
            // Gradient of the quadratic model at x restricted to free
            // coordinates, after moving pinned atoms to zero.
            let h_full = |a: usize, b: usize| hessian_entry(&moments, &grid, a, b);
            let pinned: Vec<usize> = (1..=cells).filter(|&v| fixed[v] && x[v] != 0.0).collect();
            let rhs = DVector::from_iterator(
                free.len(),
                free.iter().map(|&v| -st.grad[v] + pinned.iter().map(|&u| h_full(v, u) * x[u]).sum::<f64>()),
            );
            let Some(dir) = solve_spd(hessian(&moments, &grid, &free), &rhs) else { break };
            let mut neg = false;
            for (i, &v) in free.iter().enumerate() {
                y[v] = x[v] + dir[i];
                if v > 0 && y[v] < 0.0 {
                    fixed[v] = true;
                    neg = true;
                }
            }
            for v in 1..=cells {
                if fixed[v] {
                    y[v] = 0.0;
                }
            }
            if !neg {
                solved = true;
                break;
            }
        }
        if !solved {
            break;
        }

        let predicted: f64 = (0..=cells).map(|v| -st.grad[v] * (y[v] - x[v])).sum();
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-12 {
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + step * (b - a)).collect();
            let cand = OrderParamZeroT::from_atoms(grid.clone(), &z[1..], z[0]);
            if cand.gap() >= margin {
                let next = State::new(m, cand);
                let decrease = st.value - next.value;
                let noise = 1e-14 * st.value.abs();
                if decrease >= 1e-4 * step * predicted
                    || (decrease > -noise && next.projected_gradient_norm() < 0.5 * pg)
                {
                    accepted = Some(next);
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some(next) => st = next,
            None => break,
        }
    }
    st.param
}
