use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::functional::{certificate_from_profile, eval_q_unchecked, grad_from_profile, Certificate, Profile};
use super::newton::polish;
use super::order_param::{pava, uniform_grid, OrderParamZeroT, DEFAULT_MARGIN};
use crate::error::{precondition, Error, Result};
use crate::mixture::MixtureSpec;
use crate::quad::{bisect, gl_interval};

/// Default number of grid cells for numerical solves.
pub const DEFAULT_GRID: usize = 1000;
/// Cells used to discretize the closed-form full-RSB order parameter.
pub const CLOSED_FORM_GRID: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    RS,
    OneRSBPure,
    FullRSB,
    Other,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Phase::RS => "RS",
            Phase::OneRSBPure => "OneRSBPure",
            Phase::FullRSB => "FullRSB",
            Phase::Other => "Other",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTempSolution {
    pub param: OrderParamZeroT,
    pub gs_value: f64,
    pub q0: f64,
    pub phase: Phase,
    pub certificate: Certificate,
}

impl ZeroTempSolution {
    fn assemble(m: &MixtureSpec, param: OrderParamZeroT, gs_value: Option<f64>, q0: f64, phase: Phase) -> Self {
        let prof = Profile::new(m, &param);
        let gs_value = gs_value.unwrap_or_else(|| eval_q_unchecked(m, &param, &prof));
        let certificate = certificate_from_profile(m, &param, &prof);
        Self { param, gs_value, q0, phase, certificate }
    }

    pub fn l0(&self) -> f64 {
        self.param.l()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub grid_size: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub margin: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { grid_size: DEFAULT_GRID, tol: 1e-7, max_iters: 2000, margin: DEFAULT_MARGIN }
    }
}

/// Minimizes the zero-temperature functional over step functions on a
/// uniform grid with `grid_size` cells.
pub fn minimize_q(m: &MixtureSpec, grid_size: usize, tol: f64) -> Result<ZeroTempSolution> {
    minimize_q_with(m, &SolverOptions { grid_size, tol, ..SolverOptions::default() })
}

pub fn minimize_q_with(m: &MixtureSpec, opts: &SolverOptions) -> Result<ZeroTempSolution> {
    if opts.grid_size < 50 {
        return precondition(format!("grid_size={} must be >= 50", opts.grid_size));
    }
    if !(opts.tol > 0.0) {
        return precondition(format!("tol={} must be > 0", opts.tol));
    }
    if !(opts.margin > 0.0) {
        return precondition(format!("margin={} must be > 0", opts.margin));
    }
    let cells = opts.grid_size;
    let grid = uniform_grid(cells);
    let weights: Vec<f64> = grid.windows(2).map(|w| w[1] - w[0]).collect();
    // Start from the replica-symmetric point.
    let mut param = OrderParamZeroT::from_parts_unchecked(grid, vec![0.0; cells], m.field_slope().powf(-0.5));
    if param.gap() < opts.margin {
        param = param.with_l(opts.margin);
    }
    let mut prof = Profile::new(m, &param);
    let mut value = eval_q_unchecked(m, &param, &prof);
    let mut step: f64 = 1.0;
    let mut iters = 0;

    // Projected gradient in the cell-weighted metric, PAV projection,
    // Armijo backtracking.
    while iters < opts.max_iters {
        if certificate_from_profile(m, &param, &prof).passes(opts.tol) {
            break;
        }
        iters += 1;
        let grad = grad_from_profile(m, &param, &prof);
        let mut improved = false;
        step = (step * 4.0).min(1e6);
        while step > 1e-16 {
            let trial: Vec<f64> = param
                .alpha()
                .iter()
                .zip(&grad.d_alpha)
                .zip(&weights)
                .map(|((a, d), w)| a - step * d / w)
                .collect();
            let alpha: Vec<f64> = pava(&trial, &weights).into_iter().map(|a| a.max(0.0)).collect();
            let mut cand = param.with_alpha(alpha).with_l(param.l() - step * grad.d_l);
            if cand.gap() < opts.margin {
                cand = cand.with_l(cand.total_mass() + opts.margin);
            }
            let directional: f64 = grad.d_l * (cand.l() - param.l())
                + grad
                    .d_alpha
                    .iter()
                    .zip(cand.alpha().iter().zip(param.alpha()))
                    .map(|(d, (a1, a0))| d * (a1 - a0))
                    .sum::<f64>();
            let cprof = Profile::new(m, &cand);
            let cval = eval_q_unchecked(m, &cand, &cprof);
            if cval <= value + 1e-4 * directional && directional < 0.0 {
                param = cand;
                prof = cprof;
                value = cval;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }

    let mut param = polish(m, param, opts.margin, 200);
    for _ in 0..JUMP_REFINEMENTS {
        param = polish(m, refine_jumps(&param), opts.margin, 50);
    }
    let q0 = param.support_start();
    let sol = ZeroTempSolution::assemble(m, param, None, q0, classify_phase(m));
    if sol.certificate.passes(opts.tol) {
        Ok(sol)
    } else {
        Err(Error::NotConverged {
            iters,
            eq_residual: sol.certificate.eq_residual,
            min_g: sol.certificate.min_g,
            best: Box::new(sol),
        })
    }
}

/// Rounds of local grid refinement around isolated jumps of alpha.
const JUMP_REFINEMENTS: usize = 3;
const JUMP_SUBDIVISIONS: usize = 10;

/// Subdivides the two cells on either side of the first jump (the start of
/// the support) and of every jump that carries at least 5% of the total
/// mass, so the jump location is no longer pinned to the coarse grid. The
/// step function itself is unchanged.
fn refine_jumps(p: &OrderParamZeroT) -> OrderParamZeroT {
    let atoms = p.atoms();
    let total = p.total_mass();
    let grid = p.grid();
    let cells = p.cells();
    let mut split = vec![false; cells];
    let first = atoms.iter().position(|&d| d > 0.0);
    for (j, &d) in atoms.iter().enumerate() {
        if total > 0.0 && (d >= 0.05 * total || Some(j) == first) {
            if j > 0 {
                split[j - 1] = true;
            }
            split[j] = true;
        }
    }
    if !split.iter().any(|&b| b) {
        return p.clone();
    }
    let mut new_grid = Vec::with_capacity(cells + 4 * JUMP_SUBDIVISIONS);
    let mut new_alpha = Vec::with_capacity(cells + 4 * JUMP_SUBDIVISIONS);
    for i in 0..cells {
        let parts = if split[i] { JUMP_SUBDIVISIONS } else { 1 };
        for k in 0..parts {
            new_grid.push(grid[i] + (grid[i + 1] - grid[i]) * k as f64 / parts as f64);
            new_alpha.push(p.alpha()[i]);
        }
    }
    new_grid.push(1.0);
    OrderParamZeroT::from_parts_unchecked(new_grid, new_alpha, p.l())
}

fn concave_inverse_sqrt_curvature(m: &MixtureSpec) -> bool {
    const SAMPLES: usize = 1000;
    let f = |s: f64| m.xi2(s).powf(-0.5);
    let vals: Vec<f64> = (1..=SAMPLES).map(|k| f(k as f64 / SAMPLES as f64)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return false;
    }
    vals.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] <= 1e-10)
}

pub fn classify_phase(m: &MixtureSpec) -> Phase {
    if m.field_slope() >= m.xi2(1.0) {
        Phase::RS
    } else if concave_inverse_sqrt_curvature(m) {
        Phase::FullRSB
    } else if m.h() == 0.0 && m.pure_degree().is_some_and(|p| p >= 3) {
        Phase::OneRSBPure
    } else {
        Phase::Other
    }
}

pub fn closed_form_rs(m: &MixtureSpec) -> Result<ZeroTempSolution> {
    let phase = classify_phase(m);
    if phase != Phase::RS {
        return Err(Error::Phase(format!("replica-symmetric closed form needs RS, model is {phase}")));
    }
    let field = m.field_slope();
    let param = OrderParamZeroT::from_parts_unchecked(uniform_grid(DEFAULT_GRID), vec![0.0; DEFAULT_GRID], field.powf(-0.5));
    Ok(ZeroTempSolution::assemble(m, param, Some(field.sqrt()), 1.0, Phase::RS))
}

pub fn closed_form_frsb(m: &MixtureSpec, tol: f64) -> Result<ZeroTempSolution> {
    let phase = classify_phase(m);
    if phase != Phase::FullRSB {
        return Err(Error::Phase(format!("full-RSB closed form needs FullRSB, model is {phase}")));
    }
    let h2 = m.h() * m.h();
    let q0 = bisect(0.0, 1.0, tol, 200, |q| m.xi1(q) + h2 - q * m.xi2(q))
        .ok_or_else(|| Error::Phase("no sign change for the q0 equation on [0, 1]".into()))?;
    let inv_sqrt = |s: f64| m.xi2(s).powf(-0.5);
    if !inv_sqrt(q0).is_finite() {
        return Err(Error::Phase(format!("xi''(q0) vanishes at q0={q0}")));
    }

    let cells = CLOSED_FORM_GRID;
    let below = if q0 > 0.0 { ((q0 * cells as f64).round() as usize).clamp(1, cells - 1) } else { 0 };
    let mut grid: Vec<f64> = (0..below).map(|i| q0 * i as f64 / below as f64).collect();
    let above = cells - below;
    grid.extend((0..above).map(|i| q0 + (1.0 - q0) * i as f64 / above as f64));
    grid.push(1.0);
    // cell averages of xi'''/(2 xi''^{3/2}) = -(xi''^{-1/2})'
    let mut alpha: Vec<f64> = (0..cells)
        .map(|i| {
            if i < below {
                0.0
            } else {
                (inv_sqrt(grid[i]) - inv_sqrt(grid[i + 1])) / (grid[i + 1] - grid[i])
            }
        })
        .collect();
    for i in 1..cells {
        alpha[i] = alpha[i].max(alpha[i - 1]);
    }
    let param = OrderParamZeroT::from_parts_unchecked(grid, alpha, inv_sqrt(q0));
    let pieces = 64;
    let tail: f64 = (0..pieces)
        .map(|k| {
            let a = q0 + (1.0 - q0) * k as f64 / pieces as f64;
            let b = q0 + (1.0 - q0) * (k + 1) as f64 / pieces as f64;
            gl_interval(a, b, |q| m.xi2(q).sqrt())
        })
        .sum();
    let gs = q0 * m.xi2(q0).sqrt() + tail;
    Ok(ZeroTempSolution::assemble(m, param, Some(gs), q0, Phase::FullRSB))
}

/// Right-hand side of the one-step equation `1/p = (1+z)/z^2 ln(1+z) - 1/z`.
pub fn one_rsb_rhs(z: f64) -> f64 {
    if z < 1e-2 {
        // sum_{k>=2} (-1)^k z^{k-2} / (k(k-1))
        (2..20).rev().fold(0.0, |acc, k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc * z + sign / (k * (k - 1)) as f64
        })
    } else {
        (1.0 + z) / (z * z) * z.ln_1p() - 1.0 / z
    }
}

/// Root `z > 0` of the one-step equation for the pure p-spin model.
pub fn one_rsb_z(p: u32) -> Result<f64> {
    if p < 3 {
        return precondition(format!("one-step closed form needs p >= 3, got {p}"));
    }
    let target = 1.0 / p as f64;
    let f = |z: f64| one_rsb_rhs(z) - target;
    let mut hi = 1e3;
    while f(hi) > 0.0 {
        hi *= 10.0;
        if hi > 1e15 {
            return Err(Error::Phase("one-step bracket expansion failed".into()));
        }
    }
    bisect(1e-8, hi, 0.0, 400, f).ok_or_else(|| Error::Phase("one-step bracket has no sign change".into()))
}

pub fn closed_form_1rsb(p: u32) -> Result<ZeroTempSolution> {
    let z = one_rsb_z(p)?;
    let m = MixtureSpec::pure(p, 0.0)?;
    let delta = z / (1.0 + z);
    let level = (z * delta).sqrt();
    let l0 = level + (delta / z).sqrt();
    let gs = (1.0 + z / p as f64) / (z + 1.0).sqrt();
    let param = OrderParamZeroT::from_parts_unchecked(uniform_grid(DEFAULT_GRID), vec![level; DEFAULT_GRID], l0);
    Ok(ZeroTempSolution::assemble(&m, param, Some(gs), 0.0, Phase::OneRSBPure))
}

/// Closed form for whichever phase has one.
pub fn closed_form(m: &MixtureSpec, tol: f64) -> Result<ZeroTempSolution> {
    match classify_phase(m) {
        Phase::RS => closed_form_rs(m),
        Phase::FullRSB => closed_form_frsb(m, tol),
        Phase::OneRSBPure => closed_form_1rsb(m.pure_degree().expect("pure")),
        Phase::Other => Err(Error::Phase("no closed form for this mixture".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsPartials {
    pub d_h: f64,
    pub d_gamma: BTreeMap<u32, f64>,
}

/// Partial derivatives of the ground-state energy in `h` and each `gamma_p`.
pub fn gs_partials(m: &MixtureSpec, sol: &ZeroTempSolution) -> GsPartials {
    let p = &sol.param;
    let l0 = p.l();
    let mass = p.total_mass();
    let grid = p.grid();
    let d_gamma = m
        .coeffs()
        .map(|(deg, g)| {
            let e = deg as i32;
            let moment: f64 = p
                .alpha()
                .iter()
                .enumerate()
                .map(|(i, a)| a * (grid[i + 1].powi(e) - grid[i].powi(e)) / deg as f64)
                .sum();
            (deg, deg as f64 * g * (l0 - mass + moment))
        })
        .collect();
    GsPartials { d_h: m.h() * l0, d_gamma }
}
