use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::disorder::{inner, norm, normals, retract, stream, tangent, DisorderSample, Landscape, Purpose};
use crate::error::{precondition, Error, Result};
use crate::mixture::MixtureSpec;

/// Armijo sufficient-increase constant.
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// Accept steps whose loss is within this many ulps of the current energy.
const ROUNDING_SLACK: f64 = 16.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once `|tangent gradient| / sqrt(N)` falls to this level.
    pub grad_tol: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self { restarts: 4, max_iters: 20_000, grad_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub sigma: Vec<f64>,
    pub energy: f64,
    pub energy_per_site: f64,
    pub restarts: usize,
    pub best_restart: usize,
    pub converged: bool,
    /// `|tangent gradient| / sqrt(N)` at `sigma`.
    pub grad_norm: f64,
}

struct Run {
    sigma: Vec<f64>,
    energy: f64,
    grad_norm: f64,
}

/// Riemannian gradient ascent with Barzilai–Borwein steps safeguarded by
/// Armijo backtracking along the retraction.
fn ascend(land: &Landscape, mut sigma: Vec<f64>, max_iters: usize, grad_tol: f64) -> Run {
    let root_n = (land.n() as f64).sqrt();
    retract(&mut sigma);
    let (mut e, g) = land.value_grad(&sigma);
    let mut gt = tangent(&g, &sigma);
    let mut step = 1.0;
    for _ in 0..max_iters {
        let gn2 = inner(&gt, &gt);
        if gn2.sqrt() / root_n <= grad_tol {
            break;
        }
        let mut s = step;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial: Vec<f64> = sigma.iter().zip(&gt).map(|(x, d)| x + s * d).collect();
            retract(&mut trial);
            let et = land.value(&trial);
            if et >= e + ARMIJO * s * gn2 - ROUNDING_SLACK * e.abs() {
                accepted = Some(trial);
                break;
            }
            s *= 0.5;
        }
        let Some(next) = accepted else { break };
        let (en, gn) = land.value_grad(&next);
        let gt_next = tangent(&gn, &next);
        let ds: Vec<f64> = next.iter().zip(&sigma).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = gt_next.iter().zip(&gt).map(|(a, b)| a - b).collect();
        let curv = inner(&ds, &dg).abs();
        step = if curv > 0.0 { (inner(&ds, &ds) / curv).clamp(1e-8, 1e8) } else { 2.0 * s };
        sigma = next;
        e = en;
        gt = gt_next;
    }
    // Report the energy evaluated at the returned point.
    Run { energy: land.value(&sigma), grad_norm: norm(&gt) / root_n, sigma }
}

/// Best local maximum of `H_N` over `restarts` random starts. Start `r` is
/// drawn from the stream `(seed, Start, r)`, so a larger restart budget
/// explores a superset of starts.
pub fn ground_state(d: &DisorderSample, m: &MixtureSpec, opts: &AscentOptions) -> Result<GroundStateResult> {
    if opts.restarts == 0 {
        return precondition("restarts must be at least 1");
    }
    let land = Landscape::new(d, m)?;
    let n = d.n();
    let runs: Vec<Run> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let start = normals(&mut stream(d.seed(), Purpose::Start, r as u32), n);
            ascend(&land, start, opts.max_iters, opts.grad_tol)
        })
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.energy > runs[best].energy {
            best = r;
        }
    }
    let run = runs.into_iter().nth(best).expect("at least one restart");
    Ok(GroundStateResult {
        energy_per_site: run.energy / n as f64,
        energy: run.energy,
        restarts: opts.restarts,
        best_restart: best,
        converged: run.grad_norm <= opts.grad_tol,
        grad_norm: run.grad_norm,
        sigma: run.sigma,
    })
}

/// Residual `|A v - lambda v|` at which the power iteration stops.
const ORACLE_RESIDUAL: f64 = 1e-7;
/// Relative change of the Rayleigh quotient at which it stops.
const ORACLE_TOL: f64 = 1e-12;
const ORACLE_MAX_ITERS: usize = 2_000_000;

/// `N lambda_max / 2` for the symmetrized SK coupling matrix
/// `A = (gamma_2 / sqrt N)(G + G^T)`, which is the exact maximum of `H_N`.
pub fn sk_eigen_oracle(d: &DisorderSample, m: &MixtureSpec) -> Result<f64> {
    if m.pure_degree() != Some(2) || (m.gamma(2).powi(2) - 0.5).abs() > 1e-12 || m.h() != 0.0 {
        return precondition("the eigenvalue oracle needs the SK mixture gamma_2^2 = 1/2 with h = 0");
    }
    let n = d.n();
    let g = d.tensor(2).ok_or_else(|| Error::Precondition("sample has no p=2 tensor".into()))?;
    let c = m.gamma(2) / (n as f64).sqrt();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = c * (g[i * n + j] + g[j * n + i]);
        }
    }
    // Shift by the Gershgorin radius so the top eigenvalue dominates.
    let shift = a.chunks_exact(n).map(|row| row.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut v = normals(&mut stream(d.seed(), Purpose::Oracle, 0), n);
    let vn = norm(&v);
    v.iter_mut().for_each(|x| *x /= vn);
    let mut lambda = f64::NAN;
    for _ in 0..ORACLE_MAX_ITERS {
        let av: Vec<f64> = a.chunks_exact(n).map(|row| inner(row, &v)).collect();
        let next_lambda = inner(&v, &av);
        let residual = av.iter().zip(&v).map(|(x, y)| (x - next_lambda * y).powi(2)).sum::<f64>().sqrt();
        let settled = (next_lambda - lambda).abs() <= ORACLE_TOL * next_lambda.abs();
        lambda = next_lambda;
        if residual <= ORACLE_RESIDUAL && settled {
            return Ok(0.5 * n as f64 * lambda);
        }
        let mut w: Vec<f64> = av.iter().zip(&v).map(|(x, y)| x + shift * y).collect();
        let wn = norm(&w);
        w.iter_mut().for_each(|x| *x /= wn);
        v = w;
    }
    Err(Error::Inconsistent(format!("power iteration did not settle in {ORACLE_MAX_ITERS} steps")))
}
