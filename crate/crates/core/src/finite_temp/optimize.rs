//! k-jump minimization of the Crisanti–Sommers functional.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::functional::eval_cs;
use super::order::FiniteTempOrder;
use crate::error::{precondition, Result};
use crate::mixture::MixtureSpec;

/// Nelder–Mead on an unconstrained objective. Returns `(argmin, min)`.
pub(crate) fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], scale: f64, ftol: f64, max_evals: usize) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += scale;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let mut evals = n + 1;
    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> { c.iter().zip(w).map(|(a, b)| a + t * (b - a)).collect() };
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if (worst - best).abs() <= ftol * (1.0 + best.abs()) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let reflected = point(&centroid, &simplex[n].0, -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < best {
            let expanded = point(&centroid, &simplex[n].0, -2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (target, ft) = if fr < worst { (&reflected, fr) } else { (&simplex[n].0, worst) };
            let contracted = point(&centroid, target, 0.5);
            let fc = f(&contracted);
            evals += 1;
            if fc < ft {
                simplex[n] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for (v, fv) in simplex.iter_mut().skip(1) {
                    *v = point(&anchor, v, 0.5);
                    *fv = f(v);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Maps `2k - 1` unconstrained reals to a k-jump order parameter: sorted
/// sigmoids give the jump locations and the first `k - 1` values.
fn decode(theta: &[f64], k: usize, beta: f64) -> Option<FiniteTempOrder> {
    let mut q: Vec<f64> = theta[..k].iter().map(|&t| sigmoid(t)).collect();
    let mut x: Vec<f64> = theta[k..].iter().map(|&t| sigmoid(t)).collect();
    q.sort_by(f64::total_cmp);
    x.sort_by(f64::total_cmp);
    x.push(1.0);
    FiniteTempOrder::new(q, x, beta).ok()
}

fn encode(o: &FiniteTempOrder) -> Vec<f64> {
    let clamp = |p: f64| p.clamp(1e-12, 1.0 - 1e-12);
    o.q().iter().map(|&q| logit(clamp(q))).chain(o.x()[..o.k() - 1].iter().map(|&x| logit(clamp(x)))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrsbFit {
    pub order: FiniteTempOrder,
    pub value: f64,
    /// Restarts whose final value lies within `tol` of the best.
    pub agreeing_restarts: usize,
    pub restarts: usize,
}

/// Number of independent Nelder–Mead runs in [`minimize_cs_krsb`].
pub const RESTARTS: usize = 12;

/// Replica-symmetric overlap at inverse temperature `beta`: the root of
/// `q / (1 - q)^2 = beta^2 (xi'(q) + h^2)`, used as a warm start.
fn rs_overlap(m: &MixtureSpec, beta: f64) -> f64 {
    let b2 = beta * beta;
    let f = |q: f64| q / ((1.0 - q) * (1.0 - q)) - b2 * (m.xi1(q) + m.h() * m.h());
    crate::quad::bisect(0.0, 1.0 - 1e-15, 1e-15, 200, f).unwrap_or(0.5)
}

/// Minimizes the Crisanti–Sommers functional over order parameters with `k`
/// jumps by multi-start Nelder–Mead.
pub fn minimize_cs_krsb(m: &MixtureSpec, beta: f64, k: usize, tol: f64) -> Result<KrsbFit> {
    minimize_cs_krsb_from(m, beta, k, tol, None)
}

/// [`minimize_cs_krsb`] with an optional warm start, which replaces one of
/// the random restarts when it has `k` jumps.
pub fn minimize_cs_krsb_from(m: &MixtureSpec, beta: f64, k: usize, tol: f64, warm: Option<&FiniteTempOrder>) -> Result<KrsbFit> {
    if k < 1 {
        return precondition("k must be at least 1");
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return precondition(format!("beta={beta} must be positive and finite"));
    }
    if !(tol > 0.0) {
        return precondition(format!("tol={tol} must be > 0"));
    }
    let objective = move |theta: &[f64]| match decode(theta, k, beta) {
        Some(o) => eval_cs(m, &o).unwrap_or(f64::INFINITY),
        None => f64::INFINITY,
    };
    let q_rs = rs_overlap(m, beta);
    let starts: Vec<Vec<f64>> = (0..RESTARTS)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + r as u64);
            // First start: jumps clustered just below the replica-symmetric
            // overlap. Others: random.
            let q: Vec<f64> = if r == 0 {
                (0..k).map(|i| q_rs * (1.0 - 0.05 * (k - 1 - i) as f64 / k as f64)).collect()
            } else {
                (0..k).map(|_| rng.random_range(0.02..0.98)).collect()
            };
            let x: Vec<f64> = (0..k - 1).map(|_| rng.random_range(0.05..0.95)).collect();
            if r == 1 {
                if let Some(w) = warm.filter(|w| w.k() == k) {
                    return encode(w);
                }
            }
            q.iter().map(|&v| logit(v)).chain(x.iter().map(|&v| logit(v))).collect()
        })
        .collect();
    let ftol = (tol * 1e-3).max(1e-15);
    let runs: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|s| {
            let (mut best, mut value) = nelder_mead(&objective, s, 0.5, ftol, 20_000);
            // Restarting from the result escapes premature collapse.
            for _ in 0..3 {
                let (b, v) = nelder_mead(&objective, &best, 0.1, ftol, 20_000);
                let done = v >= value - ftol;
                best = b;
                value = value.min(v);
                if done {
                    break;
                }
            }
            (best, value)
        })
        .collect();
    let (theta, value) = runs
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .expect("at least one restart");
    let order = decode(&theta, k, beta).expect("finite value implies a valid order parameter");
    let agreeing_restarts = runs.iter().filter(|r| r.1 - value <= tol * (1.0 + value.abs())).count();
    Ok(KrsbFit { order, value, agreeing_restarts, restarts: RESTARTS })
}
