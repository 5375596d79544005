//! Crisanti–Sommers and Parisi functionals at inverse temperature `beta`.
//!
//! Every integral against a step `x` is split at the jumps. Integrals of
//! polynomials in `q` times linear functions are done by parts or by
//! Gauss–Legendre, which is exact for them up to degree 15; `int 1/x_hat` has
//! a closed form on each piece.

use super::order::{FiniteTempOrder, Piece};
use crate::error::{precondition, Error, Result};
use crate::mixture::MixtureSpec;
use crate::quad::{bisect, gl_interval, log_ratio};

/// Subintervals per piece for integrands with a `1/(b - d(q))` factor.
const RESOLVENT_SPLITS: usize = 32;

fn split_gl(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let w = (b - a) / RESOLVENT_SPLITS as f64;
    (0..RESOLVENT_SPLITS).map(|k| gl_interval(a + k as f64 * w, a + (k + 1) as f64 * w, &f)).sum()
}

/// `int_0^{q_hat} dq / x_hat(q)`, exact on each piece.
fn inverse_tail_integral(pieces: &[Piece], total: f64, q_hat: f64) -> Result<f64> {
    let mut acc = 0.0;
    let mut check = 0.0;
    for p in pieces {
        let end = p.b.min(q_hat);
        if end > p.a {
            let w = end - p.a;
            let top = total - check;
            if !(top > 0.0 && top - p.x * w > 0.0) {
                return Err(Error::Domain(format!("x_hat vanishes inside [{}, {end}]", p.a)));
            }
            acc += w / top * log_ratio(p.x * w / top);
        }
        check += p.x * (p.b - p.a);
    }
    Ok(acc)
}

fn check_q_hat(o: &FiniteTempOrder, q_hat: f64) -> Result<()> {
    if !(q_hat >= o.q_hat() && q_hat < 1.0) {
        return precondition(format!("q_hat={q_hat} must lie in [{}, 1)", o.q_hat()));
    }
    Ok(())
}

/// Crisanti–Sommers functional in the integrated-by-parts form.
pub fn eval_cs(m: &MixtureSpec, o: &FiniteTempOrder) -> Result<f64> {
    eval_cs_at(m, o, o.q_hat())
}

/// Same as [`eval_cs`] with an explicit cutoff `q_hat` past the last jump.
pub fn eval_cs_at(m: &MixtureSpec, o: &FiniteTempOrder, q_hat: f64) -> Result<f64> {
    check_q_hat(o, q_hat)?;
    let b2 = o.beta() * o.beta();
    let pieces = o.pieces();
    let total = o.x_check(1.0);
    let slope = b2 * m.field_slope() * total;
    let mut check = 0.0;
    let mut curvature = 0.0;
    for p in &pieces {
        let c0 = check;
        curvature += gl_interval(p.a, p.b, |q| b2 * m.xi2(q) * (c0 + p.x * (q - p.a)));
        check += p.x * (p.b - p.a);
    }
    let tail = inverse_tail_integral(&pieces, total, q_hat)?;
    Ok(0.5 * (slope - curvature + tail + (-q_hat).ln_1p()))
}

/// Crisanti–Sommers functional in its original form
/// `1/2 [int (xi_b' + h_b^2) x + int_0^{q_hat} 1/x_hat + log(1 - q_hat)]`.
pub fn eval_cs_direct(m: &MixtureSpec, o: &FiniteTempOrder) -> Result<f64> {
    let b2 = o.beta() * o.beta();
    let h2 = m.h() * m.h();
    let pieces = o.pieces();
    let linear: f64 = pieces
        .iter()
        .map(|p| p.x * b2 * (m.xi0(p.b) - m.xi0(p.a) + h2 * (p.b - p.a)))
        .sum();
    let tail = inverse_tail_integral(&pieces, o.x_check(1.0), o.q_hat())?;
    Ok(0.5 * (linear + tail + (-o.q_hat()).ln_1p()))
}

/// `d(q) = int_q^1 xi_b''(s) x(s) ds` at the piece boundaries, plus an
/// evaluator for interior points.
pub(crate) struct Resolvent<'a> {
    m: &'a MixtureSpec,
    b2: f64,
    pieces: Vec<Piece>,
    suffix: Vec<f64>,
}

impl<'a> Resolvent<'a> {
    pub fn new(m: &'a MixtureSpec, o: &FiniteTempOrder) -> Self {
        let b2 = o.beta() * o.beta();
        let pieces = o.pieces();
        let mut suffix = vec![0.0; pieces.len() + 1];
        for (j, p) in pieces.iter().enumerate().rev() {
            suffix[j] = suffix[j + 1] + p.x * b2 * (m.xi1(p.b) - m.xi1(p.a));
        }
        Self { m, b2, pieces, suffix }
    }

    pub fn d0(&self) -> f64 {
        self.suffix[0]
    }

    /// `d(q)` for `q` in piece `j`.
    pub fn d_in(&self, j: usize, q: f64) -> f64 {
        let p = &self.pieces[j];
        p.x * self.b2 * (self.m.xi1(p.b) - self.m.xi1(q)) + self.suffix[j + 1]
    }

    pub fn d(&self, q: f64) -> f64 {
        let j = self.pieces.partition_point(|p| p.b <= q).min(self.pieces.len() - 1);
        self.d_in(j, q)
    }

    /// `int_0^1 xi_b''(q) / (b - d(q))^power dq`.
    pub fn integral(&self, b: f64, power: i32) -> f64 {
        self.integrate_range(0.0, 1.0, |j, q| (b - self.d_in(j, q)).powi(-power))
    }

    /// `int_a^b xi_b''(q) f(j, q) dq` where `j` is the piece holding `q`.
    pub fn integrate_range(&self, a: f64, b: f64, f: impl Fn(usize, f64) -> f64) -> f64 {
        self.pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.b > a && p.a < b)
            .map(|(j, p)| split_gl(p.a.max(a), p.b.min(b), |q| self.b2 * self.m.xi2(q) * f(j, q)))
            .sum()
    }

    /// `int_0^1 q xi_b''(q) x(q) dq`, by parts.
    pub fn first_moment(&self) -> f64 {
        let f = |q: f64| q * self.m.xi1(q) - self.m.xi0(q);
        self.pieces.iter().map(|p| p.x * self.b2 * (f(p.b) - f(p.a))).sum()
    }
}

/// Parisi functional for the pair `(x, b)`.
pub fn eval_parisi_p(m: &MixtureSpec, o: &FiniteTempOrder, b: f64) -> Result<f64> {
    let r = Resolvent::new(m, o);
    let floor = r.d0().max(1.0);
    if !(b > floor && b.is_finite()) {
        return precondition(format!("b={b} must exceed max(1, int xi_b'' x)={floor}"));
    }
    Ok(parisi_value(&r, m.h() * o.beta(), b))
}

fn parisi_value(r: &Resolvent, hb: f64, b: f64) -> f64 {
    0.5 * (hb * hb / (b - r.d0()) + r.integral(b, 1) + b - 1.0 - b.ln() - r.first_moment())
}

fn parisi_slope(r: &Resolvent, hb: f64, b: f64) -> f64 {
    0.5 * (-hb * hb / (b - r.d0()).powi(2) - r.integral(b, 2) + 1.0 - 1.0 / b)
}

/// Minimizes the Parisi functional over `b` for fixed `x`; returns `(b, value)`.
///
/// The map `b -> P(x, b)` is convex, so the minimizer is the root of its
/// derivative.
pub fn minimize_parisi_b(m: &MixtureSpec, o: &FiniteTempOrder) -> Result<(f64, f64)> {
    let r = Resolvent::new(m, o);
    let hb = m.h() * o.beta();
    let floor = r.d0().max(1.0);
    let slope = |b: f64| parisi_slope(&r, hb, b);
    let mut lo = floor * (1.0 + 1e-12) + 1e-300;
    while slope(lo) >= 0.0 {
        // The minimum sits at the boundary; approach it.
        let next = floor + 0.5 * (lo - floor);
        if next <= floor {
            return Ok((lo, parisi_value(&r, hb, lo)));
        }
        lo = next;
    }
    let mut hi = 2.0 * floor + 1.0;
    while slope(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Domain("Parisi functional has no minimizer in b".into()));
        }
    }
    let b = bisect(lo, hi, 1e-14 * hi, 400, slope).expect("bracket has a sign change");
    Ok((b, parisi_value(&r, hb, b)))
}
