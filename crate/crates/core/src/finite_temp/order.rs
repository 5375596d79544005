use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};

/// Step distribution function with finitely many jumps at inverse
/// temperature `beta`.
///
/// `x(s) = 0` on `[0, q[0])`, `x(s) = x[i]` on `[q[i], q[i+1])`, and the last
/// value is 1, so `x = 1` on `[q[k-1], 1]`. `q_hat` is `q[k-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteTempOrder {
    q: Vec<f64>,
    x: Vec<f64>,
    beta: f64,
}

/// A maximal interval on which `x` is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub x: f64,
}

impl FiniteTempOrder {
    pub fn new(q: Vec<f64>, x: Vec<f64>, beta: f64) -> Result<Self> {
        if q.is_empty() || q.len() != x.len() {
            return precondition(format!("need matching nonempty atom lists, got {} and {}", q.len(), x.len()));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return precondition(format!("beta={beta} must be positive and finite"));
        }
        if !(q[0] >= 0.0) || q.windows(2).any(|w| !(w[1] > w[0])) || !(q[q.len() - 1] < 1.0) {
            return precondition(format!("atom locations {q:?} must increase strictly within [0, 1)"));
        }
        if !(x[0] >= 0.0) || x.windows(2).any(|w| !(w[1] > w[0])) {
            return precondition(format!("atom values {x:?} must increase strictly from >= 0"));
        }
        if x[x.len() - 1] != 1.0 {
            return precondition("last atom value must be 1");
        }
        Ok(Self { q, x, beta })
    }

    /// Replica-symmetric order parameter: a single jump to 1 at `q`.
    pub fn replica_symmetric(q: f64, beta: f64) -> Result<Self> {
        Self::new(vec![q], vec![1.0], beta)
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k(&self) -> usize {
        self.q.len()
    }

    pub fn q_hat(&self) -> f64 {
        self.q[self.q.len() - 1]
    }

    pub fn x_at(&self, s: f64) -> f64 {
        match self.q.partition_point(|&q| q <= s) {
            0 => 0.0,
            j => self.x[j - 1],
        }
    }

    /// Constant pieces covering `[0, 1]`, the zero piece first if `q[0] > 0`.
    pub fn pieces(&self) -> Vec<Piece> {
        let mut out = Vec::with_capacity(self.q.len() + 1);
        if self.q[0] > 0.0 {
            out.push(Piece { a: 0.0, b: self.q[0], x: 0.0 });
        }
        for (i, (&q, &x)) in self.q.iter().zip(&self.x).enumerate() {
            let b = self.q.get(i + 1).copied().unwrap_or(1.0);
            out.push(Piece { a: q, b, x });
        }
        out
    }

    /// `int_0^q x(s) ds`, exact.
    pub fn x_check(&self, q: f64) -> f64 {
        self.pieces().iter().map(|p| p.x * (q.min(p.b) - p.a).max(0.0)).sum()
    }

    /// `int_q^1 x(s) ds`, exact.
    pub fn x_hat(&self, q: f64) -> f64 {
        self.x_check(1.0) - self.x_check(q)
    }

    /// `int_0^1 beta x(s) ds`.
    pub fn scaled_mass(&self) -> f64 {
        self.beta * self.x_check(1.0)
    }
}
