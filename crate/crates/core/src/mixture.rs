//! Mixture coefficients and the covariance function
//! `xi(s) = sum_p gamma_p^2 s^p` together with its first three derivatives.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};

/// A finite spherical mixed p-spin model: coefficients `gamma_p` (not squared)
/// and the external field `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    coeffs: BTreeMap<u32, f64>,
    h: f64,
}

impl MixtureSpec {
    pub fn new(coeffs: impl IntoIterator<Item = (u32, f64)>, h: f64) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (p, g) in coeffs {
            if p < 2 {
                return precondition(format!("mixture degree p={p} must be >= 2"));
            }
            if !(g.is_finite() && g >= 0.0) {
                return precondition(format!("gamma_{p}={g} must be finite and >= 0"));
            }
            if map.insert(p, g).is_some() {
                return precondition(format!("duplicate mixture degree p={p}"));
            }
        }
        if !map.values().any(|&g| g > 0.0) {
            return precondition("mixture needs at least one gamma_p > 0");
        }
        if !(h.is_finite() && h >= 0.0) {
            return precondition(format!("external field h={h} must be finite and >= 0"));
        }
        map.retain(|_, g| *g > 0.0);
        Ok(Self { coeffs: map, h })
    }

    /// Build from squared coefficients `gamma_p^2`, which is how models are
    /// usually quoted (`xi(s) = s^2/2` is SK).
    pub fn from_squared(sq: impl IntoIterator<Item = (u32, f64)>, h: f64) -> Result<Self> {
        let mut v = Vec::new();
        for (p, g2) in sq {
            if !(g2 >= 0.0) {
                return precondition(format!("gamma_{p}^2={g2} must be >= 0"));
            }
            v.push((p, g2.sqrt()));
        }
        Self::new(v, h)
    }

    /// Spherical SK model, `xi(s) = s^2/2`.
    pub fn sk(h: f64) -> Self {
        Self::from_squared([(2, 0.5)], h).expect("valid SK mixture")
    }

    /// Pure p-spin model normalized as `xi(s) = s^p/p`.
    pub fn pure(p: u32, h: f64) -> Result<Self> {
        Self::from_squared([(p, 1.0 / p as f64)], h)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.coeffs.iter().map(|(&p, &g)| (p, g)), h)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.coeffs.iter().map(|(&p, &g)| (p, g))
    }

    pub fn gamma(&self, p: u32) -> f64 {
        self.coeffs.get(&p).copied().unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> u32 {
        *self.coeffs.keys().next_back().expect("non-empty mixture")
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.keys().all(|p| p % 2 == 0)
    }

    /// `Some(p)` when exactly one degree is present.
    pub fn pure_degree(&self) -> Option<u32> {
        if self.coeffs.len() == 1 {
            self.coeffs.keys().next().copied()
        } else {
            None
        }
    }

    /// Checked derivative of order 0..=3 at `s` in [-1, 1].
    pub fn xi(&self, s: f64, order: u32) -> Result<f64> {
        if !(s.abs() <= 1.0) {
            return precondition(format!("xi evaluated at s={s}, outside [-1, 1]"));
        }
        if order > 3 {
            return precondition(format!("xi derivative order {order} not in 0..=3"));
        }
        Ok(self.xi_d(s, order))
    }

    /// Unchecked derivative of any order; valid for all real `s`.
    pub fn xi_d(&self, s: f64, order: u32) -> f64 {
        self.coeffs
            .iter()
            .filter(|(&p, _)| p >= order)
            .map(|(&p, &g)| {
                let falling: f64 = (0..order).map(|j| (p - j) as f64).product();
                g * g * falling * s.powi((p - order) as i32)
            })
            .sum()
    }

    pub fn xi0(&self, s: f64) -> f64 {
        self.xi_d(s, 0)
    }
    pub fn xi1(&self, s: f64) -> f64 {
        self.xi_d(s, 1)
    }
    pub fn xi2(&self, s: f64) -> f64 {
        self.xi_d(s, 2)
    }
    pub fn xi3(&self, s: f64) -> f64 {
        self.xi_d(s, 3)
    }

    /// `xi'(1) + h^2`, the quantity that recurs in every zero-temperature formula.
    pub fn field_slope(&self) -> f64 {
        self.xi1(1.0) + self.h * self.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mix24() -> MixtureSpec {
        MixtureSpec::from_squared([(2, 0.5), (4, 1.0 / 24.0)], 0.0).unwrap()
    }

    #[test]
    fn worked_values() {
        assert!((MixtureSpec::sk(0.0).xi(1.0, 1).unwrap() - 1.0).abs() < 1e-15);
        let p3 = MixtureSpec::pure(3, 0.0).unwrap();
        assert!((p3.xi(1.0, 0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((mix24().xi(0.5, 2).unwrap() - 1.125).abs() < 1e-14);
    }

    #[test]
    fn evenness() {
        assert!(MixtureSpec::sk(0.0).is_even());
        assert!(!MixtureSpec::pure(3, 0.0).unwrap().is_even());
        assert!(mix24().is_even());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(MixtureSpec::new([(1, 1.0)], 0.0).is_err());
        assert!(MixtureSpec::new([(2, 0.0)], 0.0).is_err());
        assert!(MixtureSpec::new(Vec::<(u32, f64)>::new(), 0.0).is_err());
        assert!(MixtureSpec::new([(2, -1.0)], 0.0).is_err());
        let m = mix24();
        assert!(m.xi(1.5, 0).is_err());
        assert!(m.xi(0.5, 4).is_err());
    }

    #[test]
    fn derivatives_match_central_differences() {
        let m = MixtureSpec::from_squared([(2, 0.5), (3, 0.2), (4, 1.0 / 24.0), (6, 0.05)], 0.3).unwrap();
        let step = 1e-5;
        for &s in &[0.1, 0.5, 0.9] {
            for k in 1..=3 {
                let fd = (m.xi_d(s + step, k - 1) - m.xi_d(s - step, k - 1)) / (2.0 * step);
                let exact = m.xi_d(s, k);
                assert!((fd - exact).abs() <= 1e-8 * exact.abs().max(1e-300) + 1e-12, "s={s} k={k}");
            }
        }
    }

    #[test]
    fn even_mixture_symmetries() {
        let m = mix24();
        for &s in &[0.1, 0.37, 0.8, 1.0] {
            assert_eq!(m.xi0(-s), m.xi0(s));
            assert_eq!(m.xi1(-s), -m.xi1(s));
        }
        assert_eq!(m.xi0(0.0), 0.0);
        assert_eq!(m.xi1(0.0), 0.0);
    }

    #[test]
    fn nonnegative_and_nondecreasing_on_unit_interval() {
        let m = MixtureSpec::from_squared([(2, 0.3), (3, 0.2), (5, 0.1)], 0.0).unwrap();
        let mut prev = [f64::NEG_INFINITY; 3];
        for i in 0..=100 {
            let s = i as f64 / 100.0;
            for k in 0..3 {
                let v = m.xi_d(s, k as u32);
                assert!(v >= 0.0 && v >= prev[k]);
                prev[k] = v;
            }
        }
    }
}
