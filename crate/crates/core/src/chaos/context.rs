use crate::error::{precondition, Error, Result};
use crate::mixture::MixtureSpec;
use crate::quad::gl_interval;
use crate::zero_temp::ZeroTempSolution;

/// Relative tolerance of the `B - D(0) = 1/L0` consistency check.
pub const IDENTITY_TOL: f64 = 1e-6;
/// Certificate tolerance a solution must meet to seed a context.
pub const CERTIFICATE_TOL: f64 = 1e-6;

/// Quantities derived from the zero-temperature minimizer that enter the
/// coupled functional.
#[derive(Debug, Clone)]
pub struct ChaosContext {
    mixture: MixtureSpec,
    sol: ZeroTempSolution,
    pub delta0: f64,
    pub v0: f64,
    pub v1: f64,
    pub b: f64,
    /// `int_0^{s_i} xi'' alpha` at the grid nodes.
    cum: Vec<f64>,
}

impl ChaosContext {
    pub fn build(m: &MixtureSpec, sol: &ZeroTempSolution) -> Result<Self> {
        if !m.is_even() {
            return precondition("chaos analysis needs an even mixture");
        }
        if !sol.certificate.passes(CERTIFICATE_TOL) {
            return precondition(format!(
                "solution is not certified (relative residual {:.2e}, min_g {:.2e})",
                sol.certificate.relative_residual(),
                sol.certificate.min_g
            ));
        }
        let p = &sol.param;
        let grid = p.grid();
        let delta0 = p.gap();
        let mut cum = Vec::with_capacity(grid.len());
        cum.push(0.0);
        let mut v1_bulk = 0.0;
        for (i, &a) in p.alpha().iter().enumerate() {
            let (s0, s1) = (grid[i], grid[i + 1]);
            cum.push(cum[i] + a * (m.xi1(s1) - m.xi1(s0)));
            // int s xi'' = [s xi' - xi]
            v1_bulk += a * ((s1 * m.xi1(s1) - m.xi0(s1)) - (s0 * m.xi1(s0) - m.xi0(s0)));
        }
        let tail = m.xi2(1.0) * delta0;
        let ctx = Self {
            mixture: m.clone(),
            sol: sol.clone(),
            delta0,
            v0: cum[cum.len() - 1] + tail,
            v1: v1_bulk + tail,
            b: tail + 1.0 / delta0,
            cum,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(Error::Inconsistent(format!("gap delta0={} is not positive", self.delta0)));
        }
        let d0 = self.d(0.0);
        let grid = self.sol.param.grid();
        for &q in grid.iter().chain(std::iter::once(&1.0)) {
            let d = self.d(q);
            if d < -1e-12 * d0.abs().max(1.0) || d > d0 * (1.0 + 1e-12) {
                return Err(Error::Inconsistent(format!("D({q})={d} outside [0, D(0)={d0}]")));
            }
        }
        if !(d0 < self.b) {
            return Err(Error::Inconsistent(format!("D(0)={d0} is not below B={}", self.b)));
        }
        let rel = self.identity_residual();
        if rel > IDENTITY_TOL {
            return Err(Error::Inconsistent(format!("B - D(0) differs from 1/L0 by {rel:.2e} relative")));
        }
        Ok(())
    }

    pub fn mixture(&self) -> &MixtureSpec {
        &self.mixture
    }

    pub fn solution(&self) -> &ZeroTempSolution {
        &self.sol
    }

    pub fn l0(&self) -> f64 {
        self.sol.param.l()
    }

    pub fn q0(&self) -> f64 {
        self.sol.q0
    }

    pub fn gs(&self) -> f64 {
        self.sol.gs_value
    }

    /// `|B - D(0) - 1/L0| L0`.
    pub fn identity_residual(&self) -> f64 {
        ((self.b - self.d(0.0)) - 1.0 / self.l0()).abs() * self.l0()
    }

    /// `int_0^q xi'' alpha0`.
    pub fn curvature_mass(&self, q: f64) -> f64 {
        let p = &self.sol.param;
        let i = p.cell_of(q);
        self.cum[i] + p.alpha()[i] * (self.mixture.xi1(q) - self.mixture.xi1(p.grid()[i]))
    }

    /// `D(q) = V0 - int_0^q xi'' alpha0` on `[0, 1)`, and `D(1) = 0`.
    pub fn d(&self, q: f64) -> f64 {
        if q >= 1.0 {
            0.0
        } else {
            self.v0 - self.curvature_mass(q)
        }
    }

    /// `D_u(q)` on `[0, |u|]` for the coupling parameter `t`.
    pub fn d_u(&self, t: f64, u: f64, q: f64) -> f64 {
        let k = (1.0 - t) / (1.0 + t);
        let au = u.abs();
        if au >= 1.0 && q >= 1.0 {
            return 0.0;
        }
        let top = self.d(au);
        top + k * (self.d(q) - top)
    }

    /// `int_a^b xi''(q) f(q) dq`, split at the nodes of alpha0.
    pub(crate) fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let grid = self.sol.param.grid();
        let start = grid.partition_point(|&s| s <= a);
        let mut total = 0.0;
        let mut left = a;
        for &s in &grid[start..] {
            if s >= b {
                break;
            }
            total += gl_interval(left, s, |q| self.mixture.xi2(q) * f(q));
            left = s;
        }
        total + gl_interval(left, b, |q| self.mixture.xi2(q) * f(q))
    }

    /// The ground-state energy rebuilt from the chaos quantities,
    /// `1/2 (h^2/(B - D(0)) + int xi''/(B - D) + B - V1)`.
    pub fn gs_from_resolvent(&self) -> f64 {
        let h2 = self.mixture.h() * self.mixture.h();
        let bulk = self.integrate(0.0, 1.0, |q| 1.0 / (self.b - self.d(q)));
        0.5 * (h2 / (self.b - self.d(0.0)) + bulk + self.b - self.v1)
    }
}
