use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};

/// Default lower bound on the gap `L - int_0^1 alpha`.
pub const DEFAULT_MARGIN: f64 = 1e-6;

/// Discretized zero-temperature order parameter `(L, alpha)`.
///
/// `alpha` is a right-continuous step function, equal to `alpha[i]` on
/// `[grid[i], grid[i+1])`. Its running integral is therefore piecewise linear
/// and is stored exactly at the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderParamZeroT {
    grid: Vec<f64>,
    alpha: Vec<f64>,
    l: f64,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

pub fn uniform_grid(cells: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
    g[cells] = 1.0;
    g
}

fn cumulative(grid: &[f64], alpha: &[f64]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(grid.len());
    acc.push(0.0);
    let mut s = 0.0;
    for (i, a) in alpha.iter().enumerate() {
        s += a * (grid[i + 1] - grid[i]);
        acc.push(s);
    }
    acc
}

impl OrderParamZeroT {
    pub fn new(grid: Vec<f64>, alpha: Vec<f64>, l: f64, margin: f64) -> Result<Self> {
        if grid.len() < 2 || alpha.len() + 1 != grid.len() {
            return precondition(format!(
                "grid has {} nodes but alpha has {} values",
                grid.len(),
                alpha.len()
            ));
        }
        if grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 {
            return precondition("grid must start at 0 and end at 1");
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return precondition("grid must be strictly increasing");
        }
        if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return precondition("alpha values must be finite and nonnegative");
        }
        if alpha.windows(2).any(|w| w[1] < w[0]) {
            return precondition("alpha values must be nondecreasing");
        }
        let p = Self::from_parts_unchecked(grid, alpha, l);
        p.check_margin(margin)?;
        Ok(p)
    }

    pub(crate) fn from_parts_unchecked(grid: Vec<f64>, alpha: Vec<f64>, l: f64) -> Self {
        let cumulative = cumulative(&grid, &alpha);
        Self { grid, alpha, l, cumulative }
    }

    /// Restores the derived cumulative array after deserialization.
    pub fn rebuild(self) -> Self {
        Self::from_parts_unchecked(self.grid, self.alpha, self.l)
    }

    pub fn check_margin(&self, margin: f64) -> Result<()> {
        let gap = self.gap();
        if !(gap >= margin) || !(self.l > 0.0) {
            return Err(Error::Domain(format!(
                "feasibility margin violated: L - int alpha = {gap:.3e} < {margin:.3e}"
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn cells(&self) -> usize {
        self.alpha.len()
    }
    pub fn width(&self, i: usize) -> f64 {
        self.grid[i + 1] - self.grid[i]
    }
    /// `int_0^{grid[j]} alpha` at every node.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }
    pub fn total_mass(&self) -> f64 {
        self.cumulative[self.cells()]
    }
    /// The gap `L - int_0^1 alpha`.
    pub fn gap(&self) -> f64 {
        self.l - self.total_mass()
    }

    /// Index of the cell containing `s` (the last cell for `s >= 1`).
    pub fn cell_of(&self, s: f64) -> usize {
        let k = self.grid.partition_point(|&x| x <= s);
        k.saturating_sub(1).min(self.cells() - 1)
    }

    pub fn alpha_at(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return *self.alpha.last().unwrap();
        }
        self.alpha[self.cell_of(s)]
    }

    pub fn cumulative_at(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let i = self.cell_of(q);
        self.cumulative[i] + self.alpha[i] * (q - self.grid[i])
    }

    /// Jumps of `alpha`: the atoms of the induced measure, located at `grid[j]`.
    pub fn atoms(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.alpha
            .iter()
            .map(|&a| {
                let d = a - prev;
                prev = a;
                d
            })
            .collect()
    }

    /// Inverse of [`atoms`](Self::atoms).
    pub(crate) fn from_atoms(grid: Vec<f64>, atoms: &[f64], l: f64) -> Self {
        let mut acc = 0.0;
        let alpha = atoms
            .iter()
            .map(|d| {
                acc += d;
                acc
            })
            .collect();
        Self::from_parts_unchecked(grid, alpha, l)
    }

    pub fn with_l(&self, l: f64) -> Self {
        Self::from_parts_unchecked(self.grid.clone(), self.alpha.clone(), l)
    }

    pub fn with_alpha(&self, alpha: Vec<f64>) -> Self {
        Self::from_parts_unchecked(self.grid.clone(), alpha, self.l)
    }

    /// First node where `alpha` exceeds the support floor, or 1 if none.
    pub fn support_start(&self) -> f64 {
        let max = self.alpha.iter().cloned().fold(0.0, f64::max);
        let floor = (1e-6 * max).max(1e-9);
        self.alpha
            .iter()
            .position(|&a| a > floor)
            .map(|i| self.grid[i])
            .unwrap_or(1.0)
    }
}

/// Weighted pool-adjacent-violators: Euclidean projection of `y` (with
/// weights `w`) onto the nondecreasing cone.
pub fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len());
    // (mean, weight, count) blocks
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((yi, wi, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            if blocks[n - 2].0 <= blocks[n - 1].0 {
                break;
            }
            let (m2, w2, c2) = blocks.pop().unwrap();
            let (m1, w1, c1) = blocks.pop().unwrap();
            let wt = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / wt, wt, c1 + c2));
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (m, _, c) in blocks {
        out.extend(std::iter::repeat_n(m, c));
    }
    out
}
