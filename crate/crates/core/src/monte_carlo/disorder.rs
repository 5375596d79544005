use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::mixture::MixtureSpec;

/// Relative tolerance on `|sigma|^2 / N - 1` for configurations passed in.
pub const SPHERE_TOL: f64 = 1e-9;

/// What a random stream is used for. Together with the global seed and a
/// per-purpose index (the degree `p`, or a restart number) this selects one
/// ChaCha keystream; distinct triples never share keystream blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    /// The shared tensors `X`.
    Common = 1,
    /// The private tensors `X^1` of the first coupled system.
    Replica1 = 2,
    /// The private tensors `X^2` of the second coupled system.
    Replica2 = 3,
    /// Random starting points of the ascent.
    Start = 4,
    /// Starting vector of the power iteration.
    Oracle = 5,
}

/// ChaCha8 keyed by `seed`, positioned on stream `(purpose, index)`.
pub fn stream(seed: u64, purpose: Purpose, index: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((purpose as u64) << 32) | u64::from(index));
    rng
}

/// `n` standard normals from `rng`.
pub fn normals(rng: &mut impl RngCore, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Limits on tensor sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCaps {
    /// Upper bound on `sum_p N^p`.
    pub max_entries: usize,
    pub max_degree: u32,
    /// Largest admissible `N` per degree; degrees not listed only obey
    /// `max_entries`.
    pub max_n: BTreeMap<u32, usize>,
}

impl Default for SampleCaps {
    fn default() -> Self {
        Self { max_entries: 20_000_000, max_degree: 4, max_n: BTreeMap::from([(2, 300), (3, 60), (4, 40)]) }
    }
}

impl SampleCaps {
    pub fn check(&self, m: &MixtureSpec, n: usize) -> Result<()> {
        if n < 2 {
            return precondition(format!("N={n} must be at least 2"));
        }
        let mut total: usize = 0;
        for (p, _) in m.coeffs() {
            if p > self.max_degree {
                return Err(Error::Resource(format!("degree p={p} exceeds the cap max_degree={}", self.max_degree)));
            }
            if let Some(&cap) = self.max_n.get(&p) {
                if n > cap {
                    return Err(Error::Resource(format!("N={n} exceeds the cap N<={cap} for degree p={p}")));
                }
            }
            let entries = n.checked_pow(p).unwrap_or(usize::MAX);
            total = total.saturating_add(entries);
            if total > self.max_entries {
                return Err(Error::Resource(format!(
                    "degree p={p} brings the tensor size to {total} scalars, above the cap of {}",
                    self.max_entries
                )));
            }
        }
        Ok(())
    }
}

/// The Gaussian couplings `g_{i_1...i_p}` of one disorder realization,
/// stored raw (not symmetrized) in row-major order, `i_1` slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderSample {
    n: usize,
    seed: u64,
    tensors: Vec<(u32, Vec<f64>)>,
}

impl DisorderSample {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn degrees(&self) -> impl Iterator<Item = u32> + '_ {
        self.tensors.iter().map(|(p, _)| *p)
    }

    pub fn tensor(&self, p: u32) -> Option<&[f64]> {
        self.tensors.iter().find(|(q, _)| *q == p).map(|(_, t)| t.as_slice())
    }

    /// Couplings `sqrt(t) self + sqrt(1 - t) other`, keeping this sample's seed.
    pub fn interpolate(&self, other: &Self, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return precondition(format!("coupling t={t} must lie in [0, 1]"));
        }
        if self.n != other.n || !self.degrees().eq(other.degrees()) {
            return precondition("interpolated samples must share N and degrees");
        }
        let (a, b) = (t.sqrt(), (1.0 - t).sqrt());
        let tensors = self
            .tensors
            .iter()
            .zip(&other.tensors)
            .map(|((p, x), (_, y))| (*p, x.iter().zip(y).map(|(u, v)| a * u + b * v).collect()))
            .collect();
        Ok(Self { n: self.n, seed: self.seed, tensors })
    }

    /// The sample with every coupling negated.
    pub fn negated(&self) -> Self {
        let tensors = self.tensors.iter().map(|(p, t)| (*p, t.iter().map(|v| -v).collect())).collect();
        Self { n: self.n, seed: self.seed, tensors }
    }
}

/// Draw the couplings for `m` at size `n` with the default caps.
pub fn sample_disorder(m: &MixtureSpec, n: usize, seed: u64) -> Result<DisorderSample> {
    sample_disorder_with(m, n, seed, Purpose::Common, &SampleCaps::default())
}

/// Draw the couplings on the given stream purpose. Degree `p` uses stream
/// `(purpose, p)`; entries are filled in row-major order.
pub fn sample_disorder_with(
    m: &MixtureSpec,
    n: usize,
    seed: u64,
    purpose: Purpose,
    caps: &SampleCaps,
) -> Result<DisorderSample> {
    caps.check(m, n)?;
    let tensors = m
        .coeffs()
        .map(|(p, _)| (p, normals(&mut stream(seed, purpose, p), n.pow(p))))
        .collect();
    Ok(DisorderSample { n, seed, tensors })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Contract the fastest index of `t` against `s`.
fn contract_last(t: &[f64], s: &[f64]) -> Vec<f64> {
    t.chunks_exact(s.len()).map(|row| dot(row, s)).collect()
}

/// Contract the slowest index of `t` against `s`.
fn contract_first(t: &[f64], s: &[f64]) -> Vec<f64> {
    let block = t.len() / s.len();
    let mut out = vec![0.0; block];
    for (&si, chunk) in s.iter().zip(t.chunks_exact(block)) {
        for (o, v) in out.iter_mut().zip(chunk) {
            *o += si * v;
        }
    }
    out
}

/// A sample paired with the coefficients `gamma_p N^{-(p-1)/2}` and field.
pub(crate) struct Landscape<'a> {
    n: usize,
    terms: Vec<(u32, f64, &'a [f64])>,
    h: f64,
}

impl<'a> Landscape<'a> {
    pub(crate) fn new(d: &'a DisorderSample, m: &MixtureSpec) -> Result<Self> {
        if !d.degrees().eq(m.coeffs().map(|(p, _)| p)) {
            return precondition("disorder sample was drawn for a different set of degrees");
        }
        let n = d.n as f64;
        let terms = d
            .tensors
            .iter()
            .map(|(p, t)| (*p, m.gamma(*p) * n.powf(-0.5 * (*p as f64 - 1.0)), t.as_slice()))
            .collect();
        Ok(Self { n: d.n, terms, h: m.h() })
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn value(&self, s: &[f64]) -> f64 {
        let mut e = self.h * s.iter().sum::<f64>();
        for &(p, c, t) in &self.terms {
            let mut v = contract_last(t, s);
            for _ in 1..p {
                v = contract_last(&v, s);
            }
            e += c * v[0];
        }
        e
    }

    /// Energy and Euclidean gradient. The chain of trailing contractions is
    /// computed once and shared between the `p` gradient slots.
    pub(crate) fn value_grad(&self, s: &[f64]) -> (f64, Vec<f64>) {
        let mut e = self.h * s.iter().sum::<f64>();
        let mut g = vec![self.h; self.n];
        for &(p, c, t) in &self.terms {
            let p = p as usize;
            // suffix[j] keeps modes 0..=j
            let mut suffix: Vec<Vec<f64>> = Vec::with_capacity(p);
            let mut cur = t.to_vec();
            for _ in 0..p - 1 {
                let next = contract_last(&cur, s);
                suffix.push(cur);
                cur = next;
            }
            suffix.push(cur);
            suffix.reverse();
            e += c * dot(&suffix[0], s);
            for (j, block) in suffix.into_iter().enumerate() {
                let mut v = block;
                for _ in 0..j {
                    v = contract_first(&v, s);
                }
                for (gi, vi) in g.iter_mut().zip(&v) {
                    *gi += c * vi;
                }
            }
        }
        (e, g)
    }
}

pub(crate) fn check_sphere(n: usize, s: &[f64]) -> Result<()> {
    if s.len() != n {
        return precondition(format!("configuration has length {}, expected N={n}", s.len()));
    }
    let r = dot(s, s) / n as f64 - 1.0;
    if !(r.abs() <= SPHERE_TOL) {
        return precondition(format!("configuration is off the sphere: |sigma|^2/N - 1 = {r:.3e}"));
    }
    Ok(())
}

/// `H_N(sigma)`.
pub fn eval_energy(d: &DisorderSample, m: &MixtureSpec, sigma: &[f64]) -> Result<f64> {
    check_sphere(d.n, sigma)?;
    Ok(Landscape::new(d, m)?.value(sigma))
}

/// `H_N(sigma)` with its Euclidean gradient.
pub fn energy_gradient(d: &DisorderSample, m: &MixtureSpec, sigma: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_sphere(d.n, sigma)?;
    Ok(Landscape::new(d, m)?.value_grad(sigma))
}

/// Projection `g - (g.sigma / N) sigma` onto the tangent space at `sigma`.
pub fn tangent(g: &[f64], sigma: &[f64]) -> Vec<f64> {
    let c = dot(g, sigma) / sigma.len() as f64;
    g.iter().zip(sigma).map(|(gi, si)| gi - c * si).collect()
}

/// Rescale onto the sphere of radius `sqrt(N)`.
pub fn retract(v: &mut [f64]) {
    let scale = (v.len() as f64 / dot(v, v)).sqrt();
    v.iter_mut().for_each(|x| *x *= scale);
}

/// `R(sigma, tau) = sigma.tau / N`.
pub fn overlap(sigma: &[f64], tau: &[f64]) -> f64 {
    dot(sigma, tau) / sigma.len() as f64
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub(crate) fn inner(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b)
}
