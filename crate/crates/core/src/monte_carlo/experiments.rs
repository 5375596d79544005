use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ascent::{ground_state, AscentOptions, GroundStateResult};
use super::disorder::{overlap, sample_disorder_with, DisorderSample, Purpose, SampleCaps};
use super::stats::{jackknife_se, ks_normal, mean, sample_variance};
use crate::chaos::{chi, ChaosContext};
use crate::error::{precondition, Result};
use crate::mixture::MixtureSpec;
use crate::quad::gauss_legendre;
use crate::zero_temp::{closed_form, minimize_q, DEFAULT_GRID};

/// Gauss–Legendre nodes used for `chi` in [`clt_check`].
pub const CHI_QUAD_POINTS: usize = 64;

/// One optimizer run, as written to the per-run CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub seed: u64,
    /// Coupling of a coupled pair; `None` for a single system.
    pub t: Option<f64>,
    pub energy: f64,
    pub overlap: Option<f64>,
    pub restarts: usize,
    pub converged: bool,
}

impl RunRecord {
    fn single(n: usize, seed: u64, r: &GroundStateResult) -> Self {
        Self { n, seed, t: None, energy: r.energy, overlap: None, restarts: r.restarts, converged: r.converged }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledResult {
    pub t: f64,
    /// `R(sigma_t, tau_t)`, or its absolute value when `h = 0`.
    pub overlap: f64,
    pub l1: f64,
    pub l2: f64,
    pub converged: bool,
}

fn require_even(m: &MixtureSpec) -> Result<()> {
    if m.is_even() {
        Ok(())
    } else {
        precondition("coupled experiments need an even mixture (no odd p)")
    }
}

struct Triple {
    common: DisorderSample,
    x1: DisorderSample,
    x2: DisorderSample,
}

impl Triple {
    fn draw(m: &MixtureSpec, n: usize, seed: u64, caps: &SampleCaps) -> Result<Self> {
        Ok(Self {
            common: sample_disorder_with(m, n, seed, Purpose::Common, caps)?,
            x1: sample_disorder_with(m, n, seed, Purpose::Replica1, caps)?,
            x2: sample_disorder_with(m, n, seed, Purpose::Replica2, caps)?,
        })
    }

    /// Both systems keep the seed of `common`, so they share their restart
    /// starts and coincide exactly at `t = 1`.
    fn coupled(&self, m: &MixtureSpec, t: f64, opts: &AscentOptions) -> Result<CoupledResult> {
        let h1 = self.common.interpolate(&self.x1, t)?;
        let h2 = self.common.interpolate(&self.x2, t)?;
        let (a, b) = rayon::join(|| ground_state(&h1, m, opts), || ground_state(&h2, m, opts));
        let (a, b) = (a?, b?);
        let r = overlap(&a.sigma, &b.sigma);
        Ok(CoupledResult {
            t,
            overlap: if m.h() == 0.0 { r.abs() } else { r },
            l1: a.energy,
            l2: b.energy,
            converged: a.converged && b.converged,
        })
    }
}

/// Ground states of the two coupled Hamiltonians
/// `sqrt(t) X + sqrt(1-t) X^i + h sum sigma` and their overlap.
pub fn coupled_ground_states(
    m: &MixtureSpec,
    n: usize,
    t: f64,
    seed: u64,
    opts: &AscentOptions,
    caps: &SampleCaps,
) -> Result<CoupledResult> {
    require_even(m)?;
    if !(0.0..=1.0).contains(&t) {
        return precondition(format!("coupling t={t} must lie in [0, 1]"));
    }
    Triple::draw(m, n, seed, caps)?.coupled(m, t, opts)
}

/// Many coupled pairs at one `t`, in seed order.
pub fn coupled_overlaps(
    m: &MixtureSpec,
    n: usize,
    t: f64,
    seeds: &[u64],
    opts: &AscentOptions,
    caps: &SampleCaps,
) -> Result<Vec<CoupledResult>> {
    require_even(m)?;
    caps.check(m, n)?;
    seeds.par_iter().map(|&s| coupled_ground_states(m, n, t, s, opts, caps)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceIdentity {
    pub var_direct: f64,
    pub var_via_identity: f64,
    pub se_direct: f64,
    pub se_identity: f64,
    /// Jackknife standard error of the difference over seeds.
    pub se_difference: f64,
    pub z_score: f64,
    pub t_nodes: Vec<f64>,
    /// Mean of `xi(R)` over seeds at each node.
    pub mean_xi: Vec<f64>,
    /// Mean overlap over seeds at each node.
    pub mean_overlap: Vec<f64>,
    pub records: Vec<RunRecord>,
}

/// Compare the sample variance of `L_N` with `N int_0^1 E xi(R_t) dt`, the
/// integral taken by `t_points`-node Gauss–Legendre on [0, 1]. The direct
/// estimate uses the shared tensors `X` of each seed.
pub fn variance_identity_check(
    m: &MixtureSpec,
    n: usize,
    seeds: &[u64],
    t_points: usize,
    opts: &AscentOptions,
    caps: &SampleCaps,
) -> Result<VarianceIdentity> {
    require_even(m)?;
    if seeds.len() < 20 {
        return precondition(format!("variance identity needs at least 20 seeds, got {}", seeds.len()));
    }
    if t_points == 0 {
        return precondition("t quadrature needs at least one node");
    }
    caps.check(m, n)?;
    let (x, w) = gauss_legendre(t_points);
    let nodes: Vec<f64> = x.iter().map(|v| 0.5 * (v + 1.0)).collect();
    let weights: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();

    type PerSeed = (GroundStateResult, Vec<CoupledResult>);
    let per_seed: Vec<PerSeed> = seeds
        .par_iter()
        .map(|&seed| {
            let triple = Triple::draw(m, n, seed, caps)?;
            let direct = ground_state(&triple.common, m, opts)?;
            let pairs = nodes.iter().map(|&t| triple.coupled(m, t, opts)).collect::<Result<Vec<_>>>()?;
            Ok((direct, pairs))
        })
        .collect::<Result<_>>()?;

    let energies: Vec<f64> = per_seed.iter().map(|(d, _)| d.energy).collect();
    let integrals: Vec<f64> = per_seed
        .iter()
        .map(|(_, pairs)| n as f64 * pairs.iter().zip(&weights).map(|(p, w)| w * m.xi0(p.overlap)).sum::<f64>())
        .collect();
    let pick = |v: &[f64], idx: &[usize]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let k = seeds.len();
    let var_direct = sample_variance(&energies);
    let var_via_identity = mean(&integrals);
    let se_direct = jackknife_se(k, |idx| sample_variance(&pick(&energies, idx)));
    let se_identity = jackknife_se(k, |idx| mean(&pick(&integrals, idx)));
    let se_difference =
        jackknife_se(k, |idx| sample_variance(&pick(&energies, idx)) - mean(&pick(&integrals, idx)));
    let mean_xi = (0..nodes.len()).map(|j| mean(&per_seed.iter().map(|(_, p)| m.xi0(p[j].overlap)).collect::<Vec<_>>())).collect();
    let mean_overlap = (0..nodes.len()).map(|j| mean(&per_seed.iter().map(|(_, p)| p[j].overlap).collect::<Vec<_>>())).collect();

    let mut records = Vec::new();
    for (&seed, (direct, pairs)) in seeds.iter().zip(&per_seed) {
        records.push(RunRecord::single(n, seed, direct));
        for p in pairs {
            records.push(RunRecord {
                n,
                seed,
                t: Some(p.t),
                energy: p.l1,
                overlap: Some(p.overlap),
                restarts: opts.restarts,
                converged: p.converged,
            });
        }
    }
    Ok(VarianceIdentity {
        var_direct,
        var_via_identity,
        se_direct,
        se_identity,
        se_difference,
        z_score: (var_direct - var_via_identity).abs() / se_difference,
        t_nodes: nodes,
        mean_xi,
        mean_overlap,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub n: usize,
    pub var_over_n: f64,
    pub stderr: f64,
    pub mean_energy_per_site: f64,
}

/// Ground-state energies of independent samples, in seed order.
pub fn ground_state_energies(
    m: &MixtureSpec,
    n: usize,
    seeds: &[u64],
    opts: &AscentOptions,
    caps: &SampleCaps,
) -> Result<Vec<RunRecord>> {
    caps.check(m, n)?;
    seeds
        .par_iter()
        .map(|&seed| {
            let d = sample_disorder_with(m, n, seed, Purpose::Common, caps)?;
            Ok(RunRecord::single(n, seed, &ground_state(&d, m, opts)?))
        })
        .collect()
}

/// `Var(L_N) / N` with a jackknife standard error, for each `N`.
pub fn superconcentration_trend(
    m: &MixtureSpec,
    n_list: &[usize],
    seeds: &[u64],
    opts: &AscentOptions,
    caps: &SampleCaps,
) -> Result<(Vec<TrendRow>, Vec<RunRecord>)> {
    require_even(m)?;
    if seeds.len() < 2 {
        return precondition("a variance needs at least two seeds");
    }
    for &n in n_list {
        caps.check(m, n)?;
    }
    let mut rows = Vec::with_capacity(n_list.len());
    let mut records = Vec::new();
    for &n in n_list {
        let recs = ground_state_energies(m, n, seeds, opts, caps)?;
        let e: Vec<f64> = recs.iter().map(|r| r.energy).collect();
        let nf = n as f64;
        rows.push(TrendRow {
            n,
            var_over_n: sample_variance(&e) / nf,
            stderr: jackknife_se(e.len(), |idx| sample_variance(&idx.iter().map(|&i| e[i]).collect::<Vec<_>>()) / nf),
            mean_energy_per_site: mean(&e) / nf,
        });
        records.extend(recs);
    }
    Ok((rows, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltResult {
    pub ks_distance: f64,
    pub chi_used: f64,
    /// Sample standard deviation of `L_N / sqrt(chi N)`.
    pub normalized_sd: f64,
    /// KS distance of the raw, unnormalized `L_N` to N(0, 1).
    pub raw_ks_distance: f64,
    pub mean_energy_per_site: f64,
    pub records: Vec<RunRecord>,
}

/// `chi = int_0^1 xi(u_t) dt` from the zero-temperature minimizer of `m`.
pub fn chi_for(m: &MixtureSpec) -> Result<f64> {
    let sol = match closed_form(m, 1e-12) {
        Ok(s) => s,
        Err(_) => minimize_q(m, DEFAULT_GRID, 1e-9)?,
    };
    chi(&ChaosContext::build(m, &sol)?, CHI_QUAD_POINTS)
}

/// KS distance between `W_N = (L_N - mean) / sqrt(chi N)` and N(0, 1).
pub fn clt_check(
    m: &MixtureSpec,
    n: usize,
    seeds: &[u64],
    opts: &AscentOptions,
    caps: &SampleCaps,
) -> Result<CltResult> {
    require_even(m)?;
    if m.h() == 0.0 {
        return precondition("CLT normalization needs h > 0 (chi = 0 when h = 0)");
    }
    if seeds.len() < 100 {
        return precondition(format!("CLT check needs at least 100 samples, got {}", seeds.len()));
    }
    let chi_used = chi_for(m)?;
    let records = ground_state_energies(m, n, seeds, opts, caps)?;
    let e: Vec<f64> = records.iter().map(|r| r.energy).collect();
    let mu = mean(&e);
    let scale = (chi_used * n as f64).sqrt();
    let w: Vec<f64> = e.iter().map(|x| (x - mu) / scale).collect();
    Ok(CltResult {
        ks_distance: ks_normal(&w),
        chi_used,
        normalized_sd: sample_variance(&w).sqrt(),
        raw_ks_distance: ks_normal(&e),
        mean_energy_per_site: mu / n as f64,
        records,
    })
}
