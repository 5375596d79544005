//! Experiment configuration: TOML parsing and load-time validation.
//!
//! Every validation error carries the file, the line and column of the
//! offending value, and its field path.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use pspin_core::monte_carlo::{AscentOptions, SampleCaps};
use pspin_core::zero_temp::{SolverOptions, DEFAULT_MARGIN};
use pspin_core::MixtureSpec;
use serde::Deserialize;
use toml::{Spanned, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: PathBuf,
    /// 1-based line and column, when the error points at a value.
    pub position: Option<(usize, usize)>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file.display())?;
        if let Some((line, col)) = self.position {
            write!(f, ":{line}:{col}")?;
        }
        if self.field.is_empty() {
            write!(f, ": {}", self.message)
        } else {
            write!(f, ": {}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mixture: Spanned<Vec<Spanned<Value>>>,
    h: Option<Spanned<f64>>,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    chaos: RawChaos,
    finite_temp: Option<RawFiniteTemp>,
    mc: Option<RawMc>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    grid_size: Option<Spanned<i64>>,
    tol: Option<Spanned<f64>>,
    max_iters: Option<Spanned<i64>>,
    margin: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChaos {
    t_grid: Option<Spanned<Value>>,
    quad_points: Option<Spanned<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFiniteTemp {
    betas: Spanned<Vec<f64>>,
    k: Option<Spanned<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    experiment: Spanned<String>,
    #[serde(rename = "N_list", alias = "n_list")]
    n_list: Spanned<Vec<i64>>,
    seeds: Spanned<Value>,
    restarts: Option<Spanned<i64>>,
    max_iters: Option<Spanned<i64>>,
    grad_tol: Option<Spanned<f64>>,
    t_grid: Option<Spanned<Value>>,
    t_points: Option<Spanned<i64>>,
    caps: Option<Spanned<Value>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    csv_path: Option<String>,
    json_path: Option<String>,
}

/// The Monte Carlo experiment a `simulate` run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    GroundState,
    Coupled,
    VarianceIdentity,
    Superconcentration,
    Clt,
}

impl Experiment {
    pub const NAMES: [&'static str; 5] = ["ground_state", "coupled", "variance_identity", "superconcentration", "clt"];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::GroundState => "ground_state",
            Experiment::Coupled => "coupled",
            Experiment::VarianceIdentity => "variance_identity",
            Experiment::Superconcentration => "superconcentration",
            Experiment::Clt => "clt",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ground_state" => Experiment::GroundState,
            "coupled" => Experiment::Coupled,
            "variance_identity" => Experiment::VarianceIdentity,
            "superconcentration" => Experiment::Superconcentration,
            "clt" => Experiment::Clt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSettings {
    pub experiment: Experiment,
    pub n_list: Vec<usize>,
    pub seed_start: u64,
    pub seed_count: u64,
    pub ascent: AscentOptions,
    pub t_grid: Vec<f64>,
    pub t_points: usize,
    pub caps: SampleCaps,
}

impl McSettings {
    pub fn seeds(&self) -> Vec<u64> {
        (self.seed_start..self.seed_start + self.seed_count).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteTempSettings {
    pub betas: Vec<f64>,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub file: PathBuf,
    source: String,
    pub mixture: MixtureSpec,
    /// Raw `(p, gamma_p)` pairs as given.
    pub coefficients: Vec<(u32, f64)>,
    /// Solver knobs as written; see [`Config::solver_options`].
    pub solver: SolverOptions,
    solver_spans: BTreeMap<&'static str, Range<usize>>,
    pub t_grid: Vec<f64>,
    pub quad_points: usize,
    pub finite_temp: Option<FiniteTempSettings>,
    pub mc: Option<McSettings>,
    pub csv_path: Option<String>,
    pub json_path: Option<String>,
}

struct Ctx<'a> {
    file: &'a Path,
    source: &'a str,
}

impl Ctx<'_> {
    fn position(&self, offset: usize) -> (usize, usize) {
        let before = &self.source[..offset.min(self.source.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        (line, col)
    }

    fn err(&self, span: Option<&Range<usize>>, field: impl Into<String>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            file: self.file.to_path_buf(),
            position: span.map(|s| self.position(s.start)),
            field: field.into(),
            message: message.into(),
        }
    }

    fn positive(&self, v: &Option<Spanned<i64>>, field: &str, default: usize) -> Result<usize, ConfigError> {
        match v {
            None => Ok(default),
            Some(s) if *s.get_ref() >= 1 => Ok(*s.get_ref() as usize),
            Some(s) => Err(self.err(Some(&s.span()), field, format!("must be a positive integer, got {}", s.get_ref()))),
        }
    }

    fn positive_real(&self, v: &Option<Spanned<f64>>, field: &str, default: f64) -> Result<f64, ConfigError> {
        match v {
            None => Ok(default),
            Some(s) if s.get_ref().is_finite() && *s.get_ref() > 0.0 => Ok(*s.get_ref()),
            Some(s) => Err(self.err(Some(&s.span()), field, format!("must be a positive number, got {}", s.get_ref()))),
        }
    }
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn parse_mixture_entry(cx: &Ctx, i: usize, entry: &Spanned<Value>) -> Result<(u32, f64), ConfigError> {
    let span = entry.span();
    let field = format!("mixture[{i}]");
    let bad = |msg: &str| cx.err(Some(&span), field.clone(), msg.to_string());
    let (p, gamma) = match entry.get_ref() {
        Value::Array(a) if a.len() == 2 => (a[0].as_integer(), number(&a[1])),
        Value::Table(t) => {
            if let Some(k) = t.keys().find(|k| !["p", "gamma", "gamma_sq"].contains(&k.as_str())) {
                return Err(bad(&format!("unknown key `{k}` (expected p and gamma or gamma_sq)")));
            }
            let gamma = match (t.get("gamma"), t.get("gamma_sq")) {
                (Some(g), None) => number(g),
                (None, Some(g2)) => number(g2).map(|x| if x >= 0.0 { x.sqrt() } else { -1.0 }),
                _ => return Err(bad("give exactly one of gamma or gamma_sq")),
            };
            (t.get("p").and_then(Value::as_integer), gamma)
        }
        _ => return Err(bad("expected [p, gamma_p] or { p = .., gamma = .. }")),
    };
    let p = p.ok_or_else(|| bad("degree p must be an integer"))?;
    let gamma = gamma.ok_or_else(|| bad("gamma_p must be a number"))?;
    if p < 2 {
        return Err(cx.err(Some(&span), format!("{field}.p"), format!("degree p={p} must be >= 2")));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(cx.err(Some(&span), format!("{field}.gamma"), format!("gamma_{p}={gamma} must be finite and >= 0")));
    }
    Ok((p as u32, gamma))
}

/// A grid of `t` values: an explicit list, or `{ start, stop, step }`.
fn parse_t_grid(cx: &Ctx, v: &Spanned<Value>, field: &str, open: bool) -> Result<Vec<f64>, ConfigError> {
    let span = v.span();
    let bad = |msg: String| cx.err(Some(&span), field, msg);
    let grid: Vec<f64> = match v.get_ref() {
        Value::Array(a) => a.iter().map(number).collect::<Option<_>>().ok_or_else(|| bad("entries must be numbers".into()))?,
        Value::Table(t) => {
            let get = |k: &str| t.get(k).and_then(number).ok_or_else(|| bad(format!("missing numeric `{k}`")));
            let (start, stop, step) = (get("start")?, get("stop")?, get("step")?);
            if !(step > 0.0 && stop >= start) {
                return Err(bad("need step > 0 and stop >= start".into()));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|k| start + k as f64 * step).collect()
        }
        _ => return Err(bad("expected a list of numbers or { start, stop, step }".into())),
    };
    if grid.is_empty() {
        return Err(bad("grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(bad("grid must be strictly increasing".into()));
    }
    let ok = |t: f64| if open { t > 0.0 && t < 1.0 } else { (0.0..=1.0).contains(&t) };
    if let Some(t) = grid.iter().find(|&&t| !ok(t)) {
        let range = if open { "(0, 1)" } else { "[0, 1]" };
        return Err(bad(format!("t={t} outside {range}")));
    }
    Ok(grid)
}

fn parse_seeds(cx: &Ctx, v: &Spanned<Value>) -> Result<(u64, u64), ConfigError> {
    let span = v.span();
    let bad = |msg: &str| cx.err(Some(&span), "mc.seeds", msg.to_string());
    let (start, count) = match v.get_ref() {
        Value::Integer(c) => (0, *c),
        Value::Table(t) => {
            if let Some(k) = t.keys().find(|k| !["start", "count"].contains(&k.as_str())) {
                return Err(bad(&format!("unknown key `{k}` (expected start and count)")));
            }
            let start = t.get("start").map_or(Some(0), Value::as_integer).ok_or_else(|| bad("start must be an integer"))?;
            let count = t.get("count").and_then(Value::as_integer).ok_or_else(|| bad("count must be an integer"))?;
            (start, count)
        }
        _ => return Err(bad("expected a seed count or { start, count }")),
    };
    if start < 0 || count < 1 {
        return Err(bad("need start >= 0 and count >= 1"));
    }
    Ok((start as u64, count as u64))
}

fn parse_caps(cx: &Ctx, v: &Spanned<Value>) -> Result<SampleCaps, ConfigError> {
    let span = v.span();
    let bad = |field: &str, msg: String| cx.err(Some(&span), format!("mc.caps{field}"), msg);
    let Value::Table(t) = v.get_ref() else {
        return Err(bad("", "expected a table".into()));
    };
    let mut caps = SampleCaps::default();
    for (k, val) in t {
        let as_count = |val: &Value, field: &str| match val.as_integer() {
            Some(i) if i >= 1 => Ok(i as usize),
            _ => Err(bad(field, "must be a positive integer".into())),
        };
        match k.as_str() {
            "max_entries" => caps.max_entries = as_count(val, ".max_entries")?,
            "max_degree" => caps.max_degree = as_count(val, ".max_degree")? as u32,
            "max_n" => {
                let Value::Table(per) = val else {
                    return Err(bad(".max_n", "expected a table of degree = N".into()));
                };
                for (p, n) in per {
                    let field = format!(".max_n.{p}");
                    let p: u32 = p.parse().map_err(|_| bad(&field, "key must be a degree".into()))?;
                    caps.max_n.insert(p, as_count(n, &field)?);
                }
            }
            other => return Err(bad("", format!("unknown key `{other}`"))),
        }
    }
    Ok(caps)
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: path.to_path_buf(),
            position: None,
            field: String::new(),
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(path, &source)
    }

    pub fn parse(path: &Path, source: &str) -> Result<Self, ConfigError> {
        let cx = Ctx { file: path, source };
        let raw: RawConfig = toml::from_str(source).map_err(|e| {
            let position = e.span().map(|s| cx.position(s.start));
            ConfigError { file: path.to_path_buf(), position, field: String::new(), message: e.message().to_string() }
        })?;

        if raw.mixture.get_ref().is_empty() {
            return Err(cx.err(Some(&raw.mixture.span()), "mixture", "needs at least one (p, gamma_p) entry"));
        }
        let coefficients = raw
            .mixture
            .get_ref()
            .iter()
            .enumerate()
            .map(|(i, e)| parse_mixture_entry(&cx, i, e))
            .collect::<Result<Vec<_>, _>>()?;
        let h = raw.h.as_ref().map_or(0.0, |s| *s.get_ref());
        let mixture = MixtureSpec::new(coefficients.iter().copied(), h).map_err(|e| {
            let span = if h.is_finite() && h >= 0.0 { raw.mixture.span() } else { raw.h.as_ref().unwrap().span() };
            let field = if h.is_finite() && h >= 0.0 { "mixture" } else { "h" };
            cx.err(Some(&span), field, e.to_string())
        })?;

        let mut solver_spans = BTreeMap::new();
        let defaults = SolverOptions::default();
        let s = &raw.solver;
        let int_or = |v: &Option<Spanned<i64>>, d: usize| v.as_ref().map_or(d as i64, |x| *x.get_ref());
        let solver = SolverOptions {
            grid_size: int_or(&s.grid_size, defaults.grid_size).max(0) as usize,
            tol: s.tol.as_ref().map_or(defaults.tol, |x| *x.get_ref()),
            max_iters: int_or(&s.max_iters, defaults.max_iters).max(0) as usize,
            margin: s.margin.as_ref().map_or(DEFAULT_MARGIN, |x| *x.get_ref()),
        };
        for (name, span) in [
            ("grid_size", s.grid_size.as_ref().map(|x| x.span())),
            ("tol", s.tol.as_ref().map(|x| x.span())),
            ("max_iters", s.max_iters.as_ref().map(|x| x.span())),
            ("margin", s.margin.as_ref().map(|x| x.span())),
        ] {
            if let Some(span) = span {
                solver_spans.insert(name, span);
            }
        }

        let t_grid = match &raw.chaos.t_grid {
            Some(v) => parse_t_grid(&cx, v, "chaos.t_grid", true)?,
            None => (1..20).map(|k| k as f64 * 0.05).collect(),
        };
        let quad_points = cx.positive(&raw.chaos.quad_points, "chaos.quad_points", 64)?;

        let finite_temp = match &raw.finite_temp {
            None => None,
            Some(ft) => {
                let betas = ft.betas.get_ref().clone();
                let span = ft.betas.span();
                if betas.is_empty() || betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
                    return Err(cx.err(Some(&span), "finite_temp.betas", "needs positive inverse temperatures"));
                }
                if betas.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(cx.err(Some(&span), "finite_temp.betas", "must be strictly increasing"));
                }
                Some(FiniteTempSettings { betas, k: cx.positive(&ft.k, "finite_temp.k", 2)? })
            }
        };

        let mc = match &raw.mc {
            None => None,
            Some(mc) => Some(Self::parse_mc(&cx, mc, &mixture)?),
        };

        Ok(Self {
            file: path.to_path_buf(),
            source: source.to_string(),
            mixture,
            coefficients,
            solver,
            solver_spans,
            t_grid,
            quad_points,
            finite_temp,
            mc,
            csv_path: raw.output.csv_path,
            json_path: raw.output.json_path,
        })
    }

    fn parse_mc(cx: &Ctx, mc: &RawMc, mixture: &MixtureSpec) -> Result<McSettings, ConfigError> {
        let experiment = Experiment::parse(mc.experiment.get_ref()).ok_or_else(|| {
            cx.err(
                Some(&mc.experiment.span()),
                "mc.experiment",
                format!("unknown experiment `{}` (one of {})", mc.experiment.get_ref(), Experiment::NAMES.join(", ")),
            )
        })?;
        let n_span = mc.n_list.span();
        if mc.n_list.get_ref().is_empty() || mc.n_list.get_ref().iter().any(|&n| n < 2) {
            return Err(cx.err(Some(&n_span), "mc.N_list", "needs one or more sizes N >= 2"));
        }
        let n_list: Vec<usize> = mc.n_list.get_ref().iter().map(|&n| n as usize).collect();
        let (seed_start, seed_count) = parse_seeds(cx, &mc.seeds)?;
        let ascent = AscentOptions {
            restarts: cx.positive(&mc.restarts, "mc.restarts", 2)?,
            max_iters: cx.positive(&mc.max_iters, "mc.max_iters", 20_000)?,
            grad_tol: cx.positive_real(&mc.grad_tol, "mc.grad_tol", 1e-9)?,
        };
        let t_grid = match &mc.t_grid {
            Some(v) => parse_t_grid(cx, v, "mc.t_grid", false)?,
            None => vec![0.5],
        };
        let t_points = cx.positive(&mc.t_points, "mc.t_points", 8)?;
        let caps = match &mc.caps {
            Some(v) => parse_caps(cx, v)?,
            None => SampleCaps::default(),
        };
        let even_needed = !matches!(experiment, Experiment::GroundState);
        if even_needed && !mixture.is_even() {
            return Err(cx.err(Some(&mc.experiment.span()), "mc.experiment", format!("`{}` needs an even mixture", experiment.name())));
        }
        let min_seeds = match experiment {
            Experiment::VarianceIdentity => 20,
            Experiment::Clt => 100,
            Experiment::Superconcentration => 2,
            _ => 1,
        };
        if seed_count < min_seeds {
            return Err(cx.err(
                Some(&mc.seeds.span()),
                "mc.seeds",
                format!("`{}` needs at least {min_seeds} seeds, got {seed_count}", experiment.name()),
            ));
        }
        if experiment == Experiment::Clt && mixture.h() == 0.0 {
            return Err(cx.err(Some(&mc.experiment.span()), "mc.experiment", "`clt` needs h > 0 (chi = 0 when h = 0)"));
        }
        for &n in &n_list {
            caps.check(mixture, n).map_err(|e| cx.err(Some(&n_span), "mc.N_list", e.to_string()))?;
        }
        Ok(McSettings { experiment, n_list, seed_start, seed_count, ascent, t_grid, t_points, caps })
    }

    /// Solver options after validation; errors point at the offending field.
    pub fn solver_options(&self) -> Result<SolverOptions, ConfigError> {
        let cx = Ctx { file: &self.file, source: &self.source };
        let s = &self.solver;
        let checks: [(&'static str, bool, String); 4] = [
            ("grid_size", s.grid_size >= 50, format!("must be >= 50, got {}", s.grid_size)),
            ("tol", s.tol.is_finite() && s.tol > 0.0, format!("must be > 0, got {}", s.tol)),
            ("max_iters", s.max_iters >= 1, format!("must be >= 1, got {}", s.max_iters)),
            ("margin", s.margin.is_finite() && s.margin > 0.0, format!("must be > 0, got {}", s.margin)),
        ];
        for (name, ok, msg) in checks {
            if !ok {
                return Err(cx.err(self.solver_spans.get(name), format!("solver.{name}"), msg));
            }
        }
        Ok(*s)
    }
}
