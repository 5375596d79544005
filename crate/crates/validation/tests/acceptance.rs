//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Monte Carlo criteria use seeds `0..n`.

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pspin_core::chaos::{eval_e, eval_error_term, f_t, solve_u_t, ChaosContext};
use pspin_core::finite_temp::beta_sweep;
use pspin_core::monte_carlo::stats::mean;
use pspin_core::monte_carlo::{
    clt_check, coupled_overlaps, ground_state, sample_disorder, sk_eigen_oracle, superconcentration_trend,
    variance_identity_check, AscentOptions, SampleCaps,
};
use pspin_core::zero_temp::{
    closed_form_frsb, eval_q, gs_partials, grad_q, minimize_q, one_rsb_z, OrderParamZeroT, ZeroTempSolution,
    DEFAULT_MARGIN,
};
use pspin_cli::{run_checks, Config, Status};
use pspin_core::MixtureSpec;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sk(h: f64) -> MixtureSpec {
    MixtureSpec::from_squared([(2, 0.5)], h).unwrap()
}

fn frsb_model(h: f64) -> MixtureSpec {
    MixtureSpec::from_squared([(2, 0.5), (4, 1.0 / 24.0)], h).unwrap()
}

fn seeds(n: u64) -> Vec<u64> {
    (0..n).collect()
}

fn simpson(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let dx = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * dx) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    dx / 3.0 * (f(a) + f(b) + inner)
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `B - D(0) - 1/L0`, relative to `1/L0`, from the step function alone.
fn identity_residual(m: &MixtureSpec, sol: &ZeroTempSolution) -> f64 {
    let p = &sol.param;
    let g = p.grid();
    let int_xi2_alpha: f64 = p.alpha().iter().enumerate().map(|(i, a)| a * (m.xi1(g[i + 1]) - m.xi1(g[i]))).sum();
    ((1.0 / p.gap() - int_xi2_alpha) - 1.0 / p.l()).abs() * p.l()
}

fn context(m: &MixtureSpec) -> ChaosContext {
    ChaosContext::build(m, &minimize_q(m, 1000, 1e-8).unwrap()).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let sol = minimize_q(&sk(1.0), 1000, 1e-9).unwrap();
    let elapsed = start.elapsed();
    let err = (sol.gs_value - 2f64.sqrt()).abs();
    let c = &sol.certificate;
    let pass = err <= 1e-4 && c.relative_residual() <= 1e-5 && c.min_g >= -1e-6 && elapsed <= Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "|GS - sqrt2| = {err:.2e} (<= 1e-4), eq residual {:.2e} (<= 1e-5), min g {:.2e} (>= -1e-6), {:.2?} (<= 10 s)",
            c.relative_residual(),
            c.min_g,
            elapsed
        ),
    )
}

fn criterion_2() -> Outcome {
    let m = frsb_model(0.0);
    let cf = closed_form_frsb(&m, 1e-12).unwrap();
    let oracle = simpson(200_000, 0.0, 1.0, |q| (1.0 + q * q / 2.0).sqrt());
    let num = minimize_q(&m, 1000, 1e-8).unwrap();
    let (e_cf, e_num) = ((cf.gs_value - oracle).abs(), (num.gs_value - cf.gs_value).abs());
    let pass = cf.q0.abs() <= 1e-8 && e_cf <= 1e-8 && e_num <= 1e-3;
    outcome(
        pass,
        format!("|q0| = {:.1e} (<= 1e-8), |GS_cf - quadrature| = {e_cf:.1e}, |GS_num - GS_cf| = {e_num:.1e} (<= 1e-3)", cf.q0),
    )
}

fn criterion_3() -> Outcome {
    let p = 3.0;
    let rhs = |z: f64| (1.0 + z) / (z * z) * z.ln_1p() - 1.0 / z;
    let z = one_rsb_z(3).unwrap();
    let residual = (rhs(z) - 1.0 / p).abs();
    let z_oracle = bisect(1e-3, 1e3, |z| rhs(z) - 1.0 / p);
    let gs_oracle = (1.0 + z_oracle / p) / (z_oracle + 1.0).sqrt();
    let num = minimize_q(&MixtureSpec::pure(3, 0.0).unwrap(), 1000, 1e-8).unwrap();
    let a = num.param.alpha();
    let spread = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - a.iter().cloned().fold(f64::INFINITY, f64::min);
    let err = (num.gs_value - gs_oracle).abs();
    outcome(
        residual <= 1e-12 && err <= 1e-3 && spread <= 1e-3,
        format!("z residual {residual:.1e} (<= 1e-12), |GS_num - GS(z)| = {err:.1e} (<= 1e-3), alpha spread {spread:.1e} (<= 1e-3)"),
    )
}

fn criterion_4() -> Outcome {
    let models = [
        sk(1.0),
        sk(0.3),
        frsb_model(0.0),
        frsb_model(0.1),
        MixtureSpec::pure(3, 0.0).unwrap(),
        MixtureSpec::pure(4, 0.0).unwrap(),
        MixtureSpec::from_squared([(2, 0.3), (3, 0.3)], 0.2).unwrap(),
        MixtureSpec::from_squared([(2, 0.5), (4, 0.3)], 0.3).unwrap(),
        MixtureSpec::from_squared([(2, 0.2), (4, 0.5)], 0.3).unwrap(),
    ];
    let (mut worst_id, mut worst_lemma, mut certified) = (0.0f64, 0.0f64, 0);
    for m in &models {
        let sol = minimize_q(m, 1000, 1e-8).unwrap();
        if !sol.certificate.passes(1e-8) {
            continue;
        }
        certified += 1;
        worst_id = worst_id.max(identity_residual(m, &sol));
        worst_lemma = worst_lemma.max((sol.l0().powi(2) * (m.xi1(sol.q0) + m.h().powi(2)) - sol.q0).abs());
    }
    outcome(
        certified == models.len() && worst_id <= 1e-6 && worst_lemma <= 1e-4,
        format!(
            "{certified}/{} certified; max |B - D(0) - 1/L0| L0 = {worst_id:.1e} (<= 1e-6), max support-start residual {worst_lemma:.1e} (<= 1e-4)",
            models.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut on_support = 0.0f64;
    for m in [frsb_model(0.0), frsb_model(0.1)] {
        let ctx = context(&m);
        let q0 = ctx.q0();
        for t in [0.2, 0.5, 0.9] {
            for u in [0.0, q0 / 2.0, q0] {
                on_support = on_support.max((eval_e(&ctx, t, u, 0.0).unwrap() - 2.0 * ctx.gs()).abs());
            }
        }
    }
    let ctx = context(&frsb_model(0.1));
    let mut state = 2024u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64)
    };
    let mut gap = 0.0f64;
    for _ in 0..20 {
        let (t, u) = (next(), 2.0 * next() - 1.0);
        let e = eval_e(&ctx, t, u, 0.0).unwrap();
        gap = gap.max((e - (2.0 * ctx.gs() - eval_error_term(&ctx, t, u).unwrap())).abs());
    }
    let frsb = context(&frsb_model(0.0));
    let u = (frsb.q0() + 1.0) / 2.0;
    let eps = eval_error_term(&frsb, 0.5, u).unwrap().min(eval_error_term(&frsb, 0.5, -u).unwrap());
    outcome(
        on_support <= 1e-6 && gap <= 1e-8 && eps >= 1e-6,
        format!("max |E - 2GS| on support {on_support:.1e} (<= 1e-6), max |E - (2GS - eps)| {gap:.1e} (<= 1e-8), eps at |u| = (q0+1)/2 {eps:.3e} (>= 1e-6)"),
    )
}

fn criterion_6() -> Outcome {
    let ctx = context(&frsb_model(0.1));
    let q0 = ctx.q0();
    let step = 1e-5;
    let mut d_lambda = 0.0f64;
    for t in [0.3, 0.7] {
        for u in [0.0, 0.3 * q0, q0, -0.5 * q0, -q0] {
            let fd = (eval_e(&ctx, t, u, step).unwrap() - eval_e(&ctx, t, u, -step).unwrap()) / (2.0 * step);
            d_lambda = d_lambda.max((fd - f_t(&ctx, t, u)).abs());
        }
    }

    let mut grad = 0.0f64;
    for (m, scale) in [(sk(0.7), 0.0), (frsb_model(0.1), 0.05), (MixtureSpec::from_squared([(2, 0.3), (3, 0.4)], 0.2).unwrap(), 0.1)] {
        let cells = 80;
        let grid: Vec<f64> = (0..=cells).map(|i| (i as f64 / cells as f64).powf(1.3)).collect();
        let alpha: Vec<f64> = (0..cells).map(|i| scale * i as f64 + 0.01 * (i as f64).sqrt()).collect();
        let mass: f64 = alpha.iter().enumerate().map(|(i, a)| a * (grid[i + 1] - grid[i])).sum();
        let p = OrderParamZeroT::new(grid, alpha, mass + 0.9, DEFAULT_MARGIN).unwrap();
        let g = grad_q(&m, &p).unwrap();
        let norm = g.d_alpha.iter().fold(g.d_l.abs(), |acc, d| acc.max(d.abs()));
        let h = 1e-6;
        let fd_l = (eval_q(&m, &p.with_l(p.l() + h)).unwrap() - eval_q(&m, &p.with_l(p.l() - h)).unwrap()) / (2.0 * h);
        grad = grad.max((fd_l - g.d_l).abs() / norm);
        for i in (0..cells).step_by(9) {
            let bump = |d: f64| {
                let mut a = p.alpha().to_vec();
                a[i] += d;
                eval_q(&m, &p.with_alpha(a)).unwrap()
            };
            grad = grad.max(((bump(h) - bump(-h)) / (2.0 * h) - g.d_alpha[i]).abs() / norm);
        }
    }

    let mut d_h = 0.0f64;
    for (model, h) in [(sk as fn(f64) -> MixtureSpec, 1.0), (frsb_model, 0.1)] {
        let sol = minimize_q(&model(h), 1000, 1e-8).unwrap();
        let exact = gs_partials(&model(h), &sol).d_h;
        let gs = |h: f64| minimize_q(&model(h), 1000, 1e-8).unwrap().gs_value;
        let fd = (gs(h + 1e-3) - gs(h - 1e-3)) / 2e-3;
        d_h = d_h.max((fd - exact).abs() / exact.abs());
        d_h = d_h.max((exact - h * sol.l0()).abs() / exact.abs());
    }
    outcome(
        d_lambda <= 1e-4 && grad <= 1e-6 && d_h <= 1e-3,
        format!("|dE/dlambda - f_t| {d_lambda:.1e} (<= 1e-4), grad_Q vs FD {grad:.1e} (<= 1e-6), dGS/dh vs h L0 {d_h:.1e} rel (<= 1e-3)"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let m = sk(0.0);
    let opts = AscentOptions::default();
    let mut worst = 0.0f64;
    let mut per_site = Vec::new();
    for seed in seeds(20) {
        let d = sample_disorder(&m, 200, seed).unwrap();
        let gs = ground_state(&d, &m, &opts).unwrap();
        let oracle = sk_eigen_oracle(&d, &m).unwrap();
        worst = worst.max((gs.energy - oracle).abs());
        per_site.push(gs.energy / 200.0);
    }
    let elapsed = start.elapsed();
    let mean = mean(&per_site);
    outcome(
        worst <= 1e-8 && (0.90..=1.00).contains(&mean) && elapsed <= Duration::from_secs(120),
        format!("max |L_N - oracle| = {worst:.1e} (<= 1e-8), mean L_N/N = {mean:.4} (in [0.90, 1.00]), {elapsed:.2?} (<= 2 min)"),
    )
}

fn criterion_8() -> Outcome {
    let opts = AscentOptions::default();
    let caps = SampleCaps::default();
    let s = seeds(50);
    let r0: Vec<f64> = coupled_overlaps(&sk(0.0), 150, 0.5, &s, &opts, &caps).unwrap().iter().map(|p| p.overlap).collect();
    let u_t = solve_u_t(&context(&sk(1.0)), 0.5, 0.0).unwrap();
    let r1: Vec<f64> = coupled_overlaps(&sk(1.0), 150, 0.5, &s, &opts, &caps).unwrap().iter().map(|p| p.overlap).collect();
    let (m0, m1) = (mean(&r0), mean(&r1));
    outcome(
        m0 <= 0.2 && (m1 - u_t).abs() <= 0.1,
        format!("h=0 mean |R| = {m0:.4} (<= 0.2); h=1 mean R = {m1:.4} vs u_t = {u_t:.4} (within 0.1)"),
    )
}

fn criterion_9() -> Outcome {
    let v = variance_identity_check(&sk(0.0), 100, &seeds(40), 8, &AscentOptions::default(), &SampleCaps::default()).unwrap();
    let diff = (v.var_direct - v.var_via_identity).abs();
    outcome(
        diff <= 3.0 * v.se_difference,
        format!(
            "Var(L_N) = {:.4}, identity = {:.4}, |diff| = {diff:.4} vs 3 SE = {:.4}",
            v.var_direct,
            v.var_via_identity,
            3.0 * v.se_difference
        ),
    )
}

fn criterion_10() -> Outcome {
    let (rows, _) =
        superconcentration_trend(&sk(0.0), &[50, 100, 200], &seeds(40), &AscentOptions::default(), &SampleCaps::default())
            .unwrap();
    let ok = rows.windows(2).all(|w| w[1].var_over_n <= w[0].var_over_n + w[0].stderr.hypot(w[1].stderr));
    let table: Vec<String> = rows.iter().map(|r| format!("N={} {:.4}+-{:.4}", r.n, r.var_over_n, r.stderr)).collect();
    outcome(ok, format!("Var(L_N)/N: {} (nonincreasing within 1 combined SE)", table.join(", ")))
}

fn criterion_11() -> Outcome {
    let c = clt_check(&sk(1.0), 100, &seeds(200), &AscentOptions::default(), &SampleCaps::default()).unwrap();
    outcome(
        c.ks_distance <= 0.15,
        format!("KS = {:.4} (<= 0.15), chi = {:.4}, sd of W_N = {:.3}", c.ks_distance, c.chi_used, c.normalized_sd),
    )
}

fn criterion_12() -> Outcome {
    let gs = 2f64.sqrt();
    let l0 = 0.5f64.sqrt();
    let rows = beta_sweep(&sk(1.0), &[4.0, 8.0, 16.0, 32.0], 2).unwrap();
    let decreasing = rows.windows(2).all(|w| w[1].f_over_beta <= w[0].f_over_beta);
    let last = rows.last().unwrap();
    let f_err = (last.f_over_beta - gs).abs();
    let l_err = (last.l_beta - l0).abs();
    let values: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.f_over_beta)).collect();
    outcome(
        decreasing && f_err <= 0.05 && l_err <= 0.05,
        format!(
            "F/beta = [{}] decreasing: {decreasing}; |F(32)/32 - GS| = {f_err:.4} (<= 0.05); |L_32 - L0| = {l_err:.4} (<= 0.05)",
            values.join(", ")
        ),
    )
}

fn criterion_13() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/configs");
    let mut bundled: Vec<PathBuf> = std::fs::read_dir(&root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    bundled.sort();
    let mut problems = Vec::new();
    for path in &bundled {
        let name = path.file_name().unwrap().to_string_lossy();
        match Config::load(path) {
            Ok(cfg) => {
                let failed: Vec<&str> =
                    run_checks(&cfg.mixture, &cfg.solver).iter().filter(|c| c.status == Status::Fail).map(|c| c.name).collect();
                if !failed.is_empty() {
                    problems.push(format!("{name}: {}", failed.join(", ")));
                }
            }
            Err(e) => problems.push(format!("{name}: {e}")),
        }
    }

    let faults = root.join("faults");
    let margin = Config::load(&faults.join("negative_margin.toml")).unwrap();
    let checks = run_checks(&margin.mixture, &margin.solver);
    if !checks.iter().any(|c| c.name == "solver_certificate" && c.status == Status::Fail) {
        problems.push("negative_margin.toml: solver_certificate did not fail".into());
    }
    for (file, field) in [("empty_mixture.toml", "mixture"), ("degree_one.toml", "mixture[1].p"), ("cap_exceeded.toml", "mc.N_list")] {
        match Config::load(&faults.join(file)) {
            Err(e) if e.field == field && e.position.is_some() => {}
            Err(e) => problems.push(format!("{file}: wrong diagnostic '{e}'")),
            Ok(_) => problems.push(format!("{file}: accepted")),
        }
    }
    let out = tempfile::tempdir().unwrap();
    let odd = faults.join("odd_mixture.toml");
    let args = [OsStr::new("pspin"), OsStr::new("chaos"), OsStr::new("--config"), odd.as_os_str(), OsStr::new("--out"), out.path().as_os_str()];
    let code = pspin_cli::run(args);
    if code != pspin_cli::EXIT_INVALID {
        problems.push(format!("odd_mixture.toml: chaos exited {code}"));
    }

    let detail = if problems.is_empty() {
        format!("{} bundled configs pass verify; 5 injected faults rejected with named invariants or fields", bundled.len())
    } else {
        problems.join("; ")
    };
    outcome(problems.is_empty(), detail)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("RS oracle, SK h=1", criterion_1),
        ("FRSB oracle, 2+4 mixture", criterion_2),
        ("1RSB oracle, pure p=3", criterion_3),
        ("consistency identities at certified minimizers", criterion_4),
        ("coupled functional identities", criterion_5),
        ("derivative checks", criterion_6),
        ("MC p=2 exactness, N=200", criterion_7),
        ("chaos empirics, N=150, t=0.5", criterion_8),
        ("variance identity, N=100", criterion_9),
        ("superconcentration trend", criterion_10),
        ("CLT, SK h=1, N=100", criterion_11),
        ("beta -> infinity convergence, SK h=1", criterion_12),
        ("verify suite on bundled and fault configs", criterion_13),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.pass);
        println!("[{}] {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
