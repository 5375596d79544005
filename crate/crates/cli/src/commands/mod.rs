mod simulate;
mod verify;

use pspin_core::chaos::{chaos_profile, ChaosContext};
use pspin_core::finite_temp::{beta_sweep, sweep_grid};
use pspin_core::zero_temp::{classify_phase, closed_form, minimize_q_with, Phase, SolverOptions, ZeroTempSolution};
use pspin_core::{Error, MixtureSpec};
use serde_json::{json, Value};

pub use simulate::simulate;
pub use verify::{run_checks, verify, Check, Status};

use crate::output::{header, num, to_value, write_json, CsvOut};
use crate::{CliError, Run, EXIT_FAILED, EXIT_OK};

/// Numerical minimizer; a non-converged run still yields its best iterate.
pub(crate) fn solve_numerically(m: &MixtureSpec, opts: &SolverOptions) -> Result<(ZeroTempSolution, bool), Error> {
    match minimize_q_with(m, opts) {
        Ok(sol) => Ok((sol, true)),
        Err(Error::NotConverged { best, .. }) => Ok((*best, false)),
        Err(e) => Err(e),
    }
}

fn solution_json(sol: &ZeroTempSolution) -> Value {
    let c = &sol.certificate;
    json!({
        "phase": sol.phase.to_string(),
        "gs": sol.gs_value,
        "l0": sol.l0(),
        "q0": sol.q0,
        "delta0": sol.param.gap(),
        "total_mass": sol.param.total_mass(),
        "cells": sol.param.cells(),
        "certificate": {
            "eq_residual": c.eq_residual,
            "relative_residual": c.relative_residual(),
            "min_g": c.min_g,
            "support_violation": c.support_violation,
        },
    })
}

fn closed_form_json(m: &MixtureSpec) -> Value {
    match closed_form(m, 1e-12) {
        Ok(cf) => json!({ "phase": cf.phase.to_string(), "gs": cf.gs_value, "l0": cf.l0(), "q0": cf.q0 }),
        Err(_) => Value::Null,
    }
}

pub fn solve(run: &Run) -> Result<i32, CliError> {
    let cfg = &run.config;
    let opts = cfg.solver_options()?;
    let m = &cfg.mixture;
    let (sol, converged) = solve_numerically(m, &opts)?;
    let certified = converged && sol.certificate.passes(opts.tol);

    let csv_path = run.outputs.path(cfg.csv_path.as_deref(), "solve", "csv");
    let mut csv = CsvOut::create(&csv_path, &["s", "g", "alpha"])?;
    for &(s, g) in &sol.certificate.g_samples {
        csv.row([num(s), num(g), num(sol.param.alpha_at(s))])?;
    }
    csv.flush()?;

    let mut doc = header("solve", &cfg.file, m);
    doc.insert("solver".into(), to_value(&opts));
    doc.insert("converged".into(), json!(converged));
    doc.insert("certified".into(), json!(certified));
    doc.insert("solution".into(), solution_json(&sol));
    doc.insert("closed_form".into(), closed_form_json(m));
    let json_path = run.outputs.path(cfg.json_path.as_deref(), "solve", "json");
    write_json(&json_path, &Value::Object(doc))?;

    println!(
        "phase {}  GS {:.10}  L0 {:.10}  q0 {:.6}  certified {certified}",
        sol.phase,
        sol.gs_value,
        sol.l0(),
        sol.q0
    );
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(if certified { EXIT_OK } else { EXIT_FAILED })
}

pub fn phase(run: &Run) -> Result<i32, CliError> {
    let cfg = &run.config;
    let m = &cfg.mixture;
    let phase = classify_phase(m);
    let mut doc = header("phase", &cfg.file, m);
    doc.insert("phase".into(), json!(phase.to_string()));
    doc.insert("closed_form".into(), closed_form_json(m));
    if phase == Phase::Other {
        let (sol, converged) = solve_numerically(m, &cfg.solver_options()?)?;
        doc.insert("numerical".into(), json!({ "converged": converged, "solution": solution_json(&sol) }));
    }
    println!("phase {phase}");

    if let Some(ft) = &cfg.finite_temp {
        let rows = beta_sweep(m, &ft.betas, ft.k)?;
        let csv_path = run.outputs.path(cfg.csv_path.as_deref(), "phase", "csv");
        let mut csv = CsvOut::create(&csv_path, &["beta", "f_over_beta", "l_beta", "beta_gap"])?;
        for r in &rows {
            csv.row([num(r.beta), num(r.f_over_beta), num(r.l_beta), num(r.beta_gap)])?;
            println!("beta {:>8.3}  F/beta {:.8}  L_beta {:.8}", r.beta, r.f_over_beta, r.l_beta);
        }
        csv.flush()?;
        doc.insert("sweep".into(), json!({ "k": ft.k, "scaled_x_grid": sweep_grid(), "rows": to_value(&rows) }));
        println!("wrote {}", csv_path.display());
    }
    let json_path = run.outputs.path(cfg.json_path.as_deref(), "phase", "json");
    write_json(&json_path, &Value::Object(doc))?;
    println!("wrote {}", json_path.display());
    Ok(EXIT_OK)
}

pub fn chaos(run: &Run) -> Result<i32, CliError> {
    let cfg = &run.config;
    let m = &cfg.mixture;
    if !m.is_even() {
        return Err(CliError::Invalid("chaos analysis needs an even mixture (no odd p)".into()));
    }
    let (sol, converged) = solve_numerically(m, &cfg.solver_options()?)?;
    if !converged {
        return Err(CliError::Failed("zero-temperature solver did not certify a minimizer".into()));
    }
    let ctx = ChaosContext::build(m, &sol)?;
    let profile = chaos_profile(&ctx, &cfg.t_grid, cfg.quad_points)?;

    let csv_path = run.outputs.path(cfg.csv_path.as_deref(), "chaos", "csv");
    let mut csv = CsvOut::create(&csv_path, &["t", "u_t"])?;
    for (t, u) in profile.t_grid.iter().zip(&profile.u_t_vals) {
        csv.row([num(*t), num(*u)])?;
    }
    csv.flush()?;

    let mut doc = header("chaos", &cfg.file, m);
    doc.insert("solution".into(), solution_json(&sol));
    doc.insert(
        "context".into(),
        json!({
            "delta0": ctx.delta0,
            "b": ctx.b,
            "d0": ctx.d(0.0),
            "identity_residual": ctx.identity_residual(),
        }),
    );
    doc.insert("chi".into(), json!(profile.chi));
    doc.insert("quad_points".into(), json!(cfg.quad_points));
    doc.insert("t_grid".into(), json!(profile.t_grid));
    doc.insert("u_t".into(), json!(profile.u_t_vals));
    let json_path = run.outputs.path(cfg.json_path.as_deref(), "chaos", "json");
    write_json(&json_path, &Value::Object(doc))?;
    println!("chi {:.10}  L0 {:.10}  q0 {:.6}", profile.chi, ctx.l0(), ctx.q0());
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(EXIT_OK)
}
