use pspin_core::chaos::{solve_u_t, ChaosContext};
use pspin_core::monte_carlo::stats::{mean, sample_variance};
use pspin_core::monte_carlo::{
    clt_check, coupled_overlaps, ground_state_energies, superconcentration_trend, variance_identity_check, RunRecord,
};
use pspin_core::MixtureSpec;
use serde_json::{json, Value};

use super::solve_numerically;
use crate::config::{Experiment, McSettings};
use crate::output::{header, num, opt_num, sibling, to_value, write_json, CsvOut};
use crate::{CliError, Run, EXIT_OK};

const RUN_HEADER: [&str; 7] = ["N", "seed", "t", "energy", "overlap", "restarts", "converged"];

fn write_records(csv: &mut CsvOut, records: &[RunRecord]) -> Result<(), CliError> {
    for r in records {
        csv.row([
            r.n.to_string(),
            r.seed.to_string(),
            opt_num(r.t),
            num(r.energy),
            opt_num(r.overlap),
            r.restarts.to_string(),
            r.converged.to_string(),
        ])?;
    }
    csv.flush()
}

/// Predicted overlap at coupling `t`, when the zero-temperature solution
/// certifies.
fn predicted_overlap(m: &MixtureSpec, ctx: Option<&ChaosContext>, t: f64) -> Option<f64> {
    if t == 1.0 {
        return Some(1.0);
    }
    if m.h() == 0.0 {
        return Some(0.0);
    }
    let ctx = ctx?;
    if t == 0.0 {
        return Some(ctx.l0().powi(2) * m.h().powi(2));
    }
    solve_u_t(ctx, t, 0.0).ok()
}

fn stderr_of_mean(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    (sample_variance(v) / v.len() as f64).sqrt()
}

pub fn simulate(run: &Run) -> Result<i32, CliError> {
    let cfg = &run.config;
    let m = &cfg.mixture;
    let Some(mc) = &cfg.mc else {
        return Err(CliError::Invalid(format!("{}: simulate needs an [mc] section", cfg.file.display())));
    };
    let mc = McSettings { seed_start: mc.seed_start + run.seed_offset, ..mc.clone() };
    let seeds = mc.seeds();
    let csv_path = run.outputs.path(cfg.csv_path.as_deref(), "simulate", "csv");
    let mut runs = CsvOut::create(&csv_path, &RUN_HEADER)?;

    let mut doc = header("simulate", &cfg.file, m);
    doc.insert("experiment".into(), json!(mc.experiment.name()));
    doc.insert("N_list".into(), json!(mc.n_list));
    doc.insert("seed_range".into(), json!({ "start": mc.seed_start, "count": mc.seed_count }));
    doc.insert("ascent".into(), to_value(&mc.ascent));
    doc.insert("caps".into(), to_value(&mc.caps));
    // Local ascent certifies the maximum only for the quadratic model.
    doc.insert("energies_are_optimizer_lower_bounds".into(), json!(m.max_degree() >= 3));

    let mut results = Vec::new();
    match mc.experiment {
        Experiment::GroundState => {
            for &n in &mc.n_list {
                let recs = ground_state_energies(m, n, &seeds, &mc.ascent, &mc.caps)?;
                write_records(&mut runs, &recs)?;
                let e: Vec<f64> = recs.iter().map(|r| r.energy / n as f64).collect();
                let var = if e.len() > 1 { sample_variance(&e) * n as f64 } else { f64::NAN };
                results.push(json!({
                    "N": n,
                    "mean_energy_per_site": mean(&e),
                    "stderr_energy_per_site": stderr_of_mean(&e),
                    "var_over_n": var,
                    "converged_fraction": recs.iter().filter(|r| r.converged).count() as f64 / recs.len() as f64,
                }));
                println!("N {n:>4}  mean L_N/N {:.8}", mean(&e));
            }
        }
        Experiment::Coupled => {
            let ctx = if m.h() > 0.0 {
                let (sol, _) = solve_numerically(m, &cfg.solver_options()?)?;
                ChaosContext::build(m, &sol).ok()
            } else {
                None
            };
            let by_t = sibling(&csv_path, "by_t");
            let mut table = CsvOut::create(&by_t, &["N", "t", "mean_overlap", "stderr", "pairs", "predicted_u_t"])?;
            for &n in &mc.n_list {
                for &t in &mc.t_grid {
                    let pairs = coupled_overlaps(m, n, t, &seeds, &mc.ascent, &mc.caps)?;
                    let recs: Vec<RunRecord> = pairs
                        .iter()
                        .zip(&seeds)
                        .map(|(p, &seed)| RunRecord {
                            n,
                            seed,
                            t: Some(t),
                            energy: p.l1,
                            overlap: Some(p.overlap),
                            restarts: mc.ascent.restarts,
                            converged: p.converged,
                        })
                        .collect();
                    write_records(&mut runs, &recs)?;
                    let r: Vec<f64> = pairs.iter().map(|p| p.overlap).collect();
                    let predicted = predicted_overlap(m, ctx.as_ref(), t);
                    table.row([
                        n.to_string(),
                        num(t),
                        num(mean(&r)),
                        num(stderr_of_mean(&r)),
                        r.len().to_string(),
                        opt_num(predicted),
                    ])?;
                    results.push(json!({
                        "N": n,
                        "t": t,
                        "mean_overlap": mean(&r),
                        "stderr": stderr_of_mean(&r),
                        "predicted_u_t": predicted,
                    }));
                    println!("N {n:>4}  t {t:.3}  mean overlap {:.6}", mean(&r));
                }
            }
            table.flush()?;
            doc.insert("overlap_table".into(), json!(by_t.display().to_string()));
        }
        Experiment::VarianceIdentity => {
            let by_t = sibling(&csv_path, "by_t");
            let mut table = CsvOut::create(&by_t, &["N", "t", "mean_overlap", "mean_xi"])?;
            for &n in &mc.n_list {
                let v = variance_identity_check(m, n, &seeds, mc.t_points, &mc.ascent, &mc.caps)?;
                write_records(&mut runs, &v.records)?;
                for ((t, r), x) in v.t_nodes.iter().zip(&v.mean_overlap).zip(&v.mean_xi) {
                    table.row([n.to_string(), num(*t), num(*r), num(*x)])?;
                }
                results.push(json!({
                    "N": n,
                    "var_direct": v.var_direct,
                    "var_via_identity": v.var_via_identity,
                    "se_direct": v.se_direct,
                    "se_identity": v.se_identity,
                    "se_difference": v.se_difference,
                    "z_score": v.z_score,
                    "t_points": mc.t_points,
                }));
                println!(
                    "N {n:>4}  Var(L_N) {:.6}  identity {:.6}  z {:.3}",
                    v.var_direct, v.var_via_identity, v.z_score
                );
            }
            table.flush()?;
            doc.insert("overlap_table".into(), json!(by_t.display().to_string()));
        }
        Experiment::Superconcentration => {
            let (rows, recs) = superconcentration_trend(m, &mc.n_list, &seeds, &mc.ascent, &mc.caps)?;
            write_records(&mut runs, &recs)?;
            let by_n = sibling(&csv_path, "by_n");
            let mut table = CsvOut::create(&by_n, &["N", "var_over_n", "stderr", "mean_energy_per_site"])?;
            for r in &rows {
                table.row([r.n.to_string(), num(r.var_over_n), num(r.stderr), num(r.mean_energy_per_site)])?;
                println!("N {:>4}  Var(L_N)/N {:.6} +- {:.6}", r.n, r.var_over_n, r.stderr);
            }
            table.flush()?;
            results = rows.iter().map(to_value).collect();
            doc.insert("trend_table".into(), json!(by_n.display().to_string()));
        }
        Experiment::Clt => {
            for &n in &mc.n_list {
                let c = clt_check(m, n, &seeds, &mc.ascent, &mc.caps)?;
                write_records(&mut runs, &c.records)?;
                results.push(json!({
                    "N": n,
                    "ks_distance": c.ks_distance,
                    "chi_used": c.chi_used,
                    "normalized_sd": c.normalized_sd,
                    "raw_ks_distance": c.raw_ks_distance,
                    "mean_energy_per_site": c.mean_energy_per_site,
                }));
                println!("N {n:>4}  KS {:.4}  sd {:.4}  chi {:.6}", c.ks_distance, c.normalized_sd, c.chi_used);
            }
        }
    }
    doc.insert("results".into(), Value::Array(results));
    let json_path = run.outputs.path(cfg.json_path.as_deref(), "simulate", "json");
    write_json(&json_path, &Value::Object(doc))?;
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(EXIT_OK)
}
