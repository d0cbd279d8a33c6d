//! Output files. Every double is written with 17 significant digits.

use std::path::Path;

use hfconv::analysis::{convergence_report, ComparisonRow, LojasiewiczFit, ShiftPoint, ShiftStudy};
use hfconv::io::{csv_cell, fmt17, json_f64, json_opt_f64};
use hfconv::solvers::{RunResult, SolverConfig};
use hfconv::ElectronicSystem;
use serde_json::{json, Map, Value};

use crate::Failure;

fn write_text(path: &Path, text: String) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    text.push('\n');
    write_text(path, text)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, Failure> {
    csv::Writer::from_path(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn csv_row(w: &mut csv::Writer<std::fs::File>, row: &[String]) -> Result<(), Failure> {
    w.write_record(row).map_err(|e| Failure::Input(e.to_string()))
}

fn opt_count(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_run(
    out: &Path,
    system: &ElectronicSystem,
    config: &SolverConfig,
    shift: Option<f64>,
    result: &RunResult,
) -> Result<(), Failure> {
    write_text(&out.join("trace.csv"), result.trace.to_csv())?;
    let algorithm = match shift {
        Some(b) => format!("auto-shift(b={b})"),
        None => config.algorithm.name(),
    };
    let report = convergence_report(result, &config.algorithm, Some(result.final_energy()));
    let mut summary = Map::new();
    summary.insert("status".into(), json!(result.status.name()));
    summary.insert("algorithm".into(), json!(algorithm));
    summary.insert("shift".into(), json_opt_f64(shift));
    summary.insert("iterations".into(), json!(result.iterations()));
    summary.insert("final_energy".into(), json_f64(result.final_energy()));
    summary.insert("final_grad_norm".into(), json_f64(result.final_grad_norm()));
    summary.insert("tol_grad".into(), json_f64(config.tol_grad));
    summary.insert("aufbau_residual".into(), json_opt_f64(result.aufbau_residual));
    summary.insert("aufbau_solution".into(), json!(result.is_aufbau(system)));
    summary.insert(
        "system".into(),
        json!({
            "n_basis": system.n_basis(),
            "n_electrons": system.n_electrons(),
            "n_occ": system.n_occ(),
            "convention": system.convention().name(),
        }),
    );
    summary.insert(
        "report".into(),
        json!({
            "nu": json_opt_f64(report.nu),
            "nu_r2": json_opt_f64(report.nu_r2),
            "theta": json_opt_f64(report.theta),
            "theta_clamped": report.theta_clamped,
            "kappa": json_opt_f64(report.kappa),
            "degenerate": report.degenerate_flag,
        }),
    );
    if let Some(tail) = &report.tail {
        summary.insert("tail".into(), Value::Array(tail.iter().copied().map(json_f64).collect()));
    }
    summary.insert("warnings".into(), json!(result.warnings));
    write_json(&out.join("summary.json"), &Value::Object(summary))?;

    if let Some(iterates) = &result.stored_iterates {
        let rows: Vec<Value> = iterates
            .iter()
            .map(|d| Value::Array(d.matrix().to_row_major().into_iter().map(json_f64).collect()))
            .collect();
        write_json(&out.join("iterates.json"), &Value::Array(rows))?;
    }
    Ok(())
}

pub fn write_sweep_csv(out: &Path, points: &[ShiftPoint]) -> Result<(), Failure> {
    let mut w = csv_writer(&out.join("sweep.csv"))?;
    csv_row(&mut w, &["b", "status", "iterations", "nu", "r2", "error"].map(String::from))?;
    for p in points {
        csv_row(
            &mut w,
            &[
                fmt17(p.b),
                p.status.map(|s| s.name().to_string()).unwrap_or_default(),
                opt_count(p.iterations),
                csv_cell(p.nu),
                csv_cell(p.r2),
                p.error.clone().unwrap_or_default(),
            ],
        )?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))
}

pub fn write_sweep_summary(out: &Path, study: &hfconv::Result<ShiftStudy>) -> Result<(), Failure> {
    let value = match study {
        Ok(s) => json!({
            "slope": json_f64(s.slope),
            "slope_r2": json_f64(s.slope_r2),
            "last_ratio": json_f64(s.last_ratio),
            "error": Value::Null,
        }),
        Err(e) => json!({ "slope": Value::Null, "slope_r2": Value::Null, "last_ratio": Value::Null, "error": e.to_string() }),
    };
    write_json(&out.join("sweep.json"), &value)
}

pub fn write_comparison(out: &Path, rows: &[ComparisonRow]) -> Result<(), Failure> {
    let mut w = csv_writer(&out.join("comparison.csv"))?;
    csv_row(
        &mut w,
        &["algorithm", "status", "iterations_to_tol", "iterations", "final_energy", "final_grad_norm", "nu", "error"]
            .map(String::from),
    )?;
    for r in rows {
        csv_row(
            &mut w,
            &[
                r.name.clone(),
                r.status.map(|s| s.name().to_string()).unwrap_or_default(),
                opt_count(r.iterations_to_tol),
                opt_count(r.iterations),
                csv_cell(r.final_energy),
                csv_cell(r.final_grad_norm),
                csv_cell(r.nu),
                r.error.clone().unwrap_or_default(),
            ],
        )?;
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))
}

pub fn write_loja(out: &Path, fit: &LojasiewiczFit) -> Result<(), Failure> {
    write_json(
        &out.join("loja.json"),
        &json!({
            "theta": json_f64(fit.theta),
            "theta_raw": json_f64(fit.theta_raw),
            "clamped": fit.clamped,
            "kappa": json_f64(fit.kappa),
            "r2": json_f64(fit.r2),
            "points": fit.points,
            "e_inf": json_f64(fit.e_inf),
        }),
    )
}
