//! Subcommand bodies. Each returns whether its own checks passed.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use schiffer::branch_continuation::{trace, NewtonSettings};
use schiffer::cylinder_model::CylinderModel;
use schiffer::field_discretization::{CylinderOperator, Grid};
use schiffer::linear_analysis::kernel_scan;
use schiffer::specfun::{bessel_zero, BesselOrder};
use schiffer::sphere_branch::{sphere_trace, SphereModel, SphereOperator};
use schiffer::sphere_spectral::{ell_zero, find_lambda_star, sweep};
use schiffer::Execution;
use serde::Serialize;
use serde_json::json;

use crate::cli::{Command, SphereCommand};
use crate::config::RunConfig;
use crate::verify::{verify_selected, CRITERIA};
use crate::CliError;

/// Boundary samples per branch point.
const PROFILE_SAMPLES: usize = 256;

fn print_json<T: Serialize + ?Sized>(v: &T) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn out_file(cfg: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    Ok(cfg.out.join(name))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, v: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn settings(cfg: &RunConfig) -> NewtonSettings {
    NewtonSettings { tol: cfg.newton_tol, ..NewtonSettings::default() }
}

fn xs() -> Vec<f64> {
    (0..PROFILE_SAMPLES).map(|j| 2.0 * PI * j as f64 / PROFILE_SAMPLES as f64).collect()
}

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<bool, CliError> {
    match cmd {
        Command::Constants => {
            print_json(&CylinderModel::new(cfg.n, cfg.m)?)?;
            Ok(true)
        }
        Command::BesselZero { nu, n } => {
            let zero = bessel_zero(BesselOrder::new(*nu)?, *n)?;
            print_json(&json!({ "nu": nu, "n": n, "zero": zero }))?;
            Ok(true)
        }
        Command::Kernel => kernel(cfg),
        Command::Branch => branch(cfg),
        Command::Verify { only } => verify(cfg, only.as_deref()),
        Command::Sphere(s) => sphere(s, cfg),
    }
}

fn kernel(cfg: &RunConfig) -> Result<bool, CliError> {
    let model = CylinderModel::new(cfg.n, cfg.m)?;
    let grid = Grid::cylinder(cfg.n, cfg.k, cfg.l, cfg.m_colloc);
    let reports: Vec<_> = [-0.1, 0.0, 0.1]
        .iter()
        .map(|d| kernel_scan(&grid, &model, model.lambda_m + d, cfg.kernel_tol, Execution::default()))
        .collect();
    print_json(&reports)?;
    let counts: Vec<usize> = reports.iter().map(|r| r.kernel_count).collect();
    if counts != [0, 1, 0] {
        eprintln!("kernel dimensions at lambda_m - 0.1, lambda_m, lambda_m + 0.1: {counts:?}, expected [0, 1, 0]");
        return Ok(false);
    }
    Ok(true)
}

fn branch(cfg: &RunConfig) -> Result<bool, CliError> {
    let model = CylinderModel::new(cfg.n, cfg.m)?;
    let op = CylinderOperator::new(&Grid::cylinder(cfg.n, cfg.k, cfg.l, cfg.m_colloc), &model)?;
    let b = trace(&op, cfg.s_max, cfg.ds, &settings(cfg), Execution::default())?;
    write_json(&out_file(cfg, "branch.json")?, &b.points)?;
    let mut w = csv_writer(&out_file(cfg, "profiles.csv")?)?;
    w.write_record(["s", "x", "h_s"])?;
    for p in &b.points {
        for x in xs() {
            w.serialize((p.s, x, p.h_phys.eval(&op.grid, x).0))?;
        }
    }
    w.flush()?;
    print_json(&json!({
        "N": b.n, "m": b.m, "points": b.points.len(), "s_reached": b.s_reached, "truncated": b.truncated,
        "out": cfg.out,
    }))?;
    if b.truncated {
        eprintln!("branch truncated at |s| = {}", b.s_reached);
    }
    Ok(!b.truncated)
}

fn verify(cfg: &RunConfig, only: Option<&[u8]>) -> Result<bool, CliError> {
    let ids = only.unwrap_or(&CRITERIA);
    if let Some(bad) = ids.iter().find(|c| !CRITERIA.contains(c)) {
        return Err(CliError::Usage(format!("no criterion {bad}")));
    }
    let report = verify_selected(cfg, ids);
    let path = out_file(cfg, "report.json")?;
    write_json(&path, &report)?;
    for c in &report.criteria {
        println!("criterion {:>2}: {}", c.criterion, if c.status == crate::report::Status::Pass { "PASS" } else { "FAIL" });
    }
    for f in report.failures() {
        eprintln!("failed [{}] {}: measured {:?}, {:?} {}{}", f.criterion, f.name, f.measured, f.relation, f.tolerance,
            f.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default());
    }
    println!("report written to {}", path.display());
    Ok(report.passed())
}

fn sphere_ell(cfg: &RunConfig) -> Result<u32, CliError> {
    Ok(match cfg.sphere_ell() {
        Some(e) => e,
        None => ell_zero(cfg.lambda0, cfg.sl_n)?,
    })
}

fn sphere(cmd: &SphereCommand, cfg: &RunConfig) -> Result<bool, CliError> {
    match cmd {
        SphereCommand::Mu { lambdas } => curve(None, lambdas, cfg),
        SphereCommand::Sigma { lambdas } => curve(Some(sphere_ell(cfg)?), lambdas, cfg),
        SphereCommand::LambdaStar => {
            let ls = find_lambda_star(sphere_ell(cfg)?, cfg.lambda0, cfg.sl_n)?;
            print_json(&ls)?;
            let ok = ls.sigma.abs() <= cfg.zero_tol && ls.sigma_prime > 0.0;
            if !ok {
                eprintln!("sigma(lambda*) = {:e}, sigma'(lambda*) = {}", ls.sigma, ls.sigma_prime);
            }
            Ok(ok)
        }
        SphereCommand::Branch => sphere_branch(cfg),
    }
}

fn curve(ell: Option<u32>, lambdas: &[f64], cfg: &RunConfig) -> Result<bool, CliError> {
    let samples = sweep(ell, lambdas, cfg.sl_n, Execution::default())?;
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(["lambda", "value", "derivative"])?;
    for s in &samples {
        w.serialize((s.lambda, s.value, s.derivative))?;
    }
    w.flush()?;
    Ok(true)
}

fn sphere_branch(cfg: &RunConfig) -> Result<bool, CliError> {
    let model = SphereModel::new(cfg.lambda0, cfg.sphere_ell(), cfg.sl_n)?;
    let op = SphereOperator::new(&model.grid(cfg.k, cfg.l, cfg.m_colloc), &model)?;
    let b = sphere_trace(&op, cfg.s_max, cfg.ds, &settings(cfg), Execution::default())?;
    write_json(&out_file(cfg, "sphere_branch.json")?, &b)?;
    let mut prof = csv_writer(&out_file(cfg, "sphere_profiles.csv")?)?;
    let mut surf = csv_writer(&out_file(cfg, "sphere_boundary.csv")?)?;
    prof.write_record(["s", "x", "h_s"])?;
    surf.write_record(["s", "x", "X", "Y", "Z_plus", "Z_minus"])?;
    for p in &b.points {
        for x in xs() {
            let h = p.h_tilde.eval(&op.grid, x).0;
            prof.serialize((p.s, x, h))?;
            surf.serialize((p.s, x, x.cos() * h.cos(), x.sin() * h.cos(), h.sin(), -h.sin()))?;
        }
    }
    prof.flush()?;
    surf.flush()?;
    print_json(&json!({
        "ell": b.ell, "lambda_star": b.lambda_star, "points": b.points.len(), "s_reached": b.s_reached,
        "truncated": b.truncated, "out": cfg.out,
    }))?;
    if b.truncated {
        eprintln!("sphere branch truncated at |s| = {}", b.s_reached);
    }
    Ok(!b.truncated)
}
