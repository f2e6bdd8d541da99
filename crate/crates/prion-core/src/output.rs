//! Deterministic output writers: fixed-column CSV with full-precision
//! floats, JSON reports with sorted keys, state snapshots, and the run
//! manifest.

use crate::config::RunConfig;
use crate::grid::Grid;
use crate::integrator::Trajectory;
use crate::oracle::OracleComparison;
use crate::{Error, Result};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

/// 17 significant decimal digits: enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes a CSV table with a fixed header and full-precision rows.
pub fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&format_float(v));
            first = false;
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// JSON with sorted keys and a trailing newline.
pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    write_file(path, &text)
}

/// Moment and balance table of a trajectory.
pub fn write_moments_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let order_headers: Vec<String> = traj
        .moment_orders
        .iter()
        .map(|o| format!("moment_{o}"))
        .collect();
    let mut header: Vec<&str> = vec!["t", "v", "polymer_number", "polymer_mass"];
    header.extend(order_headers.iter().map(|s| s.as_str()));
    header.push("overflow");
    header.push("balance_residual");
    write_csv(
        path,
        &header,
        traj.times.iter().enumerate().map(|(i, &t)| {
            let mut row = vec![t, traj.states[i].v, traj.moments[i].number, traj.moments[i].mass];
            row.extend(traj.moments[i].higher.iter().copied());
            row.push(traj.states[i].ledger.overflow);
            row.push(traj.balance_residuals[i]);
            row
        }),
    )
}

/// Two-column `y u` snapshot of a density.
pub fn write_snapshot(path: &Path, grid: &Grid, u: &[f64]) -> Result<()> {
    let mut out = String::new();
    for (y, v) in grid.centers.iter().zip(u) {
        out.push_str(&format_float(*y));
        out.push(' ');
        out.push_str(&format_float(*v));
        out.push('\n');
    }
    write_file(path, &out)
}

/// Oracle-versus-simulation table with per-row relative errors.
pub fn write_oracle_csv(path: &Path, cmp: &OracleComparison) -> Result<()> {
    write_csv(
        path,
        &["t", "v_sim", "v_ode", "p_sim", "p_ode", "u_sim", "u_ode", "rel_err_v", "rel_err_p", "rel_err_u"],
        cmp.rows.iter().map(|r| {
            let rel = |sim: f64, ode: f64| (sim - ode).abs() / ode.abs().max(f64::MIN_POSITIVE);
            vec![
                r.t,
                r.v_sim,
                r.v_ode,
                r.p_sim,
                r.p_ode,
                r.u_sim,
                r.u_ode,
                rel(r.v_sim, r.v_ode),
                rel(r.p_sim, r.p_ode),
                rel(r.u_sim, r.u_ode),
            ]
        }),
    )
}

/// Hash of the canonical configuration JSON.
pub fn config_hash(config: &RunConfig) -> String {
    let canonical = config.to_json().to_string();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Manifest tying artifacts to the configuration and crate version.
pub fn write_manifest(path: &Path, config: &RunConfig, subcommand: &str, seed: u64) -> Result<()> {
    write_json(
        path,
        &serde_json::json!({
            "config_hash": config_hash(config),
            "config": config.to_json(),
            "subcommand": subcommand,
            "seed": seed,
            "version": env!("CARGO_PKG_VERSION"),
        }),
    )
}

/// Machine-readable failure record for nonzero exits.
pub fn write_failure(out_dir: &Path, message: &str) {
    let path = out_dir.join("failure.json");
    let _ = write_json(&path, &serde_json::json!({"error": message}));
}
