//! Batch orchestration behind the command-line subcommands.

use crate::config::RunConfig;
use crate::diagnostics::{random_test_vector, uniqueness_probe, weak_form_residual};
use crate::hypothesis::{audit, compute_xi_alpha, WeightFunction};
use crate::integrator::{simulate, StepSize, Trajectory};
use crate::kernels::{RateFn, RateSet};
use crate::numeric::linear_fit;
use crate::operators::Discretization;
use crate::oracle::{compare_to_simulation, solve_moment_ode, MomentOdeParams};
use crate::output;
use crate::{Error, Result};
use rand::SeedableRng;
use std::path::Path;
use std::sync::Arc;

/// Batch entry points, one per CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    CheckHypotheses,
    OracleCompare,
    ProbeUniqueness,
    Residuals,
    Convergence,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::CheckHypotheses => "check-hypotheses",
            Subcommand::OracleCompare => "oracle-compare",
            Subcommand::ProbeUniqueness => "probe-uniqueness",
            Subcommand::Residuals => "residuals",
            Subcommand::Convergence => "convergence",
        }
    }
}

/// Number of random test vectors the residual subcommand evaluates.
pub const RESIDUAL_TEST_VECTORS: usize = 10;

fn run_simulation(config: &RunConfig) -> Result<(Arc<Discretization>, RateSet, Trajectory)> {
    let rates = config.build_rates()?;
    let grid = config.build_grid()?;
    let disc = Arc::new(Discretization::new(grid, &rates)?);
    let u0 = config.initial_density(&disc.grid)?;
    let traj = simulate(&disc, &rates, config.initial.monomers, u0, &config.sim_options())?;
    Ok((disc, rates, traj))
}

/// The weight exponent used by default for the probe: derived from the
/// splitting-exponent scan when the rates are in power-law form.
fn default_weight_exponent(rates: &RateSet, config: &RunConfig) -> f64 {
    if let Some(p) = config.probe.weight_exponent.or(config.hypothesis.weight_exponent) {
        return p;
    }
    match (&rates.beta, &rates.mu, &rates.tau) {
        (
            RateFn::PowerLaw { exponent: b, .. },
            RateFn::PowerLaw { exponent: m, .. },
            RateFn::PowerLaw { exponent: theta, .. },
        ) => {
            let xi = compute_xi_alpha(&rates.k0, *b, *m, *theta, config.hypothesis.xi_points);
            WeightFunction::from_alpha(xi.alpha, rates.y0).exponent
        }
        _ => 0.0,
    }
}

/// Executes one subcommand, writing its artifacts into `out_dir`.
pub fn run(cmd: Subcommand, config: &RunConfig, out_dir: &Path, seed: u64, threads: usize) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    match cmd {
        Subcommand::Simulate => {
            let (disc, _rates, traj) = run_simulation(config)?;
            output::write_moments_csv(&out_dir.join("moments.csv"), &traj)?;
            output::write_snapshot(&out_dir.join("state_initial.txt"), &disc.grid, &traj.states[0].u)?;
            output::write_snapshot(
                &out_dir.join("state_final.txt"),
                &disc.grid,
                &traj.states.last().unwrap().u,
            )?;
        }
        Subcommand::CheckHypotheses => {
            let rates = config.build_rates()?;
            let report = audit(
                &rates,
                &config.audit_options(),
                &config.diagnostics.moment_orders,
                config.hypothesis.alpha,
                config.hypothesis.weight_exponent,
            );
            output::write_json(&out_dir.join("hypotheses.json"), &serde_json::to_value(&report).unwrap())?;
        }
        Subcommand::OracleCompare => {
            let (_disc, rates, traj) = run_simulation(config)?;
            let params = MomentOdeParams::from_rates(&rates)?;
            let series = solve_moment_ode(
                &params,
                traj.states[0].v,
                traj.moments[0].number,
                traj.moments[0].mass,
                &traj.times,
                1e-10,
            )?;
            let cmp = compare_to_simulation(&traj, &series)?;
            output::write_oracle_csv(&out_dir.join("oracle_compare.csv"), &cmp)?;
            output::write_json(
                &out_dir.join("oracle_summary.json"),
                &serde_json::json!({
                    "err_v": cmp.err_v,
                    "err_p": cmp.err_p,
                    "err_u": cmp.err_u,
                    "overflow_share": cmp.overflow_share,
                    "valid": cmp.valid,
                    "oracle_negative_p": series.negative_p,
                }),
            )?;
        }
        Subcommand::ProbeUniqueness => {
            let rates = config.build_rates()?;
            let grid = config.build_grid()?;
            let disc = Arc::new(Discretization::new(grid, &rates)?);
            let u0 = config.initial_density(&disc.grid)?;
            let weight =
                WeightFunction { exponent: default_weight_exponent(&rates, config), y0: rates.y0 };
            let report = uniqueness_probe(
                &disc,
                &rates,
                config.initial.monomers,
                &u0,
                &config.sim_options(),
                config.probe.epsilon,
                &weight,
            )?;
            output::write_csv(
                &out_dir.join("probe.csv"),
                &["t", "distance", "fitted_bound"],
                report.times.iter().enumerate().map(|(i, &t)| {
                    vec![t, report.distance[i], report.d0 * (report.fitted_rate * t).exp()]
                }),
            )?;
            output::write_json(
                &out_dir.join("probe.json"),
                &serde_json::json!({
                    "epsilon": report.epsilon,
                    "weight_exponent": report.weight_exponent,
                    "fitted_rate": report.fitted_rate,
                    "d0": report.d0,
                    "max_bound_ratio": report.max_bound_ratio,
                    "bound_holds": report.bound_holds,
                }),
            )?;
        }
        Subcommand::Residuals => {
            let (disc, _rates, traj) = run_simulation(config)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut columns: Vec<Vec<f64>> = Vec::new();
            for _ in 0..RESIDUAL_TEST_VECTORS {
                let phi = random_test_vector(&disc.grid, &mut rng);
                columns.push(weak_form_residual(&traj, &phi)?);
            }
            let mut header: Vec<String> = vec!["t".into()];
            header.extend((0..columns.len()).map(|k| format!("residual_phi_{k:02}")));
            let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
            output::write_csv(
                &out_dir.join("residuals.csv"),
                &header_refs,
                traj.times.iter().enumerate().map(|(i, &t)| {
                    let mut row = vec![t];
                    row.extend(columns.iter().map(|c| c[i]));
                    row
                }),
            )?;
        }
        Subcommand::Convergence => {
            run_convergence(config, out_dir, threads)?;
        }
    }
    output::write_manifest(&out_dir.join("manifest.json"), config, cmd.name(), seed)
}

/// One rung of the oracle refinement ladder.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRung {
    pub cells: usize,
    pub dt: f64,
    pub err_v: f64,
    pub err_p: f64,
    pub err_u: f64,
    pub overflow_share: f64,
}

/// Runs the factor-2 (mesh, step) refinement ladder against the moment
/// oracle, starting from the configured resolution. Returns the rungs in
/// refinement order.
pub fn oracle_ladder(config: &RunConfig, rungs: usize, threads: usize) -> Result<Vec<ConvergenceRung>> {
    let base_dt = match config.time.step {
        StepSize::Fixed(dt) => dt,
        StepSize::CflFraction(_) => {
            return Err(Error::invalid("the refinement ladder requires a fixed step size"))
        }
    };
    let jobs: Vec<(usize, f64)> = (0..rungs)
        .map(|k| {
            let factor = 1usize << k;
            (config.grid.cells * factor, base_dt / factor as f64)
        })
        .collect();

    let worker = |(cells, dt): (usize, f64)| -> Result<ConvergenceRung> {
        let mut cfg = config.clone();
        cfg.grid.cells = cells;
        cfg.time.step = StepSize::Fixed(dt);
        let (_disc, rates, traj) = run_simulation(&cfg)?;
        let params = MomentOdeParams::from_rates(&rates)?;
        let series = solve_moment_ode(
            &params,
            traj.states[0].v,
            traj.moments[0].number,
            traj.moments[0].mass,
            &traj.times,
            1e-10,
        )?;
        let cmp = compare_to_simulation(&traj, &series)?;
        Ok(ConvergenceRung {
            cells,
            dt,
            err_v: cmp.err_v,
            err_p: cmp.err_p,
            err_u: cmp.err_u,
            overflow_share: cmp.overflow_share,
        })
    };

    let mut results: Vec<Option<Result<ConvergenceRung>>> = (0..jobs.len()).map(|_| None).collect();
    let width = threads.max(1);
    for chunk_start in (0..jobs.len()).step_by(width) {
        let chunk_end = (chunk_start + width).min(jobs.len());
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for idx in chunk_start..chunk_end {
                let job = jobs[idx];
                handles.push((idx, scope.spawn(move || worker(job))));
            }
            for (idx, h) in handles {
                results[idx] = Some(h.join().expect("ladder worker panicked"));
            }
        });
    }
    results.into_iter().map(|r| r.unwrap()).collect()
}

/// Least-squares convergence order of an error ladder under factor-2
/// refinement (positive means the error shrinks).
pub fn empirical_order(errors: &[f64]) -> f64 {
    let xs: Vec<f64> = (0..errors.len()).map(|k| k as f64).collect();
    let logs: Vec<f64> = errors.iter().map(|e| e.max(f64::MIN_POSITIVE).log2()).collect();
    let (_, slope) = linear_fit(&xs, &logs);
    -slope
}

fn run_convergence(config: &RunConfig, out_dir: &Path, threads: usize) -> Result<()> {
    let rungs = oracle_ladder(config, 4, threads)?;
    output::write_csv(
        &out_dir.join("convergence.csv"),
        &["cells", "dt", "err_v", "err_p", "err_u", "overflow_share"],
        rungs.iter().map(|r| vec![r.cells as f64, r.dt, r.err_v, r.err_p, r.err_u, r.overflow_share]),
    )?;
    let errs_v: Vec<f64> = rungs.iter().map(|r| r.err_v).collect();
    let errs_p: Vec<f64> = rungs.iter().map(|r| r.err_p).collect();
    let errs_u: Vec<f64> = rungs.iter().map(|r| r.err_u).collect();
    output::write_json(
        &out_dir.join("convergence.json"),
        &serde_json::json!({
            "order_v": empirical_order(&errs_v),
            "order_p": empirical_order(&errs_p),
            "order_u": empirical_order(&errs_u),
        }),
    )
}
