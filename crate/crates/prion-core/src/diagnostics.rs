//! Distance diagnostics between polymer densities: the tail primitive, its
//! weighted L1 norm, weak-form residuals of stored trajectories, and an
//! empirical stability probe for uniqueness.

use crate::grid::Grid;
use crate::hypothesis::WeightFunction;
use crate::integrator::{simulate, SimOptions, Trajectory};
use crate::kernels::RateSet;
use crate::numeric::{linear_fit, CompensatedSum};
use crate::operators::Discretization;
use crate::{Error, Result};
use rand::Rng;
use std::sync::Arc;

/// Tail primitive of a density difference: at each cell edge, the integral
/// of `u1 - u2` from that edge to the truncation boundary. Exact for
/// cell-averaged data, assembled right to left so the left-most value is the
/// polymer-number difference in the same summation order.
pub fn tail_primitive(u1: &[f64], u2: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    let n = grid.len();
    if u1.len() != n || u2.len() != n {
        return Err(Error::GridMismatch(format!(
            "density lengths {} and {} do not match the grid ({n})",
            u1.len(),
            u2.len()
        )));
    }
    let mut tail = vec![0.0; n + 1];
    let mut acc = CompensatedSum::new();
    for i in (0..n).rev() {
        acc.add((u1[i] - u2[i]) * grid.widths[i]);
        tail[i] = acc.value();
    }
    Ok(tail)
}

/// Weighted L1 norm of an edge-valued tail primitive by edge-midpoint
/// quadrature: `sum_i g(y_i) |(E_i + E_{i+1}) / 2| dy_i`.
pub fn weighted_norm(tail: &[f64], grid: &Grid, weight: &WeightFunction) -> f64 {
    let mut acc = CompensatedSum::new();
    for i in 0..grid.len() {
        let mid = 0.5 * (tail[i] + tail[i + 1]);
        acc.add(weight.g(grid.centers[i]) * mid.abs() * grid.widths[i]);
    }
    acc.value()
}

/// Weighted distance between two densities on a shared grid.
#[derive(Debug, Clone)]
pub struct WeightedDistance {
    pub weight_exponent: f64,
    pub value: f64,
    /// Tail primitive at the cell edges.
    pub tail: Vec<f64>,
}

pub fn weighted_distance(u1: &[f64], u2: &[f64], grid: &Grid, weight: &WeightFunction) -> Result<WeightedDistance> {
    let tail = tail_primitive(u1, u2, grid)?;
    Ok(WeightedDistance {
        weight_exponent: weight.exponent,
        value: weighted_norm(&tail, grid, weight),
        tail,
    })
}

/// Residual of the weak identity along a stored trajectory for one per-cell
/// test vector, one value per output time.
///
/// Both sides use the scheme's own discrete pairings (fluxes, deposit
/// interpolation), so the residual isolates the time-integration error of
/// the trajectory against trapezoidal time quadrature; the pairings
/// themselves are validated against the operators in the test suite.
pub fn weak_form_residual(traj: &Trajectory, phi: &[f64]) -> Result<Vec<f64>> {
    let disc: &Discretization = &traj.disc;
    let n = disc.len();
    if phi.len() != n {
        return Err(Error::GridMismatch(format!(
            "test vector has {} entries, grid has {n}",
            phi.len()
        )));
    }
    let nu = traj.rates.nu;
    let split_coeffs = disc.split_weak_coeffs(phi);
    let join_coeffs = disc.join_weak_coeffs(phi);
    let inner = |u: &[f64]| -> f64 {
        let mut acc = CompensatedSum::new();
        for i in 0..n {
            acc.add(phi[i] * u[i] * disc.grid.widths[i]);
        }
        acc.value()
    };

    let mut rates_of_change = Vec::with_capacity(traj.times.len());
    for (k, state) in traj.states.iter().enumerate() {
        let u = &state.u;
        let speed = state.v / (1.0 + nu * traj.moments[k].mass);
        let transport = speed * disc.transport_weak(phi, u);
        let mut degradation = CompensatedSum::new();
        for i in 0..n {
            degradation.add(phi[i] * disc.mu()[i] * u[i] * disc.grid.widths[i]);
        }
        let splitting: f64 = split_coeffs.iter().zip(u.iter()).map(|(c, u)| c * u).sum();
        let joining = disc.pair_sum(&join_coeffs, u);
        rates_of_change.push(transport - degradation.value() + splitting + joining);
    }

    let inner0 = inner(&traj.states[0].u);
    let mut residuals = Vec::with_capacity(traj.times.len());
    let mut integral = 0.0;
    let mut integral_abs = 0.0;
    let mut inner_scale = inner0.abs();
    for k in 0..traj.times.len() {
        if k > 0 {
            let h = traj.times[k] - traj.times[k - 1];
            integral += 0.5 * h * (rates_of_change[k] + rates_of_change[k - 1]);
            integral_abs += 0.5 * h * (rates_of_change[k].abs() + rates_of_change[k - 1].abs());
        }
        let lhs = inner(&traj.states[k].u) - inner0;
        inner_scale = inner_scale.max((lhs + inner0).abs());
        let denom = (inner_scale + integral_abs).max(f64::MIN_POSITIVE);
        residuals.push((lhs - integral).abs() / denom);
    }
    Ok(residuals)
}

/// Bounded piecewise-linear test vector with a handful of random knots,
/// values in [-1, 1].
pub fn random_test_vector(grid: &Grid, rng: &mut impl Rng) -> Vec<f64> {
    let knots = rng.gen_range(3usize..8);
    let mut xs: Vec<f64> = (0..knots)
        .map(|_| rng.gen_range(grid.y0..grid.ymax))
        .collect();
    xs.sort_by(f64::total_cmp);
    let vals: Vec<f64> = (0..knots).map(|_| rng.gen_range(-1.0..1.0)).collect();
    grid.centers
        .iter()
        .map(|&y| {
            if y <= xs[0] {
                vals[0]
            } else if y >= xs[knots - 1] {
                vals[knots - 1]
            } else {
                let i = xs.partition_point(|&x| x <= y) - 1;
                let t = (y - xs[i]) / (xs[i + 1] - xs[i]);
                vals[i] + t * (vals[i + 1] - vals[i])
            }
        })
        .collect()
}

/// Fixed perturbation shape of the uniqueness probe: a unit-number bump
/// centered at `8 y0` with width `2 y0`, normalized on the given grid.
/// The center sits where splitting is already active, so the perturbation
/// contracts from the start instead of idling through a slow transient that
/// would break the fitted exponential envelope.
pub fn probe_bump(grid: &Grid) -> Vec<f64> {
    let center = 8.0 * grid.y0;
    let width = 2.0 * grid.y0;
    let mut bump: Vec<f64> = grid
        .centers
        .iter()
        .map(|&y| (-(y - center) * (y - center) / (2.0 * width * width)).exp())
        .collect();
    let number: f64 = bump.iter().zip(&grid.widths).map(|(b, w)| b * w).sum();
    for b in &mut bump {
        *b /= number;
    }
    bump
}

/// Outcome of the empirical uniqueness probe.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub epsilon: f64,
    pub weight_exponent: f64,
    pub times: Vec<f64>,
    /// Weighted distance `D(t)` between the perturbed and reference runs.
    pub distance: Vec<f64>,
    /// Fitted exponential rate `c` in `log D(t) = log D(0) + c t`.
    pub fitted_rate: f64,
    pub d0: f64,
    /// Largest ratio `D(t) / (D(0) exp(c t))` along the run.
    pub max_bound_ratio: f64,
    /// True when the fitted envelope holds pointwise within 5 percent.
    pub bound_holds: bool,
}

/// Runs the system twice, from `u0` and from `u0 + epsilon * bump`, and
/// tracks the weighted distance between the runs. The distance includes the
/// overflow difference as a tail contribution at the boundary.
pub fn uniqueness_probe(
    disc: &Arc<Discretization>,
    rates: &RateSet,
    v0: f64,
    u0: &[f64],
    opts: &SimOptions,
    epsilon: f64,
    weight: &WeightFunction,
) -> Result<ProbeReport> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "perturbation size must be positive, got {epsilon}; a zero perturbation makes the probe degenerate"
        )));
    }
    let bump = probe_bump(&disc.grid);
    let mut u0_pert = u0.to_vec();
    for (u, b) in u0_pert.iter_mut().zip(&bump) {
        *u += epsilon * b;
    }
    let base = simulate(disc, rates, v0, u0.to_vec(), opts)?;
    let pert = simulate(disc, rates, v0, u0_pert, opts)?;
    distance_series(&pert, &base, weight, epsilon)
}

fn distance_series(
    pert: &Trajectory,
    base: &Trajectory,
    weight: &WeightFunction,
    epsilon: f64,
) -> Result<ProbeReport> {
    let grid = &base.disc.grid;
    let mut distance = Vec::with_capacity(base.times.len());
    for k in 0..base.times.len() {
        let mut tail = tail_primitive(&pert.states[k].u, &base.states[k].u, grid)?;
        // the unresolved tail past the boundary, as a number density at ymax
        let beyond = (pert.states[k].ledger.overflow - base.states[k].ledger.overflow) / grid.ymax;
        for e in &mut tail {
            *e += beyond;
        }
        distance.push(weighted_norm(&tail, grid, weight));
    }
    let d0 = distance[0];
    if !(d0 > 0.0) {
        return Err(Error::invalid("probe distance vanished at t = 0"));
    }
    let logs: Vec<f64> = distance.iter().map(|d| d.max(f64::MIN_POSITIVE).ln()).collect();
    let (_, rate) = linear_fit(&base.times, &logs);
    let mut max_ratio: f64 = 0.0;
    for (k, &d) in distance.iter().enumerate() {
        let bound = d0 * (rate * base.times[k]).exp();
        max_ratio = max_ratio.max(d / bound);
    }
    Ok(ProbeReport {
        epsilon,
        weight_exponent: weight.exponent,
        times: base.times.clone(),
        distance,
        fitted_rate: rate,
        d0,
        max_bound_ratio: max_ratio,
        bound_holds: max_ratio <= 1.05,
    })
}

/// Conservative restriction of a fine-grid density to a 2x coarser uniform
/// grid: pairwise width-weighted averaging.
pub fn coarsen_pairwise(u_fine: &[f64], fine: &Grid, coarse: &Grid) -> Result<Vec<f64>> {
    if u_fine.len() != fine.len() || fine.len() != 2 * coarse.len() {
        return Err(Error::GridMismatch("fine grid must have exactly twice the coarse cell count".into()));
    }
    Ok((0..coarse.len())
        .map(|i| {
            (u_fine[2 * i] * fine.widths[2 * i] + u_fine[2 * i + 1] * fine.widths[2 * i + 1])
                / coarse.widths[i]
        })
        .collect())
}

/// Distance at the final time between two runs of the same configuration on
/// grids with `n` and `2 n` cells, evaluated on the coarse grid after
/// conservative restriction. Shrinks with the mesh when the discrete
/// solutions contract toward a common limit.
pub fn cross_grid_distance(
    rates: &RateSet,
    v0: f64,
    initial: impl Fn(f64) -> f64,
    y0: f64,
    ymax: f64,
    n: usize,
    opts: &SimOptions,
    weight: &WeightFunction,
) -> Result<f64> {
    let coarse_grid = Grid::uniform(y0, ymax, n)?;
    let fine_grid = Grid::uniform(y0, ymax, 2 * n)?;
    let coarse = Arc::new(Discretization::new(coarse_grid, rates)?);
    let fine = Arc::new(Discretization::new(fine_grid, rates)?);
    let u0_coarse: Vec<f64> = coarse.grid.centers.iter().map(|&y| initial(y)).collect();
    let u0_fine: Vec<f64> = fine.grid.centers.iter().map(|&y| initial(y)).collect();

    // both runs use the same step: the time error sits orders below the
    // mesh contribution this distance measures
    let run_coarse = simulate(&coarse, rates, v0, u0_coarse, opts)?;
    let run_fine = simulate(&fine, rates, v0, u0_fine, opts)?;

    let u_last_fine = &run_fine.states.last().unwrap().u;
    let restricted = coarsen_pairwise(u_last_fine, &fine.grid, &coarse.grid)?;
    let mut tail = tail_primitive(&restricted, &run_coarse.states.last().unwrap().u, &coarse.grid)?;
    let beyond = (run_fine.states.last().unwrap().ledger.overflow
        - run_coarse.states.last().unwrap().ledger.overflow)
        / coarse.grid.ymax;
    for e in &mut tail {
        *e += beyond;
    }
    Ok(weighted_norm(&tail, &coarse.grid, weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{Scheme, StepSize};
    use crate::kernels::{make_power_law_rates, K0Profile, PowerLawParams, Scalars};
    use crate::numeric::csum;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn grid() -> Grid {
        Grid::uniform(1.0, 21.0, 40).unwrap()
    }

    fn unit_weight() -> WeightFunction {
        WeightFunction { exponent: 0.0, y0: 1.0 }
    }

    fn rand_u(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0.0..2.0)).collect()
    }

    #[test]
    fn tail_of_equal_densities_is_zero() {
        let g = grid();
        let u = rand_u(40, 1);
        let tail = tail_primitive(&u, &u, &g).unwrap();
        assert!(tail.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn tail_of_a_single_cell_indicator_is_a_step() {
        let g = grid();
        let mut u1 = vec![0.0; 40];
        u1[10] = 3.0; // height h, width 0.5 -> mass 1.5
        let u2 = vec![0.0; 40];
        let tail = tail_primitive(&u1, &u2, &g).unwrap();
        for (k, &e) in tail.iter().enumerate() {
            if k <= 10 {
                assert_relative_eq!(e, 1.5);
            } else {
                assert_eq!(e, 0.0);
            }
        }
    }

    #[test]
    fn tail_at_the_left_edge_is_the_number_difference() {
        let g = grid();
        let (u1, u2) = (rand_u(40, 2), rand_u(40, 3));
        let tail = tail_primitive(&u1, &u2, &g).unwrap();
        // same right-to-left compensated order as the implementation
        let p_diff = csum((0..40).rev().map(|i| (u1[i] - u2[i]) * g.widths[i]));
        assert_eq!(tail[0].to_bits(), p_diff.to_bits());
    }

    #[test]
    fn tail_integral_relates_moment_and_number_differences() {
        // Fubini on the discrete sums: integral of E equals the first-moment
        // difference minus y0 times the number difference
        let g = grid();
        let (u1, u2) = (rand_u(40, 4), rand_u(40, 5));
        let tail = tail_primitive(&u1, &u2, &g).unwrap();
        let int_e = csum((0..40).map(|i| 0.5 * (tail[i] + tail[i + 1]) * g.widths[i]));
        let m1 = csum((0..40).map(|i| g.centers[i] * (u1[i] - u2[i]) * g.widths[i]));
        let p = csum((0..40).map(|i| (u1[i] - u2[i]) * g.widths[i]));
        assert_relative_eq!(int_e, m1 - 1.0 * p, max_relative = 1e-12);
    }

    #[test]
    fn tail_is_antisymmetric_and_distance_homogeneous() {
        let g = grid();
        let (u1, u2) = (rand_u(40, 6), rand_u(40, 7));
        let a = tail_primitive(&u1, &u2, &g).unwrap();
        let b = tail_primitive(&u2, &u1, &g).unwrap();
        for (x, y) in a.iter().zip(&b) {
            // +0.0 normalizes the signed zero at the right boundary
            assert_eq!((x + 0.0).to_bits(), (-y + 0.0).to_bits());
        }
        // scaling the difference by a power of two scales the norm exactly
        let w = unit_weight();
        let d1 = weighted_norm(&a, &g, &w);
        let scaled: Vec<f64> = a.iter().map(|e| 4.0 * e).collect();
        assert_eq!(weighted_norm(&scaled, &g, &w).to_bits(), (4.0 * d1).to_bits());
    }

    #[test]
    fn distance_separates_points() {
        let g = grid();
        let u1 = rand_u(40, 8);
        let mut u2 = u1.clone();
        assert_eq!(weighted_distance(&u1, &u2, &g, &unit_weight()).unwrap().value, 0.0);
        u2[17] += 1e-9;
        assert!(weighted_distance(&u1, &u2, &g, &unit_weight()).unwrap().value > 0.0);
    }

    #[test]
    fn incompatible_grids_are_rejected() {
        let g = grid();
        assert!(tail_primitive(&vec![0.0; 39], &vec![0.0; 40], &g).is_err());
    }

    fn small_run(n: usize, every: f64) -> Trajectory {
        let p = PowerLawParams {
            beta_coef: 1.0,
            beta_exp: 1.0,
            mu_coef: 1.0,
            mu_exp: 0.0,
            tau_coef: 1.0,
            tau_exp: 0.0,
            eta_const: 1.0,
        };
        let s = Scalars { lambda: 1.0, gamma: 1.0, nu: 0.0, y0: 1.0 };
        let rates = make_power_law_rates(&p, &s, K0Profile::Uniform).unwrap();
        let disc = Arc::new(
            Discretization::new(Grid::uniform(1.0, 40.0, n).unwrap(), &rates).unwrap(),
        );
        let u0: Vec<f64> = disc
            .grid
            .centers
            .iter()
            .map(|&y| (-(y - 2.5) * (y - 2.5) / 2.0).exp())
            .collect();
        let opts = SimOptions {
            horizon: 1.0,
            step: StepSize::Fixed(1e-3),
            scheme: Scheme::Rk4,
            output_every: every,
            moment_orders: vec![],
        };
        simulate(&disc, &rates, 1.0, u0, &opts).unwrap()
    }

    #[test]
    fn weak_residual_vanishes_for_zero_test_vector() {
        let traj = small_run(64, 0.1);
        let res = weak_form_residual(&traj, &vec![0.0; 64]).unwrap();
        assert!(res.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn weak_residual_is_small_and_second_order_in_cadence() {
        // the residual against trapezoidal time quadrature shrinks at second
        // order in the output cadence
        let worst_at = |every: f64| {
            let traj = small_run(64, every);
            let res = weak_form_residual(&traj, &vec![1.0; 64]).unwrap();
            res.iter().cloned().fold(0.0f64, f64::max)
        };
        let (coarse, fine) = (worst_at(0.004), worst_at(0.002));
        assert!(coarse <= 2e-5, "number-budget residual {coarse}");
        assert!(fine <= coarse / 3.0, "no cadence convergence: {coarse} vs {fine}");
    }

    #[test]
    fn weak_residual_small_for_random_bounded_vectors() {
        let traj = small_run(64, 0.002);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let phi = random_test_vector(&traj.disc.grid, &mut rng);
            assert!(phi.iter().all(|p| p.abs() <= 1.0));
            let res = weak_form_residual(&traj, &phi).unwrap();
            let worst = res.iter().cloned().fold(0.0f64, f64::max);
            assert!(worst <= 2e-5, "residual {worst}");
        }
    }

    #[test]
    fn probe_rejects_zero_perturbation() {
        let traj = small_run(32, 0.1);
        let weight = unit_weight();
        let err = uniqueness_probe(
            &traj.disc,
            &traj.rates,
            1.0,
            &traj.states[0].u,
            &SimOptions {
                horizon: 0.5,
                step: StepSize::Fixed(1e-3),
                scheme: Scheme::Rk4,
                output_every: 0.1,
                moment_orders: vec![],
            },
            0.0,
            &weight,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn probe_tracks_a_positive_distance_with_finite_rate() {
        let traj = small_run(48, 0.05);
        let weight = unit_weight();
        let report = uniqueness_probe(
            &traj.disc,
            &traj.rates,
            1.0,
            &traj.states[0].u,
            &SimOptions {
                horizon: 1.0,
                step: StepSize::Fixed(1e-3),
                scheme: Scheme::Rk4,
                output_every: 0.05,
                moment_orders: vec![],
            },
            1e-4,
            &weight,
        )
        .unwrap();
        assert!(report.d0 > 0.0);
        assert!(report.distance.iter().all(|&d| d > 0.0));
        assert!(report.fitted_rate.is_finite());
        assert!(report.bound_holds, "max ratio {}", report.max_bound_ratio);
    }

    #[test]
    fn coarsening_preserves_number_and_mass() {
        let fine = Grid::uniform(1.0, 21.0, 80).unwrap();
        let coarse = Grid::uniform(1.0, 21.0, 40).unwrap();
        let u = rand_u(80, 11);
        let r = coarsen_pairwise(&u, &fine, &coarse).unwrap();
        let number_fine: f64 = u.iter().zip(&fine.widths).map(|(u, w)| u * w).sum();
        let number_coarse: f64 = r.iter().zip(&coarse.widths).map(|(u, w)| u * w).sum();
        assert_relative_eq!(number_fine, number_coarse, max_relative = 1e-13);
        let mass_fine: f64 = u
            .iter()
            .zip(fine.centers.iter().zip(&fine.widths))
            .map(|(u, (y, w))| u * y * w)
            .sum();
        let mass_coarse: f64 = r
            .iter()
            .zip(coarse.centers.iter().zip(&coarse.widths))
            .map(|(u, (y, w))| u * y * w)
            .sum();
        // averaging within a pair can move mass by at most half a fine width
        let h_fine = fine.widths[0];
        assert!((mass_fine - mass_coarse).abs() <= 0.5 * h_fine * number_fine);
    }
}
