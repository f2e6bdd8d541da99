//! Time integration of the coupled monomer/polymer system with a
//! monomer-balance ledger.
//!
//! The ledger integrals (accumulated monomer count, accumulated degradation
//! mass, accumulated overflow) advance with the same Runge-Kutta stages as
//! the state, so the discrete balance law closes to the accuracy of the
//! spatial scheme's algebraic identities rather than to the order of a
//! separate quadrature.

use crate::operators::Discretization;
use crate::kernels::RateSet;
use crate::{Error, Result};
use std::sync::Arc;

/// Accumulated time integrals entering the monomer balance law.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Ledger {
    /// Integral of the monomer count over time.
    pub monomer_integral: f64,
    /// Integral of the degradation mass flux `sum y mu u dy` over time.
    pub degradation_integral: f64,
    /// Accumulated first moment routed past the truncation boundary.
    pub overflow: f64,
}

/// Instantaneous solver state.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    /// Free monomer count.
    pub v: f64,
    /// Cell-averaged polymer density.
    pub u: Vec<f64>,
    pub ledger: Ledger,
}

impl State {
    pub fn new(v: f64, u: Vec<f64>) -> Self {
        State { t: 0.0, v, u, ledger: Ledger::default() }
    }

    fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.ledger.monomer_integral.is_finite()
            && self.ledger.degradation_integral.is_finite()
            && self.ledger.overflow.is_finite()
            && self.u.iter().all(|x| x.is_finite())
    }
}

/// Time derivative of the full state, ledger included.
#[derive(Debug, Clone)]
pub struct Derivative {
    pub dv: f64,
    pub du: Vec<f64>,
    pub d_monomer_integral: f64,
    pub d_degradation_integral: f64,
    pub d_overflow: f64,
    /// Monomer consumption by lengthening, exposed for diagnostics.
    pub consumption: f64,
}

/// Assembles the coupled right-hand side from the three operators.
pub fn rhs(v: f64, u: &[f64], disc: &Discretization, rates: &RateSet) -> Result<Derivative> {
    if v < 0.0 {
        return Err(Error::invalid(format!("monomer count must be nonnegative, got {v}")));
    }
    let m1 = disc.mass(u);
    let split = disc.splitting(u);
    let join = disc.joining(u);
    let trans = disc.transport(u, v, rates.nu, m1)?;

    let n = disc.len();
    let mut du = trans.du;
    for i in 0..n {
        du[i] += split.du[i] + join.du[i];
    }
    let dv = rates.lambda - rates.gamma * v - trans.monomer_consumption + split.monomer_return;
    Ok(Derivative {
        dv,
        du,
        d_monomer_integral: v,
        d_degradation_integral: split.mass_degradation,
        d_overflow: trans.overflow + join.overflow,
        consumption: trans.monomer_consumption,
    })
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4,
    Euler,
}

/// Stability-style bound for the default scheme:
/// `0.4 * min(min_i dy_i / (s tau_max), 1 / L_max)` where `s` is the current
/// speed factor and `L_max` the largest per-cell loss rate
/// `mu + beta + 2 eta_max P`.
pub fn cfl_bound(v: f64, u: &[f64], disc: &Discretization, rates: &RateSet) -> f64 {
    let m1 = disc.mass(u);
    let s = v / (1.0 + rates.nu * m1);
    let tau_max = (0..disc.len())
        .map(|i| disc.grid.edges[i + 1])
        .map(|y| rates.tau.eval(y))
        .fold(0.0f64, f64::max);
    let dy_min = disc.grid.widths.iter().cloned().fold(f64::INFINITY, f64::min);
    let transport = if s * tau_max > 0.0 { dy_min / (s * tau_max) } else { f64::INFINITY };
    let p = disc.number(u).max(0.0);
    let loss = disc.loss_max + 2.0 * disc.eta_max * p;
    let reaction = if loss > 0.0 { 1.0 / loss } else { f64::INFINITY };
    0.4 * transport.min(reaction)
}

/// Largest forward-Euler step that preserves nonnegativity from the given
/// nonnegative state: the reciprocal of the largest total outflow rate over
/// all cells and the monomer pool,
/// `dt* = 1 / max( max_i [s tau(edge_i) / dy_i + mu_i + beta_i + 2 sum_j eta u_j dy_j],
///                 gamma + consumption_per_monomer )`.
pub fn euler_positive_dt(v: f64, u: &[f64], disc: &Discretization, rates: &RateSet) -> f64 {
    let m1 = disc.mass(u);
    let s = v / (1.0 + rates.nu * m1);
    let join_loss = disc.joining_loss_rates(u);
    let mut worst: f64 = 0.0;
    for i in 0..disc.len() {
        let transport = s * rates.tau.eval(disc.grid.edges[i + 1]) / disc.grid.widths[i];
        let rate = transport + disc.mu()[i] + disc.beta()[i] + join_loss[i];
        worst = worst.max(rate);
    }
    // consumption scales linearly with v; evaluate at unit monomer count
    let per_monomer = disc
        .transport(u, 1.0, rates.nu, m1)
        .map(|t| t.monomer_consumption)
        .unwrap_or(f64::INFINITY);
    worst = worst.max(rates.gamma + per_monomer);
    if worst > 0.0 {
        1.0 / worst
    } else {
        f64::INFINITY
    }
}

fn scheme_bound(scheme: Scheme, v: f64, u: &[f64], disc: &Discretization, rates: &RateSet) -> f64 {
    match scheme {
        Scheme::Rk4 => cfl_bound(v, u, disc, rates),
        Scheme::Euler => euler_positive_dt(v, u, disc, rates),
    }
}

/// Advances the state by one step of the selected scheme.
///
/// Steps beyond the scheme's bound are refused with the required step size
/// in the error.
pub fn step(state: &State, dt: f64, disc: &Discretization, rates: &RateSet, scheme: Scheme) -> Result<State> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("step size must be positive, got {dt}")));
    }
    let bound = scheme_bound(scheme, state.v, &state.u, disc, rates);
    if dt > bound {
        return Err(Error::CflViolation { dt, required: bound });
    }
    step_unchecked(state, dt, disc, rates, scheme)
}

fn step_unchecked(state: &State, dt: f64, disc: &Discretization, rates: &RateSet, scheme: Scheme) -> Result<State> {
    let n = state.u.len();
    let advance = |k: &Derivative, h: f64| -> (f64, Vec<f64>) {
        let v = state.v + h * k.dv;
        let u: Vec<f64> = (0..n).map(|i| state.u[i] + h * k.du[i]).collect();
        (v.max(0.0), u)
    };

    match scheme {
        Scheme::Euler => {
            let k = rhs(state.v, &state.u, disc, rates)?;
            let (v, u) = advance(&k, dt);
            Ok(State {
                t: state.t + dt,
                v,
                u,
                ledger: Ledger {
                    monomer_integral: state.ledger.monomer_integral + dt * k.d_monomer_integral,
                    degradation_integral: state.ledger.degradation_integral + dt * k.d_degradation_integral,
                    overflow: state.ledger.overflow + dt * k.d_overflow,
                },
            })
        }
        Scheme::Rk4 => {
            let k1 = rhs(state.v, &state.u, disc, rates)?;
            let (v2, u2) = advance(&k1, 0.5 * dt);
            let k2 = rhs(v2, &u2, disc, rates)?;
            let (v3, u3) = advance(&k2, 0.5 * dt);
            let k3 = rhs(v3, &u3, disc, rates)?;
            let (v4, u4) = advance(&k3, dt);
            let k4 = rhs(v4, &u4, disc, rates)?;

            let w = dt / 6.0;
            let mut u = Vec::with_capacity(n);
            for i in 0..n {
                u.push(state.u[i] + w * (k1.du[i] + 2.0 * k2.du[i] + 2.0 * k3.du[i] + k4.du[i]));
            }
            let combine = |a: f64, b: f64, c: f64, d: f64| a + 2.0 * b + 2.0 * c + d;
            Ok(State {
                t: state.t + dt,
                v: (state.v + w * combine(k1.dv, k2.dv, k3.dv, k4.dv)).max(0.0),
                u,
                ledger: Ledger {
                    monomer_integral: state.ledger.monomer_integral
                        + w * combine(
                            k1.d_monomer_integral,
                            k2.d_monomer_integral,
                            k3.d_monomer_integral,
                            k4.d_monomer_integral,
                        ),
                    degradation_integral: state.ledger.degradation_integral
                        + w * combine(
                            k1.d_degradation_integral,
                            k2.d_degradation_integral,
                            k3.d_degradation_integral,
                            k4.d_degradation_integral,
                        ),
                    overflow: state.ledger.overflow
                        + w * combine(k1.d_overflow, k2.d_overflow, k3.d_overflow, k4.d_overflow),
                },
            })
        }
    }
}

/// Step-size selection.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    /// Fixed step; output times align with step multiples.
    Fixed(f64),
    /// Fraction of the scheme bound, re-evaluated each step.
    CflFraction(f64),
}

/// Moments recorded at one output time.
#[derive(Debug, Clone)]
pub struct MomentRecord {
    /// Polymer number `P`.
    pub number: f64,
    /// Polymerized mass `M1`.
    pub mass: f64,
    /// Generalized moments for the configured orders.
    pub higher: Vec<f64>,
}

/// Simulation output: sampled states, moment records, and the balance
/// residual series, plus everything needed for post-processing.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub disc: Arc<Discretization>,
    pub rates: RateSet,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub moments: Vec<MomentRecord>,
    /// Normalized balance defect at each output time.
    pub balance_residuals: Vec<f64>,
    pub moment_orders: Vec<f64>,
}

/// Drives a full run.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub horizon: f64,
    pub step: StepSize,
    pub scheme: Scheme,
    /// Output cadence in time units; rounded to the nearest step multiple
    /// for fixed stepping.
    pub output_every: f64,
    pub moment_orders: Vec<f64>,
}

/// Runs the coupled system from `(v0, u0)` and samples the trajectory.
///
/// Deterministic: identical inputs produce bitwise-identical trajectories.
/// Aborts with the last valid time when the state leaves the finite range.
pub fn simulate(
    disc: &Arc<Discretization>,
    rates: &RateSet,
    v0: f64,
    u0: Vec<f64>,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if u0.len() != disc.len() {
        return Err(Error::GridMismatch(format!(
            "initial density has {} cells, grid has {}",
            u0.len(),
            disc.len()
        )));
    }
    if !(opts.horizon > 0.0) {
        return Err(Error::invalid("time horizon must be positive"));
    }
    if !(opts.output_every > 0.0) {
        return Err(Error::invalid("output cadence must be positive"));
    }

    let mut traj = Trajectory {
        disc: Arc::clone(disc),
        rates: rates.clone(),
        times: Vec::new(),
        states: Vec::new(),
        moments: Vec::new(),
        balance_residuals: Vec::new(),
        moment_orders: opts.moment_orders.clone(),
    };
    let mut state = State::new(v0, u0);
    let v_init = state.v;
    let mass_init = disc.mass(&state.u);

    let record = |state: &State, traj: &mut Trajectory| {
        traj.times.push(state.t);
        traj.moments.push(MomentRecord {
            number: disc.number(&state.u),
            mass: disc.mass(&state.u),
            higher: opts.moment_orders.iter().map(|&o| disc.moment(&state.u, o)).collect(),
        });
        traj.balance_residuals.push(balance_defect(state, disc, rates, v_init, mass_init));
        traj.states.push(state.clone());
    };
    record(&state, &mut traj);

    match opts.step {
        StepSize::Fixed(dt) => {
            if !(dt > 0.0) {
                return Err(Error::invalid("fixed step size must be positive"));
            }
            let n_steps = (opts.horizon / dt).round().max(1.0) as u64;
            let output_stride = (opts.output_every / dt).round().max(1.0) as u64;
            for k in 1..=n_steps {
                state = step(&state, dt, disc, rates, opts.scheme)?;
                if !state.is_finite() {
                    return Err(Error::NonFinite {
                        t: state.t,
                        context: format!(
                            "aborting; last valid state at t = {:.6} had v = {:.6e}",
                            traj.times.last().unwrap(),
                            traj.states.last().unwrap().v
                        ),
                    });
                }
                if k % output_stride == 0 || k == n_steps {
                    record(&state, &mut traj);
                }
            }
        }
        StepSize::CflFraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid("step fraction must lie in (0, 1]"));
            }
            let mut next_output = opts.output_every.min(opts.horizon);
            while state.t < opts.horizon {
                let bound = scheme_bound(opts.scheme, state.v, &state.u, disc, rates);
                let mut dt = f * bound;
                if !dt.is_finite() || dt <= 0.0 {
                    dt = opts.output_every;
                }
                dt = dt.min(next_output - state.t).max(1e-14 * opts.horizon);
                state = step_unchecked(&state, dt, disc, rates, opts.scheme)?;
                if !state.is_finite() {
                    return Err(Error::NonFinite {
                        t: state.t,
                        context: format!("aborting; last valid time {:.6}", traj.times.last().unwrap()),
                    });
                }
                if state.t >= next_output - 1e-12 * opts.horizon {
                    record(&state, &mut traj);
                    next_output = (next_output + opts.output_every).min(opts.horizon);
                    if traj.times.last().copied().unwrap_or(0.0) >= opts.horizon - 1e-12 * opts.horizon {
                        break;
                    }
                }
            }
        }
    }
    Ok(traj)
}

fn balance_defect(state: &State, disc: &Discretization, rates: &RateSet, v_init: f64, mass_init: f64) -> f64 {
    let holdings = state.v + disc.mass(&state.u) + state.ledger.overflow - v_init - mass_init;
    let exchange = rates.lambda * state.t
        - rates.gamma * state.ledger.monomer_integral
        - state.ledger.degradation_integral;
    (holdings - exchange).abs() / (v_init + mass_init + rates.lambda * state.t).max(f64::MIN_POSITIVE)
}

/// Normalized monomer-balance defect series of a trajectory:
/// `|v + M1 + overflow - v0 - M1(0) - (lambda t - gamma int v - int deg)|`
/// over `v0 + M1(0) + lambda t`.
pub fn balance_residual(traj: &Trajectory) -> Vec<f64> {
    let v_init = traj.states[0].v;
    let mass_init = traj.moments[0].mass;
    traj.states
        .iter()
        .map(|s| balance_defect(s, &traj.disc, &traj.rates, v_init, mass_init))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernels::{make_power_law_rates, K0Profile, PowerLawParams, Scalars};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn family(lambda: f64, gamma: f64, mu: f64, eta: f64, nu: f64) -> RateSet {
        let p = PowerLawParams {
            beta_coef: 1.0,
            beta_exp: 1.0,
            mu_coef: mu,
            mu_exp: 0.0,
            tau_coef: 1.0,
            tau_exp: 0.0,
            eta_const: eta,
        };
        let s = Scalars { lambda, gamma, nu, y0: 1.0 };
        make_power_law_rates(&p, &s, K0Profile::Uniform).unwrap()
    }

    fn setup(rates: &RateSet, n: usize) -> Arc<Discretization> {
        Arc::new(Discretization::new(Grid::uniform(1.0, 40.0, n).unwrap(), rates).unwrap())
    }

    fn bump(disc: &Discretization, center: f64, width: f64, amp: f64) -> Vec<f64> {
        disc.grid
            .centers
            .iter()
            .map(|&y| amp * (-(y - center) * (y - center) / (2.0 * width * width)).exp())
            .collect()
    }

    #[test]
    fn rhs_with_no_polymers_is_the_scalar_monomer_ode() {
        let rates = family(1.0, 0.5, 1.0, 1.0, 0.0);
        let disc = setup(&rates, 32);
        let d = rhs(1.0, &vec![0.0; 32], &disc, &rates).unwrap();
        assert_relative_eq!(d.dv, 0.5);
        assert!(d.du.iter().all(|&x| x == 0.0));
        assert!(rhs(-0.5, &vec![0.0; 32], &disc, &rates).is_err());
    }

    #[test]
    fn rhs_satisfies_the_differentiated_balance_law() {
        for nu in [0.0, 1.0] {
            let rates = family(1.0, 1.0, 1.0, 1.0, nu);
            let disc = setup(&rates, 96);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
            for _ in 0..20 {
                let u: Vec<f64> = (0..96).map(|_| rng.gen_range(0.0..2.0)).collect();
                let v = rng.gen_range(0.0..3.0);
                let d = rhs(v, &u, &disc, &rates).unwrap();
                let dmass: f64 = (0..96)
                    .map(|i| disc.grid.centers[i] * d.du[i] * disc.grid.widths[i])
                    .sum();
                let lhs = d.dv + dmass + d.d_overflow;
                let rhs_val = rates.lambda - rates.gamma * v - d.d_degradation_integral;
                assert!(
                    (lhs - rhs_val).abs() <= 1e-12 * (lhs.abs() + rhs_val.abs() + 1.0),
                    "balance defect {} at nu = {nu}",
                    lhs - rhs_val
                );
            }
        }
    }

    #[test]
    fn saturation_suppresses_consumption_monotonically() {
        let rates0 = family(1.0, 1.0, 1.0, 1.0, 0.0);
        let disc = setup(&rates0, 64);
        let u = bump(&disc, 3.0, 1.0, 1.0);
        let mut last = f64::INFINITY;
        for nu in [0.0, 0.5, 1.0, 4.0, 16.0] {
            let rates = family(1.0, 1.0, 1.0, 1.0, nu);
            let d = rhs(1.0, &u, &disc, &rates).unwrap();
            assert!(d.consumption <= last + 1e-15);
            last = d.consumption;
        }
    }

    #[test]
    fn step_is_consistent_with_rhs() {
        let rates = family(1.0, 0.5, 0.5, 0.5, 1.0);
        let disc = setup(&rates, 48);
        let state = State::new(1.0, bump(&disc, 3.0, 1.0, 1.0));
        let base = rhs(state.v, &state.u, &disc, &rates).unwrap();
        let err_at = |dt: f64, scheme: Scheme| {
            let next = step(&state, dt, &disc, &rates, scheme).unwrap();
            let mut worst = ((next.v - state.v) / dt - base.dv).abs();
            for i in 0..48 {
                worst = worst.max(((next.u[i] - state.u[i]) / dt - base.du[i]).abs());
            }
            worst
        };
        // the Euler difference quotient is the right-hand side by
        // construction, up to rounding amplified by 1/dt
        assert!(err_at(1e-3, Scheme::Euler) <= 1e-10);
        // for the multi-stage scheme the quotient deviates at first order;
        // Richardson halving
        let (e1, e2) = (err_at(1e-3, Scheme::Rk4), err_at(5e-4, Scheme::Rk4));
        assert!(e2 > 0.0, "difference quotient degenerate");
        let ratio = e1 / e2;
        assert!((1.6..=2.4).contains(&ratio), "not first order: {e1} / {e2} = {ratio}");
    }

    #[test]
    fn conservative_run_preserves_total_monomers() {
        // lambda = gamma = 0 and mu = 0: v + M1 + overflow constant
        let rates = family(0.0, 0.0, 0.0, 1.0, 0.0);
        let disc = setup(&rates, 64);
        let u0 = bump(&disc, 3.0, 1.0, 1.0);
        let opts = SimOptions {
            horizon: 1.0,
            step: StepSize::Fixed(1e-3),
            scheme: Scheme::Euler,
            output_every: 0.1,
            moment_orders: vec![],
        };
        let traj = simulate(&disc, &rates, 1.0, u0, &opts).unwrap();
        let total0 = traj.states[0].v + traj.moments[0].mass;
        for (i, s) in traj.states.iter().enumerate() {
            let total = s.v + traj.moments[i].mass + s.ledger.overflow;
            assert!(
                (total - total0).abs() <= 1e-10 * total0,
                "drift {} at t = {}",
                total - total0,
                s.t
            );
        }
    }

    #[test]
    fn monomer_only_run_matches_the_analytic_solution() {
        let rates = family(2.0, 0.8, 0.0, 0.0, 0.0);
        let disc = setup(&rates, 16);
        let opts = SimOptions {
            horizon: 3.0,
            step: StepSize::Fixed(1e-3),
            scheme: Scheme::Rk4,
            output_every: 0.5,
            moment_orders: vec![],
        };
        let v0 = 0.3;
        let traj = simulate(&disc, &rates, v0, vec![0.0; 16], &opts).unwrap();
        for (i, &t) in traj.times.iter().enumerate() {
            let exact = 2.0 / 0.8 + (v0 - 2.0 / 0.8) * (-0.8 * t).exp();
            assert!(
                (traj.states[i].v - exact).abs() <= 1e-8 * exact,
                "v({t}) = {} vs {exact}",
                traj.states[i].v
            );
            assert!(traj.moments[i].mass == 0.0);
        }
    }

    #[test]
    fn oversized_steps_are_refused_with_the_required_bound() {
        let rates = family(1.0, 1.0, 1.0, 1.0, 0.0);
        let disc = setup(&rates, 32);
        let state = State::new(1.0, bump(&disc, 3.0, 1.0, 1.0));
        let err = step(&state, 1e3, &disc, &rates, Scheme::Rk4).unwrap_err();
        match err {
            Error::CflViolation { dt, required } => {
                assert_eq!(dt, 1e3);
                assert!(required < 1e3 && required > 0.0);
            }
            other => panic!("expected a step-bound refusal, got {other:?}"),
        }
    }

    #[test]
    fn trajectories_are_deterministic_and_cadence_independent() {
        let rates = family(1.0, 1.0, 1.0, 1.0, 1.0);
        let disc = setup(&rates, 48);
        let u0 = bump(&disc, 3.0, 1.0, 1.0);
        let mk = |every: f64| SimOptions {
            horizon: 0.5,
            step: StepSize::Fixed(1e-3),
            scheme: Scheme::Rk4,
            output_every: every,
            moment_orders: vec![2.0],
        };
        let a = simulate(&disc, &rates, 1.0, u0.clone(), &mk(0.1)).unwrap();
        let b = simulate(&disc, &rates, 1.0, u0.clone(), &mk(0.1)).unwrap();
        assert_eq!(a.states.last().unwrap(), b.states.last().unwrap());

        // halving the cadence must not change the states at shared times
        let c = simulate(&disc, &rates, 1.0, u0, &mk(0.05)).unwrap();
        for (i, &t) in a.times.iter().enumerate() {
            let j = c.times.iter().position(|&tc| tc == t).expect("shared output time");
            assert_eq!(a.states[i].v.to_bits(), c.states[j].v.to_bits());
            for (x, y) in a.states[i].u.iter().zip(&c.states[j].u) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn euler_under_the_positivity_bound_stays_nonnegative() {
        let rates = family(1.0, 0.5, 1.0, 1.0, 0.5);
        let disc = setup(&rates, 32);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let mut state = State::new(
                rng.gen_range(0.0..2.0),
                (0..32).map(|_| rng.gen_range(0.0..2.0)).collect(),
            );
            for _ in 0..200 {
                let dt = euler_positive_dt(state.v, &state.u, &disc, &rates);
                state = step(&state, dt, &disc, &rates, Scheme::Euler).unwrap();
                assert!(state.v >= 0.0);
                assert!(state.u.iter().all(|&x| x >= 0.0), "negative density at t = {}", state.t);
            }
        }
    }

    #[test]
    fn euler_balance_residual_is_also_at_rounding_level() {
        // the ledger advances with the same stages as the state, so the
        // balance defect cancels algebraically for every scheme; nothing is
        // left for a step-size study to measure
        let rates = family(1.0, 1.0, 1.0, 1.0, 0.0);
        let disc = setup(&rates, 64);
        let u0 = bump(&disc, 3.0, 1.0, 1.0);
        let opts = SimOptions {
            horizon: 1.0,
            step: StepSize::Fixed(1e-3),
            scheme: Scheme::Euler,
            output_every: 0.1,
            moment_orders: vec![],
        };
        let traj = simulate(&disc, &rates, 1.0, u0, &opts).unwrap();
        let worst = balance_residual(&traj).into_iter().fold(0.0f64, f64::max);
        assert!(worst <= 1e-11, "Euler balance residual {worst}");
    }

    #[test]
    fn diverging_states_abort_with_the_last_valid_time() {
        // negative density drives the joining term into quadratic blow-up;
        // the run must abort with a finite last-valid time instead of
        // emitting non-finite output
        let rates = family(0.0, 0.0, 0.0, 1.0, 0.0);
        let disc = setup(&rates, 24);
        let opts = SimOptions {
            horizon: 5.0,
            step: StepSize::Fixed(1e-3),
            scheme: Scheme::Euler,
            output_every: 0.5,
            moment_orders: vec![],
        };
        match simulate(&disc, &rates, 0.0, vec![-1e150; 24], &opts) {
            Err(Error::NonFinite { t, .. }) => assert!(t.is_finite() && t > 0.0),
            other => panic!("expected a non-finite abort, got {other:?}"),
        }
    }

    #[test]
    fn adaptive_stepping_reaches_the_horizon() {
        let rates = family(1.0, 1.0, 1.0, 1.0, 0.0);
        let disc = setup(&rates, 32);
        let u0 = bump(&disc, 3.0, 1.0, 1.0);
        let opts = SimOptions {
            horizon: 0.5,
            step: StepSize::CflFraction(0.5),
            scheme: Scheme::Rk4,
            output_every: 0.1,
            moment_orders: vec![],
        };
        let traj = simulate(&disc, &rates, 1.0, u0, &opts).unwrap();
        assert!((traj.times.last().unwrap() - 0.5).abs() < 1e-9);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }
}
