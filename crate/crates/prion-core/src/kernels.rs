//! Reaction rates and the splitting kernel.
//!
//! The splitting kernel is restricted to the profile form
//! `kappa(z, y) = k0(z / y) / y` with a symmetric, unit-mass profile `k0` on
//! `(0, 1)`. Profiles carry exact integral primitives where the
//! representation allows it (built-in closed forms, piecewise-linear
//! tables); generic callables fall back to midpoint quadrature.

use crate::hypothesis::{HypothesisReport, Status, Witness};
use crate::numeric::midpoint_adaptive;
use crate::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Default node count for profile quadrature when no exact primitive exists.
pub const QUAD_NODES_DEFAULT: usize = 256;
/// Node cap for the error-controlled doubling of profile quadrature.
pub const QUAD_NODES_MAX: usize = 1 << 21;
/// Target absolute error of profile quadrature.
pub const QUAD_TOL: f64 = 1e-12;

/// Daughter-size profile `k0` on `(0, 1)`.
#[derive(Clone)]
pub enum K0Profile {
    /// `k0 = 1`: uniform daughter sizes.
    Uniform,
    /// `k0(x) = 6 x (1 - x)`: symmetric bump vanishing at the endpoints.
    QuadraticBump,
    /// Piecewise-linear table, extended by its end values to all of `(0, 1)`.
    Table(ProfileTable),
    /// Arbitrary callable; integrals use midpoint quadrature.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for K0Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            K0Profile::Uniform => write!(f, "Uniform"),
            K0Profile::QuadraticBump => write!(f, "QuadraticBump"),
            K0Profile::Table(t) => write!(f, "Table({} knots)", t.xs.len()),
            K0Profile::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl K0Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            K0Profile::Uniform => 1.0,
            K0Profile::QuadraticBump => 6.0 * x * (1.0 - x),
            K0Profile::Table(t) => t.eval(x),
            K0Profile::Custom(f) => f(x),
        }
    }

    /// `K(x) = integral of k0 over (0, x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            K0Profile::Uniform => x,
            K0Profile::QuadraticBump => x * x * (3.0 - 2.0 * x),
            K0Profile::Table(t) => t.partial_integral(x, Moment::Zeroth),
            K0Profile::Custom(f) => quad_profile(f, x, Moment::Zeroth),
        }
    }

    /// `integral of t * k0(t) over (0, x)`.
    pub fn first_moment(&self, x: f64) -> f64 {
        match self {
            K0Profile::Uniform => 0.5 * x * x,
            K0Profile::QuadraticBump => x * x * x * (2.0 - 1.5 * x),
            K0Profile::Table(t) => t.partial_integral(x, Moment::First),
            K0Profile::Custom(f) => quad_profile(f, x, Moment::First),
        }
    }

    /// `integral of t^2 * k0(t) over (0, x)`.
    pub fn second_moment(&self, x: f64) -> f64 {
        match self {
            K0Profile::Uniform => x * x * x / 3.0,
            K0Profile::QuadraticBump => x.powi(4) * (1.5 - 1.2 * x),
            K0Profile::Table(t) => t.partial_integral(x, Moment::Second),
            K0Profile::Custom(f) => quad_profile(f, x, Moment::Second),
        }
    }
}

#[derive(Clone, Copy)]
enum Moment {
    Zeroth,
    First,
    Second,
}

fn quad_profile(f: &Arc<dyn Fn(f64) -> f64 + Send + Sync>, x: f64, m: Moment) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let g = |t: f64| match m {
        Moment::Zeroth => f(t),
        Moment::First => t * f(t),
        Moment::Second => t * t * f(t),
    };
    midpoint_adaptive(g, 0.0, x.min(1.0), QUAD_NODES_DEFAULT, QUAD_NODES_MAX, QUAD_TOL)
}

/// Piecewise-linear profile table with exact segment integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    xs: Vec<f64>,
    vals: Vec<f64>,
}

impl ProfileTable {
    /// Knots must be strictly increasing within `[0, 1]`; values nonnegative.
    pub fn new(mut xs: Vec<f64>, mut vals: Vec<f64>) -> Result<Self> {
        if xs.len() != vals.len() || xs.len() < 2 {
            return Err(Error::invalid("profile table needs >= 2 (x, value) rows"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("profile table x column must increase strictly"));
        }
        if xs[0] < 0.0 || *xs.last().unwrap() > 1.0 {
            return Err(Error::invalid("profile table x values must lie in [0, 1]"));
        }
        if vals.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::invalid("profile table values must be finite and nonnegative"));
        }
        // Constant extension to the full interval.
        if xs[0] > 0.0 {
            xs.insert(0, 0.0);
            vals.insert(0, vals[0]);
        }
        if *xs.last().unwrap() < 1.0 {
            xs.push(1.0);
            vals.push(*vals.last().unwrap());
        }
        Ok(ProfileTable { xs, vals })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return self.vals[0];
        }
        if x >= *self.xs.last().unwrap() {
            return *self.vals.last().unwrap();
        }
        let i = self.xs.partition_point(|&k| k <= x) - 1;
        let (xa, xb) = (self.xs[i], self.xs[i + 1]);
        let (va, vb) = (self.vals[i], self.vals[i + 1]);
        va + (vb - va) * (x - xa) / (xb - xa)
    }

    /// Exact integral of `t^p * interpolant(t)` over `(0, x)`.
    fn partial_integral(&self, x: f64, m: Moment) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let mut acc = 0.0;
        for i in 0..self.xs.len() - 1 {
            let xa = self.xs[i];
            if xa >= x {
                break;
            }
            let xb = self.xs[i + 1].min(x);
            acc += segment_integral(xa, xb, self.xs[i], self.xs[i + 1], self.vals[i], self.vals[i + 1], m);
        }
        acc
    }
}

/// Integral of `t^p * (va + s (t - xa0))` over `[xa, xb]`, where the line is
/// anchored on the full segment `[xa0, xb0]`.
fn segment_integral(xa: f64, xb: f64, xa0: f64, xb0: f64, va: f64, vb: f64, m: Moment) -> f64 {
    let s = (vb - va) / (xb0 - xa0);
    let pow = |x: f64, k: i32| x.powi(k);
    let d = |k: i32| (pow(xb, k) - pow(xa, k)) / k as f64;
    match m {
        Moment::Zeroth => va * d(1) + s * (d(2) - xa0 * d(1)),
        Moment::First => va * d(2) + s * (d(3) - xa0 * d(2)),
        Moment::Second => va * d(3) + s * (d(4) - xa0 * d(3)),
    }
}

/// Scalar rate function of the polymer size.
#[derive(Clone)]
pub enum RateFn {
    /// `coef * y^exponent`.
    PowerLaw { coef: f64, exponent: f64 },
    /// Two-column `(y, value)` table with linear interpolation, constant
    /// extension outside the tabulated range.
    Table(RateTable),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for RateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFn::PowerLaw { coef, exponent } => write!(f, "{coef} * y^{exponent}"),
            RateFn::Table(t) => write!(f, "Table({} rows)", t.ys.len()),
            RateFn::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl RateFn {
    pub fn constant(c: f64) -> Self {
        RateFn::PowerLaw { coef: c, exponent: 0.0 }
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            RateFn::PowerLaw { coef, exponent } => {
                if *exponent == 0.0 {
                    *coef
                } else {
                    coef * y.powf(*exponent)
                }
            }
            RateFn::Table(t) => t.eval(y),
            RateFn::Custom(f) => f(y),
        }
    }

    /// Derivative; analytic where the representation allows, otherwise a
    /// central difference with relative step 1e-6.
    pub fn deriv(&self, y: f64) -> f64 {
        match self {
            RateFn::PowerLaw { coef, exponent } => {
                if *exponent == 0.0 {
                    0.0
                } else {
                    coef * exponent * y.powf(exponent - 1.0)
                }
            }
            RateFn::Table(t) => t.slope(y),
            RateFn::Custom(f) => {
                let h = 1e-6 * y.abs().max(1e-12);
                (f(y + h) - f(y - h)) / (2.0 * h)
            }
        }
    }
}

/// Two-column rate table.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    ys: Vec<f64>,
    vals: Vec<f64>,
}

impl RateTable {
    pub fn new(ys: Vec<f64>, vals: Vec<f64>) -> Result<Self> {
        if ys.len() != vals.len() || ys.len() < 2 {
            return Err(Error::invalid("rate table needs >= 2 (y, value) rows"));
        }
        if ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("rate table y column must increase strictly"));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("rate table values must be finite"));
        }
        Ok(RateTable { ys, vals })
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y <= self.ys[0] {
            return self.vals[0];
        }
        if y >= *self.ys.last().unwrap() {
            return *self.vals.last().unwrap();
        }
        let i = self.ys.partition_point(|&k| k <= y) - 1;
        let (ya, yb) = (self.ys[i], self.ys[i + 1]);
        let (va, vb) = (self.vals[i], self.vals[i + 1]);
        va + (vb - va) * (y - ya) / (yb - ya)
    }

    fn slope(&self, y: f64) -> f64 {
        if y <= self.ys[0] || y >= *self.ys.last().unwrap() {
            return 0.0;
        }
        let i = self.ys.partition_point(|&k| k <= y) - 1;
        (self.vals[i + 1] - self.vals[i]) / (self.ys[i + 1] - self.ys[i])
    }
}

/// Symmetric pairwise joining rate.
#[derive(Clone)]
pub enum EtaFn {
    Constant(f64),
    /// `coef * (y z)^exponent`; symmetric by construction.
    ProductPower { coef: f64, exponent: f64 },
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for EtaFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaFn::Constant(c) => write!(f, "{c}"),
            EtaFn::ProductPower { coef, exponent } => write!(f, "{coef} * (y z)^{exponent}"),
            EtaFn::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl EtaFn {
    #[inline]
    pub fn eval(&self, y: f64, z: f64) -> f64 {
        match self {
            EtaFn::Constant(c) => *c,
            EtaFn::ProductPower { coef, exponent } => coef * (y * z).powf(*exponent),
            EtaFn::Custom(f) => f(y, z),
        }
    }

    /// Partial derivative in the first argument; analytic for the built-in
    /// forms, central difference with relative step 1e-6 otherwise.
    pub fn deriv_y(&self, y: f64, z: f64) -> f64 {
        match self {
            EtaFn::Constant(_) => 0.0,
            EtaFn::ProductPower { coef, exponent } => {
                coef * exponent * y.powf(exponent - 1.0) * z.powf(*exponent)
            }
            EtaFn::Custom(f) => {
                let h = 1e-6 * y.abs().max(1e-12);
                (f(y + h, z) - f(y - h, z)) / (2.0 * h)
            }
        }
    }
}

/// The full reaction-rate description of one model instance.
#[derive(Debug, Clone)]
pub struct RateSet {
    /// Monomer background source, per unit time.
    pub lambda: f64,
    /// Monomer degradation rate, per unit time.
    pub gamma: f64,
    /// Polymerization saturation coefficient, inverse monomer count.
    pub nu: f64,
    /// Critical polymer size.
    pub y0: f64,
    /// Polymerization (lengthening) rate.
    pub tau: RateFn,
    /// Polymer degradation rate.
    pub mu: RateFn,
    /// Splitting rate.
    pub beta: RateFn,
    /// Daughter-size profile defining `kappa(z, y) = k0(z / y) / y`.
    pub k0: K0Profile,
    /// Pairwise joining rate.
    pub eta: EtaFn,
}

/// Parameters of the power-law rate family
/// `beta(y) = B y^b`, `mu(y) = M y^m`, `tau(y) = S y^theta`, `eta` constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawParams {
    pub beta_coef: f64,
    pub beta_exp: f64,
    pub mu_coef: f64,
    pub mu_exp: f64,
    pub tau_coef: f64,
    pub tau_exp: f64,
    pub eta_const: f64,
}

/// Scalar model constants shared by every rate family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scalars {
    pub lambda: f64,
    pub gamma: f64,
    pub nu: f64,
    pub y0: f64,
}

/// Builds a [`RateSet`] from power-law parameters.
///
/// Exponent bounds: splitting and degradation exponents in `[0, 2]`,
/// polymerization exponent in `[0, 1]`; all coefficients nonnegative and the
/// polymerization coefficient strictly positive.
pub fn make_power_law_rates(p: &PowerLawParams, s: &Scalars, k0: K0Profile) -> Result<RateSet> {
    if !(0.0..=2.0).contains(&p.beta_exp) {
        return Err(Error::invalid(format!(
            "splitting exponent must lie in [0, 2], got {}",
            p.beta_exp
        )));
    }
    if !(0.0..=2.0).contains(&p.mu_exp) {
        return Err(Error::invalid(format!(
            "degradation exponent must lie in [0, 2], got {}",
            p.mu_exp
        )));
    }
    if !(0.0..=1.0).contains(&p.tau_exp) {
        return Err(Error::invalid(format!(
            "polymerization exponent must lie in [0, 1], got {}",
            p.tau_exp
        )));
    }
    for (name, v) in [
        ("splitting coefficient", p.beta_coef),
        ("degradation coefficient", p.mu_coef),
        ("joining rate", p.eta_const),
        ("monomer source", s.lambda),
        ("monomer degradation", s.gamma),
        ("saturation coefficient", s.nu),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be nonnegative, got {v}")));
        }
    }
    if !(p.tau_coef > 0.0) || !p.tau_coef.is_finite() {
        return Err(Error::invalid(format!(
            "polymerization coefficient must be positive, got {}",
            p.tau_coef
        )));
    }
    if !(s.y0 > 0.0) || !s.y0.is_finite() {
        return Err(Error::invalid(format!("critical size must be positive, got {}", s.y0)));
    }
    Ok(RateSet {
        lambda: s.lambda,
        gamma: s.gamma,
        nu: s.nu,
        y0: s.y0,
        tau: RateFn::PowerLaw { coef: p.tau_coef, exponent: p.tau_exp },
        mu: RateFn::PowerLaw { coef: p.mu_coef, exponent: p.mu_exp },
        beta: RateFn::PowerLaw { coef: p.beta_coef, exponent: p.beta_exp },
        k0,
        eta: EtaFn::Constant(p.eta_const),
    })
}

/// Evaluates `kappa(z, y) = k0(z / y) / y`.
///
/// The pair must satisfy `y > y0` and `0 < z < y`.
pub fn kappa_eval(rates: &RateSet, z: f64, y: f64) -> Result<f64> {
    if !(y > rates.y0) {
        return Err(Error::invalid(format!(
            "kappa requires y > y0 = {}, got y = {y}",
            rates.y0
        )));
    }
    if !(z > 0.0 && z < y) {
        return Err(Error::invalid(format!("kappa requires 0 < z < y, got z = {z}, y = {y}")));
    }
    Ok(rates.k0.eval(z / y) / y)
}

/// Checks the structural kernel identities on a sample of sizes:
/// normalization (`int kappa dz = 1`), monomer preservation
/// (`2 int z kappa dz = y`), splitting symmetry, and joining symmetry.
///
/// Violations become report entries, never errors.
pub fn check_kernel_identities(rates: &RateSet, y_samples: &[f64], tol: f64) -> Vec<HypothesisReport> {
    let mut norm = Extremum::new();
    let mut mass = Extremum::new();
    let mut sym = Extremum::new();
    let mut eta_sym = Extremum::new();

    const Z_SAMPLES: usize = 64;
    for &y in y_samples {
        let total = rates.k0.cdf(1.0);
        norm.observe((total - 1.0).abs(), &[y]);
        let mass_rel = (2.0 * y * rates.k0.first_moment(1.0) - y).abs() / y;
        mass.observe(mass_rel, &[y]);
        for k in 0..Z_SAMPLES {
            let x = (k as f64 + 0.5) / Z_SAMPLES as f64;
            let z = x * y;
            let d = (rates.k0.eval(x) - rates.k0.eval(1.0 - x)).abs() / y;
            sym.observe(d, &[z, y]);
        }
    }
    for (i, &y) in y_samples.iter().enumerate() {
        for &z in &y_samples[i..] {
            let d = (rates.eta.eval(y, z) - rates.eta.eval(z, y)).abs();
            eta_sym.observe(d, &[y, z]);
        }
    }

    let report = |id: &str, ex: Extremum, tol: f64| {
        let mut r = HypothesisReport::new(id);
        r.status = if ex.max <= tol { Status::Pass } else { Status::Fail };
        r.constants.insert("max_deviation".into(), ex.max);
        r.witness = vec![Witness { point: ex.arg.clone(), value: ex.max }];
        r
    };
    vec![
        report("kappa_normalization", norm, tol),
        report("kappa_monomer_preservation", mass, tol),
        report("kappa_symmetry", sym, tol),
        report("eta_symmetry", eta_sym, 0.0),
    ]
}

/// Running maximum with its witness point.
#[derive(Debug, Clone)]
pub(crate) struct Extremum {
    pub max: f64,
    pub arg: Vec<f64>,
}

impl Extremum {
    pub fn new() -> Self {
        Extremum { max: f64::NEG_INFINITY, arg: Vec::new() }
    }

    #[inline]
    pub fn observe(&mut self, v: f64, at: &[f64]) {
        if v > self.max || self.arg.is_empty() {
            self.max = v;
            self.arg = at.to_vec();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::geometric_samples;
    use approx::assert_relative_eq;

    fn scalars() -> Scalars {
        Scalars { lambda: 1.0, gamma: 1.0, nu: 0.0, y0: 1.0 }
    }

    /// The constant-rate family: beta(y) = y, kappa = 1/y, everything else 1.
    pub(crate) fn constant_family() -> RateSet {
        let p = PowerLawParams {
            beta_coef: 1.0,
            beta_exp: 1.0,
            mu_coef: 1.0,
            mu_exp: 0.0,
            tau_coef: 1.0,
            tau_exp: 0.0,
            eta_const: 1.0,
        };
        make_power_law_rates(&p, &scalars(), K0Profile::Uniform).unwrap()
    }

    #[test]
    fn power_law_family_matches_closed_forms() {
        let r = constant_family();
        assert_eq!(r.beta.eval(2.0), 2.0);
        assert_eq!(r.mu.eval(17.0), 1.0);
        assert_eq!(r.tau.eval(17.0), 1.0);
        assert_eq!(r.eta.eval(3.0, 4.0), 1.0);
        assert_eq!(kappa_eval(&r, 0.5, 2.0).unwrap(), 0.5);
    }

    #[test]
    fn zero_coefficients_give_zero_rates() {
        let p = PowerLawParams {
            beta_coef: 0.0,
            beta_exp: 1.0,
            mu_coef: 0.0,
            mu_exp: 0.0,
            tau_coef: 1.0,
            tau_exp: 0.0,
            eta_const: 0.0,
        };
        let r = make_power_law_rates(&p, &scalars(), K0Profile::Uniform).unwrap();
        for y in [1.5, 10.0, 300.0] {
            assert_eq!(r.beta.eval(y), 0.0);
            assert_eq!(r.mu.eval(y), 0.0);
            assert_eq!(r.tau.eval(y), 1.0);
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let mut p = PowerLawParams {
            beta_coef: 1.0,
            beta_exp: 2.5,
            mu_coef: 1.0,
            mu_exp: 0.0,
            tau_coef: 1.0,
            tau_exp: 0.0,
            eta_const: 1.0,
        };
        assert!(make_power_law_rates(&p, &scalars(), K0Profile::Uniform).is_err());
        p.beta_exp = 1.0;
        p.mu_exp = -0.1;
        assert!(make_power_law_rates(&p, &scalars(), K0Profile::Uniform).is_err());
        p.mu_exp = 0.0;
        p.tau_exp = 1.2;
        assert!(make_power_law_rates(&p, &scalars(), K0Profile::Uniform).is_err());
        p.tau_exp = 0.0;
        p.beta_coef = -1.0;
        assert!(make_power_law_rates(&p, &scalars(), K0Profile::Uniform).is_err());
    }

    #[test]
    fn tau_is_dominated_by_linear_growth() {
        // tau(y) = S y^theta with theta <= 1 satisfies tau(y) <= c0 y on
        // [y0, inf) with c0 = S y0^(theta - 1); checked by maximizing the
        // sampled ratio tau(y)/y.
        let (s_coef, theta, y0): (f64, f64, f64) = (2.0, 0.5, 1.0);
        let tau = RateFn::PowerLaw { coef: s_coef, exponent: theta };
        let c0 = s_coef * y0.powf(theta - 1.0);
        let mut worst: f64 = 0.0;
        for y in geometric_samples(y0, 1e6 * y0, 2000) {
            worst = worst.max(tau.eval(y) / y);
        }
        assert!(worst <= c0 * (1.0 + 1e-12));
        assert_relative_eq!(worst, c0, max_relative = 1e-9);
    }

    #[test]
    fn kappa_quadratic_bump_value_and_symmetry() {
        let mut r = constant_family();
        r.y0 = 0.5;
        r.k0 = K0Profile::QuadraticBump;
        // analytic: integral of 6x(1-x) over (0,1) is 1, value at x = 1/2 is 3/2
        assert_relative_eq!(r.k0.cdf(1.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(kappa_eval(&r, 0.5, 1.0).unwrap(), 1.5, epsilon = 1e-14);
        // symmetry of the profile transfers to kappa
        for (z, y) in [(0.3, 2.0), (1.2, 3.1), (0.01, 1.7)] {
            assert_relative_eq!(
                kappa_eval(&r, z, y).unwrap(),
                kappa_eval(&r, y - z, y).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn kappa_rejects_out_of_domain_pairs() {
        let r = constant_family();
        assert!(kappa_eval(&r, 0.5, 0.9).is_err()); // y <= y0
        assert!(kappa_eval(&r, -0.1, 2.0).is_err());
        assert!(kappa_eval(&r, 2.5, 2.0).is_err()); // z >= y
    }

    #[test]
    fn identities_hold_for_builtin_profiles() {
        let ys = geometric_samples(1.0 + 1e-9, 1e3, 100);
        for k0 in [K0Profile::Uniform, K0Profile::QuadraticBump] {
            let mut r = constant_family();
            r.k0 = k0;
            let reports = check_kernel_identities(&r, &ys, 1e-10);
            for rep in &reports {
                assert_eq!(rep.status, Status::Pass, "{}: {:?}", rep.condition_id, rep.constants);
            }
        }
    }

    #[test]
    fn perturbed_kappa_reports_normalization_deviation() {
        // kappa scaled to 1.1 / y: normalization misses by 0.1.
        let mut r = constant_family();
        r.k0 = K0Profile::Table(ProfileTable::new(vec![0.0, 1.0], vec![1.1, 1.1]).unwrap());
        let ys = geometric_samples(1.01, 1e3, 50);
        let reports = check_kernel_identities(&r, &ys, 1e-10);
        let norm = reports.iter().find(|r| r.condition_id == "kappa_normalization").unwrap();
        assert_eq!(norm.status, Status::Fail);
        assert_relative_eq!(norm.constants["max_deviation"], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn profile_table_integrals_match_closed_forms() {
        // A 2-segment hat: k0 = 2 - 2|2x - 1| has unit mass.
        let t = ProfileTable::new(vec![0.0, 0.5, 1.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_relative_eq!(t.partial_integral(1.0, Moment::Zeroth), 1.0, epsilon = 1e-15);
        assert_relative_eq!(t.partial_integral(0.5, Moment::Zeroth), 0.5, epsilon = 1e-15);
        // first moment of the hat: 1/2 by symmetry
        assert_relative_eq!(t.partial_integral(1.0, Moment::First), 0.5, epsilon = 1e-15);
        assert_relative_eq!(t.eval(0.25), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn custom_profile_falls_back_to_quadrature() {
        let f: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(|x: f64| 6.0 * x * (1.0 - x));
        let p = K0Profile::Custom(f);
        assert_relative_eq!(p.cdf(1.0), 1.0, epsilon = 1e-11);
        assert_relative_eq!(p.first_moment(1.0), 0.5, epsilon = 1e-11);
    }

    #[test]
    fn power_law_evaluation_is_deterministic() {
        let a = constant_family();
        let b = constant_family();
        for y in geometric_samples(1.0 + 1e-12, 1e5, 333) {
            assert_eq!(a.beta.eval(y).to_bits(), b.beta.eval(y).to_bits());
            assert_eq!(a.tau.eval(y).to_bits(), b.tau.eval(y).to_bits());
        }
    }

    #[test]
    fn eta_symmetry_of_builtins_is_exact() {
        let eta = EtaFn::ProductPower { coef: 2.0, exponent: 1.5 };
        let ys = geometric_samples(1.0, 1e4, 40);
        let mut worst: f64 = 0.0;
        for &y in &ys {
            for &z in &ys {
                worst = worst.max((eta.eval(y, z) - eta.eval(z, y)).abs());
            }
        }
        assert_eq!(worst, 0.0);
    }
}
