//! Run configuration: a strict JSON schema with exhaustive validation.
//!
//! Parsing reports every violation at once (unknown keys, duplicate keys,
//! type errors, out-of-range values), not just the first. File paths are
//! resolved relative to the configuration file's directory.

use crate::grid::{Grid, GridMode};
use crate::hypothesis::AuditOptions;
use crate::integrator::{Scheme, SimOptions, StepSize};
use crate::kernels::{
    make_power_law_rates, K0Profile, PowerLawParams, ProfileTable, RateFn, RateSet, RateTable,
    Scalars,
};
use crate::{Error, Result};
use serde_json::{Map, Value};
use std::cell::RefCell;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

/// Rate family selection.
#[derive(Debug, Clone, PartialEq)]
pub enum RateFamilyConfig {
    PowerLaw {
        beta_coef: f64,
        beta_exp: f64,
        mu_coef: f64,
        mu_exp: f64,
        tau_coef: f64,
        tau_exp: f64,
        eta: f64,
    },
    /// Two-column (y, value) tables with linear interpolation.
    Tables { tau: PathBuf, mu: PathBuf, beta: PathBuf, eta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum K0Config {
    Uniform,
    QuadraticBump,
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatesConfig {
    pub family: RateFamilyConfig,
    pub lambda: f64,
    pub gamma: f64,
    pub nu: f64,
    pub k0: K0Config,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub y0: f64,
    pub ymax: f64,
    pub cells: usize,
    pub mode: GridMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPolymers {
    /// Bump `amplitude * exp(-(y - center)^2 / (2 width^2))`, zero at the
    /// critical size by the inflow boundary condition.
    Gaussian { center: f64, width: f64, amplitude: f64 },
    Indicator { from: f64, to: f64, height: f64 },
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub monomers: f64,
    pub polymers: InitialPolymers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    pub horizon: f64,
    pub step: StepSize,
    pub scheme: Scheme,
    pub output_every: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub moment_orders: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisConfig {
    pub points_per_axis: usize,
    pub pair_points: usize,
    pub y_check_factor: f64,
    pub xi_points: usize,
    pub alpha: Option<f64>,
    pub weight_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub epsilon: f64,
    pub weight_exponent: Option<f64>,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rates: RatesConfig,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    pub time: TimeConfig,
    pub diagnostics: DiagnosticsConfig,
    pub hypothesis: HypothesisConfig,
    pub probe: ProbeConfig,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig { moment_orders: vec![2.0] }
    }
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        let o = AuditOptions::default();
        HypothesisConfig {
            points_per_axis: o.points_per_axis,
            pair_points: o.pair_points,
            y_check_factor: o.y_check_factor,
            xi_points: o.xi_points,
            alpha: None,
            weight_exponent: None,
        }
    }
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { epsilon: 1e-4, weight_exponent: None }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Duplicate-key-aware JSON tree builder.
fn parse_tracking_duplicates(text: &str, dups: &mut Vec<String>) -> std::result::Result<Value, String> {
    fn walk(v: &serde_json::Value, _path: &str, _dups: &mut Vec<String>) -> Value {
        v.clone()
    }
    // serde_json collapses duplicates silently, so scan the token stream for
    // repeated keys per object level first, then parse normally.
    scan_duplicate_keys(text, dups);
    let value: Value = serde_json::from_str(text).map_err(|e| format!("syntax: {e}"))?;
    Ok(walk(&value, "", dups))
}

/// Minimal structural scan for duplicate keys. Tracks brace depth and the
/// key position within each object; strings are JSON-escaped by the parser
/// that runs afterwards, so this scan only needs to lex strings and
/// punctuation.
fn scan_duplicate_keys(text: &str, dups: &mut Vec<String>) {
    #[derive(Default)]
    struct Level {
        keys: BTreeSet<String>,
        expecting_key: bool,
        is_object: bool,
    }
    let mut stack: Vec<Level> = Vec::new();
    let mut chars = text.chars().peekable();
    let mut path: Vec<String> = Vec::new();
    let mut last_string: Option<String> = None;
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    chars.next();
                    if d == '\\' {
                        if let Some(esc) = chars.next() {
                            s.push('\\');
                            s.push(esc);
                        }
                    } else if d == '"' {
                        break;
                    } else {
                        s.push(d);
                    }
                }
                if let Some(level) = stack.last_mut() {
                    if level.is_object && level.expecting_key {
                        if !level.keys.insert(s.clone()) {
                            let loc = if path.is_empty() { String::new() } else { format!("{}.", path.join(".")) };
                            dups.push(format!("{loc}{s}: duplicate key"));
                        }
                        last_string = Some(s);
                        continue;
                    }
                }
                last_string = Some(s);
            }
            '{' => {
                stack.push(Level { keys: BTreeSet::new(), expecting_key: true, is_object: true });
            }
            '[' => {
                stack.push(Level { keys: BTreeSet::new(), expecting_key: false, is_object: false });
                path.push("[]".into());
            }
            '}' => {
                stack.pop();
                path.pop();
            }
            ']' => {
                stack.pop();
                path.pop();
            }
            ':' => {
                if let Some(level) = stack.last_mut() {
                    if level.is_object && level.expecting_key {
                        level.expecting_key = false;
                        if let Some(k) = last_string.take() {
                            path.push(k);
                        } else {
                            path.push("?".into());
                        }
                    }
                }
            }
            ',' => {
                if let Some(level) = stack.last_mut() {
                    if level.is_object {
                        level.expecting_key = true;
                        path.pop();
                    }
                }
            }
            _ => {}
        }
    }
}

/// Error-collecting view over one JSON object.
struct Obj<'a> {
    path: String,
    map: &'a Map<String, Value>,
    used: RefCell<BTreeSet<String>>,
    errors: &'a RefCell<Vec<String>>,
}

impl<'a> Obj<'a> {
    fn new(path: &str, map: &'a Map<String, Value>, errors: &'a RefCell<Vec<String>>) -> Self {
        Obj { path: path.to_string(), map, used: RefCell::new(BTreeSet::new()), errors }
    }

    fn err(&self, key: &str, msg: String) {
        let p = if self.path.is_empty() { key.to_string() } else { format!("{}.{key}", self.path) };
        self.errors.borrow_mut().push(format!("{p}: {msg}"));
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.get(key)
    }

    fn f64(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Value::Number(n)) => n.as_f64(),
            Some(other) => {
                self.err(key, format!("expected a number, got {other}"));
                None
            }
            None => {
                self.err(key, "missing required key".into());
                None
            }
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Option<f64> {
        match self.get(key) {
            Some(Value::Number(n)) => n.as_f64(),
            Some(other) => {
                self.err(key, format!("expected a number, got {other}"));
                None
            }
            None => Some(default),
        }
    }

    fn f64_opt(&self, key: &str) -> Option<Option<f64>> {
        match self.get(key) {
            Some(Value::Number(n)) => Some(n.as_f64()),
            Some(Value::Null) | None => Some(None),
            Some(other) => {
                self.err(key, format!("expected a number or null, got {other}"));
                None
            }
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Option<usize> {
        match self.get(key) {
            Some(Value::Number(n)) if n.as_u64().is_some() => Some(n.as_u64().unwrap() as usize),
            Some(other) => {
                self.err(key, format!("expected a nonnegative integer, got {other}"));
                None
            }
            None => Some(default),
        }
    }

    fn str(&self, key: &str) -> Option<&'a str> {
        match self.get(key) {
            Some(Value::String(s)) => Some(s),
            Some(other) => {
                self.err(key, format!("expected a string, got {other}"));
                None
            }
            None => {
                self.err(key, "missing required key".into());
                None
            }
        }
    }

    fn object(&self, key: &str) -> Option<Obj<'a>> {
        let p = if self.path.is_empty() { key.to_string() } else { format!("{}.{key}", self.path) };
        match self.get(key) {
            Some(Value::Object(m)) => Some(Obj::new(&p, m, self.errors)),
            Some(other) => {
                self.err(key, format!("expected an object, got {other}"));
                None
            }
            None => {
                self.err(key, "missing required key".into());
                None
            }
        }
    }

    fn object_opt(&self, key: &str) -> Option<Option<Obj<'a>>> {
        let p = if self.path.is_empty() { key.to_string() } else { format!("{}.{key}", self.path) };
        match self.get(key) {
            Some(Value::Object(m)) => Some(Some(Obj::new(&p, m, self.errors))),
            None => Some(None),
            Some(other) => {
                self.err(key, format!("expected an object, got {other}"));
                None
            }
        }
    }

    /// Records any keys never requested; strict mode rejects unknowns.
    fn finish(&self) {
        let used = self.used.borrow();
        for key in self.map.keys() {
            if !used.contains(key) {
                self.err(key, "unknown key".into());
            }
        }
    }
}

fn check_range(obj: &Obj<'_>, key: &str, v: Option<f64>, lo: f64, hi: f64, what: &str) -> Option<f64> {
    let v = v?;
    if !(lo..=hi).contains(&v) || !v.is_finite() {
        obj.err(key, format!("{what} must satisfy {lo} <= value <= {hi} (got {v})"));
        None
    } else {
        Some(v)
    }
}

fn check_nonneg(obj: &Obj<'_>, key: &str, v: Option<f64>, what: &str) -> Option<f64> {
    let v = v?;
    if !(v >= 0.0) || !v.is_finite() {
        obj.err(key, format!("{what} must be nonnegative (got {v})"));
        None
    } else {
        Some(v)
    }
}

fn check_positive(obj: &Obj<'_>, key: &str, v: Option<f64>, what: &str) -> Option<f64> {
    let v = v?;
    if !(v > 0.0) || !v.is_finite() {
        obj.err(key, format!("{what} must be positive (got {v})"));
        None
    } else {
        Some(v)
    }
}

/// Parses and validates a configuration, resolving relative paths against
/// `base_dir`. Returns every validation error at once.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let errors = RefCell::new(Vec::<String>::new());
    let mut dups = Vec::new();
    let root_value = match parse_tracking_duplicates(text, &mut dups) {
        Ok(v) => v,
        Err(e) => return Err(Error::InvalidConfig(vec![e])),
    };
    errors.borrow_mut().extend(dups);

    let root_map = match root_value.as_object() {
        Some(m) => m,
        None => return Err(Error::InvalidConfig(vec!["top level must be an object".into()])),
    };
    let root = Obj::new("", root_map, &errors);
    let resolve = |p: &str| -> PathBuf { base_dir.join(p) };

    // rates
    let rates = root.object("rates").and_then(|r| {
        let lambda = check_nonneg(&r, "lambda", r.f64("lambda"), "monomer source");
        let gamma = check_nonneg(&r, "gamma", r.f64("gamma"), "monomer degradation");
        let nu = check_nonneg(&r, "nu", r.f64_or("nu", 0.0), "saturation coefficient");
        let k0 = match r.get("k0") {
            None | Some(Value::String(_)) => {
                let name = match r.map.get("k0") {
                    None => "uniform",
                    Some(Value::String(s)) => s.as_str(),
                    _ => unreachable!(),
                };
                match name {
                    "uniform" => Some(K0Config::Uniform),
                    "quadratic_bump" => Some(K0Config::QuadraticBump),
                    other => {
                        r.err("k0", format!("unknown profile {other:?}; expected \"uniform\", \"quadratic_bump\", or {{\"table\": path}}"));
                        None
                    }
                }
            }
            Some(Value::Object(m)) => {
                let o = Obj::new(&format!("{}.k0", r.path), m, &errors);
                let t = o.str("table").map(|p| K0Config::Table(resolve(p)));
                o.finish();
                t
            }
            Some(other) => {
                r.err("k0", format!("expected a profile name or {{\"table\": path}}, got {other}"));
                None
            }
        };
        let family = match r.str("family") {
            Some("power_law") => {
                let beta_coef = check_nonneg(&r, "beta_coef", r.f64("beta_coef"), "splitting coefficient");
                let beta_exp = check_range(&r, "beta_exp", r.f64("beta_exp"), 0.0, 2.0, "splitting exponent");
                let mu_coef = check_nonneg(&r, "mu_coef", r.f64("mu_coef"), "degradation coefficient");
                let mu_exp = check_range(&r, "mu_exp", r.f64("mu_exp"), 0.0, 2.0, "degradation exponent");
                let tau_coef = check_positive(&r, "tau_coef", r.f64("tau_coef"), "polymerization coefficient");
                let tau_exp = check_range(&r, "tau_exp", r.f64("tau_exp"), 0.0, 1.0, "polymerization exponent");
                let eta = check_nonneg(&r, "eta", r.f64("eta"), "joining rate");
                match (beta_coef, beta_exp, mu_coef, mu_exp, tau_coef, tau_exp, eta) {
                    (Some(bc), Some(be), Some(mc), Some(me), Some(tc), Some(te), Some(e)) => {
                        Some(RateFamilyConfig::PowerLaw {
                            beta_coef: bc,
                            beta_exp: be,
                            mu_coef: mc,
                            mu_exp: me,
                            tau_coef: tc,
                            tau_exp: te,
                            eta: e,
                        })
                    }
                    _ => None,
                }
            }
            Some("tables") => {
                let tau = r.str("tau_table").map(resolve);
                let mu = r.str("mu_table").map(resolve);
                let beta = r.str("beta_table").map(resolve);
                let eta = check_nonneg(&r, "eta", r.f64("eta"), "joining rate");
                match (tau, mu, beta, eta) {
                    (Some(t), Some(m), Some(b), Some(e)) => {
                        Some(RateFamilyConfig::Tables { tau: t, mu: m, beta: b, eta: e })
                    }
                    _ => None,
                }
            }
            Some(other) => {
                r.err("family", format!("unknown rate family {other:?}; expected \"power_law\" or \"tables\""));
                None
            }
            None => None,
        };
        r.finish();
        match (family, lambda, gamma, nu, k0) {
            (Some(f), Some(l), Some(g), Some(n), Some(k)) => {
                Some(RatesConfig { family: f, lambda: l, gamma: g, nu: n, k0: k })
            }
            _ => None,
        }
    });

    // grid
    let grid = root.object("grid").and_then(|g| {
        let y0 = check_positive(&g, "y0", g.f64("y0"), "critical size");
        let ymax = g.f64("ymax");
        let cells = g.usize_or("cells", 0).filter(|&c| {
            if c < 2 {
                g.err("cells", format!("need at least 2 cells (got {c})"));
                false
            } else {
                true
            }
        });
        let mode = match g.get("mode") {
            None => Some(GridMode::Uniform),
            Some(Value::String(s)) if s == "uniform" => Some(GridMode::Uniform),
            Some(Value::Object(m)) => {
                let o = Obj::new(&format!("{}.mode", g.path), m, &errors);
                let ratio = o.f64("geometric").filter(|&r| {
                    if r > 1.0 && r.is_finite() {
                        true
                    } else {
                        o.err("geometric", format!("width ratio must exceed 1 (got {r})"));
                        false
                    }
                });
                o.finish();
                ratio.map(|r| GridMode::Geometric { ratio: r })
            }
            Some(other) => {
                g.err("mode", format!("expected \"uniform\" or {{\"geometric\": ratio}}, got {other}"));
                None
            }
        };
        if let (Some(y0), Some(ymax)) = (y0, ymax) {
            if !(ymax > 2.0 * y0) {
                g.err("ymax", format!("truncation size must exceed 2 y0 = {} (got {ymax})", 2.0 * y0));
            }
        }
        g.finish();
        match (y0, ymax, cells, mode) {
            (Some(y0), Some(ymax), Some(cells), Some(mode)) if ymax > 2.0 * y0 => {
                Some(GridConfig { y0, ymax, cells, mode })
            }
            _ => None,
        }
    });

    // initial data
    let initial = root.object("initial").and_then(|i| {
        let monomers = check_nonneg(&i, "monomers", i.f64("monomers"), "initial monomer count");
        let polymers = i.object("polymers").and_then(|p| {
            let out = match p.str("preset") {
                Some("gaussian") => {
                    let default_center = grid.as_ref().map(|g| 2.5 * g.y0).unwrap_or(2.5);
                    let default_width = grid.as_ref().map(|g| g.y0).unwrap_or(1.0);
                    let center = check_positive(&p, "center", p.f64_or("center", default_center), "bump center");
                    let width = check_positive(&p, "width", p.f64_or("width", default_width), "bump width");
                    let amplitude = check_nonneg(&p, "amplitude", p.f64_or("amplitude", 1.0), "bump amplitude");
                    match (center, width, amplitude) {
                        (Some(c), Some(w), Some(a)) => {
                            Some(InitialPolymers::Gaussian { center: c, width: w, amplitude: a })
                        }
                        _ => None,
                    }
                }
                Some("indicator") => {
                    let from = p.f64("from");
                    let to = p.f64("to");
                    let height = check_nonneg(&p, "height", p.f64_or("height", 1.0), "indicator height");
                    if let (Some(f), Some(t)) = (from, to) {
                        if !(t > f) {
                            p.err("to", format!("interval end must exceed its start (got [{f}, {t}])"));
                        }
                    }
                    match (from, to, height) {
                        (Some(f), Some(t), Some(h)) if t > f => {
                            Some(InitialPolymers::Indicator { from: f, to: t, height: h })
                        }
                        _ => None,
                    }
                }
                Some("table") => p.str("path").map(|path| InitialPolymers::Table(resolve(path))),
                Some(other) => {
                    p.err("preset", format!("unknown preset {other:?}; expected \"gaussian\", \"indicator\", or \"table\""));
                    None
                }
                None => None,
            };
            p.finish();
            out
        });
        i.finish();
        match (monomers, polymers) {
            (Some(m), Some(p)) => Some(InitialConfig { monomers: m, polymers: p }),
            _ => None,
        }
    });

    // time stepping
    let time = root.object("time").and_then(|t| {
        let horizon = check_positive(&t, "horizon", t.f64("horizon"), "time horizon");
        let output_every = check_positive(&t, "output_every", t.f64("output_every"), "output cadence");
        let has_dt = t.map.contains_key("dt");
        let has_cfl = t.map.contains_key("cfl_fraction");
        let step = match (has_dt, has_cfl) {
            (true, false) => check_positive(&t, "dt", t.f64("dt"), "step size").map(StepSize::Fixed),
            (false, true) => {
                check_range(&t, "cfl_fraction", t.f64("cfl_fraction"), 1e-9, 1.0, "step fraction")
                    .map(StepSize::CflFraction)
            }
            (true, true) => {
                let _ = (t.get("dt"), t.get("cfl_fraction"));
                t.err("dt", "give either dt or cfl_fraction, not both".into());
                None
            }
            (false, false) => {
                t.err("dt", "missing step selection: give dt or cfl_fraction".into());
                None
            }
        };
        let scheme = match t.get("scheme") {
            None => Some(Scheme::Rk4),
            Some(Value::String(s)) if s == "rk4" => Some(Scheme::Rk4),
            Some(Value::String(s)) if s == "euler" => Some(Scheme::Euler),
            Some(other) => {
                t.err("scheme", format!("expected \"rk4\" or \"euler\", got {other}"));
                None
            }
        };
        t.finish();
        match (horizon, step, scheme, output_every) {
            (Some(h), Some(st), Some(sc), Some(oe)) => {
                Some(TimeConfig { horizon: h, step: st, scheme: sc, output_every: oe })
            }
            _ => None,
        }
    });

    // optional sections
    let diagnostics = match root.object_opt("diagnostics") {
        Some(Some(d)) => {
            let orders = match d.get("moment_orders") {
                None => Some(DiagnosticsConfig::default().moment_orders),
                Some(Value::Array(a)) => {
                    let mut out = Vec::new();
                    let mut ok = true;
                    for (i, v) in a.iter().enumerate() {
                        match v.as_f64() {
                            Some(x) if x.is_finite() => out.push(x),
                            _ => {
                                d.err("moment_orders", format!("entry {i} must be a finite number, got {v}"));
                                ok = false;
                            }
                        }
                    }
                    ok.then_some(out)
                }
                Some(other) => {
                    d.err("moment_orders", format!("expected an array of numbers, got {other}"));
                    None
                }
            };
            d.finish();
            orders.map(|moment_orders| DiagnosticsConfig { moment_orders })
        }
        Some(None) => Some(DiagnosticsConfig::default()),
        None => None,
    };

    let hypothesis = match root.object_opt("hypothesis") {
        Some(Some(h)) => {
            let d = HypothesisConfig::default();
            let points = h.usize_or("points_per_axis", d.points_per_axis);
            let pair_points = h.usize_or("pair_points", d.pair_points);
            let y_check = check_positive(
                &h,
                "y_check_factor",
                h.f64_or("y_check_factor", d.y_check_factor),
                "sample range factor",
            );
            let xi_points = h.usize_or("xi_points", d.xi_points);
            let alpha = h.f64_opt("alpha");
            let weight = h.f64_opt("weight_exponent");
            h.finish();
            match (points, pair_points, y_check, xi_points, alpha, weight) {
                (Some(p), Some(pp), Some(y), Some(x), Some(a), Some(w)) => Some(HypothesisConfig {
                    points_per_axis: p.max(16),
                    pair_points: pp.max(8),
                    y_check_factor: y,
                    xi_points: x.max(16),
                    alpha: a,
                    weight_exponent: w,
                }),
                _ => None,
            }
        }
        Some(None) => Some(HypothesisConfig::default()),
        None => None,
    };

    let probe = match root.object_opt("probe") {
        Some(Some(p)) => {
            let eps = check_positive(&p, "epsilon", p.f64_or("epsilon", 1e-4), "perturbation size");
            let weight = p.f64_opt("weight_exponent");
            p.finish();
            match (eps, weight) {
                (Some(e), Some(w)) => Some(ProbeConfig { epsilon: e, weight_exponent: w }),
                _ => None,
            }
        }
        Some(None) => Some(ProbeConfig::default()),
        None => None,
    };

    root.finish();

    let errs = errors.into_inner();
    if !errs.is_empty() {
        return Err(Error::InvalidConfig(errs));
    }
    match (rates, grid, initial, time, diagnostics, hypothesis, probe) {
        (Some(rates), Some(grid), Some(initial), Some(time), Some(d), Some(h), Some(p)) => {
            Ok(RunConfig { rates, grid, initial, time, diagnostics: d, hypothesis: h, probe: p })
        }
        _ => Err(Error::InvalidConfig(vec!["configuration incomplete".into()])),
    }
}

// ---------------------------------------------------------------------------
// Serialization (mirrors the parse schema exactly)
// ---------------------------------------------------------------------------

impl RunConfig {
    /// Canonical JSON form: parsing it back yields an equal configuration.
    /// Keys are emitted sorted, which also makes the manifest hash stable.
    pub fn to_json(&self) -> Value {
        let mut rates = Map::new();
        match &self.rates.family {
            RateFamilyConfig::PowerLaw { beta_coef, beta_exp, mu_coef, mu_exp, tau_coef, tau_exp, eta } => {
                rates.insert("family".into(), "power_law".into());
                rates.insert("beta_coef".into(), (*beta_coef).into());
                rates.insert("beta_exp".into(), (*beta_exp).into());
                rates.insert("mu_coef".into(), (*mu_coef).into());
                rates.insert("mu_exp".into(), (*mu_exp).into());
                rates.insert("tau_coef".into(), (*tau_coef).into());
                rates.insert("tau_exp".into(), (*tau_exp).into());
                rates.insert("eta".into(), (*eta).into());
            }
            RateFamilyConfig::Tables { tau, mu, beta, eta } => {
                rates.insert("family".into(), "tables".into());
                rates.insert("tau_table".into(), tau.to_string_lossy().into_owned().into());
                rates.insert("mu_table".into(), mu.to_string_lossy().into_owned().into());
                rates.insert("beta_table".into(), beta.to_string_lossy().into_owned().into());
                rates.insert("eta".into(), (*eta).into());
            }
        }
        rates.insert("lambda".into(), self.rates.lambda.into());
        rates.insert("gamma".into(), self.rates.gamma.into());
        rates.insert("nu".into(), self.rates.nu.into());
        rates.insert(
            "k0".into(),
            match &self.rates.k0 {
                K0Config::Uniform => "uniform".into(),
                K0Config::QuadraticBump => "quadratic_bump".into(),
                K0Config::Table(p) => {
                    serde_json::json!({"table": p.to_string_lossy().into_owned()})
                }
            },
        );

        let mut grid = Map::new();
        grid.insert("y0".into(), self.grid.y0.into());
        grid.insert("ymax".into(), self.grid.ymax.into());
        grid.insert("cells".into(), self.grid.cells.into());
        grid.insert(
            "mode".into(),
            match self.grid.mode {
                GridMode::Uniform => "uniform".into(),
                GridMode::Geometric { ratio } => serde_json::json!({"geometric": ratio}),
            },
        );

        let polymers = match &self.initial.polymers {
            InitialPolymers::Gaussian { center, width, amplitude } => serde_json::json!({
                "preset": "gaussian", "center": center, "width": width, "amplitude": amplitude
            }),
            InitialPolymers::Indicator { from, to, height } => serde_json::json!({
                "preset": "indicator", "from": from, "to": to, "height": height
            }),
            InitialPolymers::Table(p) => serde_json::json!({
                "preset": "table", "path": p.to_string_lossy().into_owned()
            }),
        };

        let mut time = Map::new();
        time.insert("horizon".into(), self.time.horizon.into());
        match self.time.step {
            StepSize::Fixed(dt) => time.insert("dt".into(), dt.into()),
            StepSize::CflFraction(f) => time.insert("cfl_fraction".into(), f.into()),
        };
        time.insert(
            "scheme".into(),
            match self.time.scheme {
                Scheme::Rk4 => "rk4".into(),
                Scheme::Euler => "euler".into(),
            },
        );
        time.insert("output_every".into(), self.time.output_every.into());

        serde_json::json!({
            "rates": Value::Object(rates),
            "grid": Value::Object(grid),
            "initial": {"monomers": self.initial.monomers, "polymers": polymers},
            "time": Value::Object(time),
            "diagnostics": {"moment_orders": self.diagnostics.moment_orders},
            "hypothesis": {
                "points_per_axis": self.hypothesis.points_per_axis,
                "pair_points": self.hypothesis.pair_points,
                "y_check_factor": self.hypothesis.y_check_factor,
                "xi_points": self.hypothesis.xi_points,
                "alpha": self.hypothesis.alpha,
                "weight_exponent": self.hypothesis.weight_exponent,
            },
            "probe": {
                "epsilon": self.probe.epsilon,
                "weight_exponent": self.probe.weight_exponent,
            },
        })
    }

    pub fn audit_options(&self) -> AuditOptions {
        AuditOptions {
            y_check_factor: self.hypothesis.y_check_factor,
            points_per_axis: self.hypothesis.points_per_axis,
            pair_points: self.hypothesis.pair_points,
            xi_points: self.hypothesis.xi_points,
            divergence_ratio: AuditOptions::default().divergence_ratio,
        }
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            horizon: self.time.horizon,
            step: self.time.step,
            scheme: self.time.scheme,
            output_every: self.time.output_every,
            moment_orders: self.diagnostics.moment_orders.clone(),
        }
    }

    /// Builds the rate set, loading any referenced tables.
    pub fn build_rates(&self) -> Result<RateSet> {
        let k0 = match &self.rates.k0 {
            K0Config::Uniform => K0Profile::Uniform,
            K0Config::QuadraticBump => K0Profile::QuadraticBump,
            K0Config::Table(path) => {
                let (xs, vals) = load_two_column(path)?;
                K0Profile::Table(ProfileTable::new(xs, vals)?)
            }
        };
        let scalars = Scalars {
            lambda: self.rates.lambda,
            gamma: self.rates.gamma,
            nu: self.rates.nu,
            y0: self.grid.y0,
        };
        match &self.rates.family {
            RateFamilyConfig::PowerLaw { beta_coef, beta_exp, mu_coef, mu_exp, tau_coef, tau_exp, eta } => {
                let params = PowerLawParams {
                    beta_coef: *beta_coef,
                    beta_exp: *beta_exp,
                    mu_coef: *mu_coef,
                    mu_exp: *mu_exp,
                    tau_coef: *tau_coef,
                    tau_exp: *tau_exp,
                    eta_const: *eta,
                };
                make_power_law_rates(&params, &scalars, k0)
            }
            RateFamilyConfig::Tables { tau, mu, beta, eta } => {
                let load = |p: &PathBuf| -> Result<RateFn> {
                    let (ys, vals) = load_two_column(p)?;
                    Ok(RateFn::Table(RateTable::new(ys, vals)?))
                };
                Ok(RateSet {
                    lambda: scalars.lambda,
                    gamma: scalars.gamma,
                    nu: scalars.nu,
                    y0: scalars.y0,
                    tau: load(tau)?,
                    mu: load(mu)?,
                    beta: load(beta)?,
                    k0,
                    eta: crate::kernels::EtaFn::Constant(*eta),
                })
            }
        }
    }

    pub fn build_grid(&self) -> Result<Grid> {
        match self.grid.mode {
            GridMode::Uniform => Grid::uniform(self.grid.y0, self.grid.ymax, self.grid.cells),
            GridMode::Geometric { ratio } => {
                Grid::geometric(self.grid.y0, self.grid.ymax, self.grid.cells, ratio)
            }
        }
    }

    /// Evaluates the initial polymer density on the grid centers.
    pub fn initial_density(&self, grid: &Grid) -> Result<Vec<f64>> {
        match &self.initial.polymers {
            InitialPolymers::Gaussian { center, width, amplitude } => Ok(grid
                .centers
                .iter()
                .map(|&y| amplitude * (-(y - center) * (y - center) / (2.0 * width * width)).exp())
                .collect()),
            InitialPolymers::Indicator { from, to, height } => Ok(grid
                .centers
                .iter()
                .map(|&y| if y >= *from && y < *to { *height } else { 0.0 })
                .collect()),
            InitialPolymers::Table(path) => {
                let (ys, vals) = load_two_column(path)?;
                let table = RateTable::new(ys, vals)?;
                Ok(grid.centers.iter().map(|&y| table.eval(y).max(0.0)).collect())
            }
        }
    }
}

/// Loads a whitespace-separated two-column text table; `#` starts a comment.
pub fn load_two_column(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut parts = body.split_whitespace();
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| Error::invalid(format!("{}:{}: expected two columns", path.display(), lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("{}:{}: {e}", path.display(), lineno + 1)))
        };
        xs.push(parse(parts.next())?);
        vs.push(parse(parts.next())?);
        if parts.next().is_some() {
            return Err(Error::invalid(format!(
                "{}:{}: expected exactly two columns",
                path.display(),
                lineno + 1
            )));
        }
    }
    Ok((xs, vs))
}
