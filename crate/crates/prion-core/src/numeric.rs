//! Small numeric helpers shared across modules: compensated summation,
//! midpoint quadrature with error-controlled node doubling, geometric sample
//! grids, and least-squares line fits.

/// Neumaier-compensated accumulator. Deterministic for a fixed input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn csum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Composite midpoint rule with `n` nodes on `[a, b]`.
pub fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    debug_assert!(n > 0);
    let h = (b - a) / n as f64;
    let mut acc = CompensatedSum::new();
    for k in 0..n {
        acc.add(f(a + (k as f64 + 0.5) * h));
    }
    acc.value() * h
}

/// Midpoint rule with node doubling until the estimated error (one third of
/// the last refinement jump, the O(h^2) Richardson factor) drops below
/// `tol`, starting from `n0` nodes and capping at `n_max`.
pub fn midpoint_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, n0: usize, n_max: usize, tol: f64) -> f64 {
    let mut n = n0.max(1);
    let mut prev = midpoint(&f, a, b, n);
    loop {
        n *= 2;
        let next = midpoint(&f, a, b, n);
        let err = (next - prev).abs() / 3.0;
        if err <= tol || n >= n_max {
            return next;
        }
        prev = next;
    }
}

/// `n` log-spaced samples in `[lo, hi]`, endpoints included.
pub fn geometric_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                lo * (k as f64 * step).exp()
            }
        })
        .collect()
}

/// Least-squares fit of `y = intercept + slope * x`.
/// Returns `(intercept, slope)`; requires at least two points.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compensated_sum_handles_cancellation() {
        let mut acc = CompensatedSum::new();
        acc.add(1e16);
        acc.add(1.0);
        acc.add(-1e16);
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn midpoint_is_exact_for_linear() {
        let v = midpoint(|x| 3.0 * x + 1.0, 0.0, 2.0, 7);
        assert_relative_eq!(v, 8.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_midpoint_reaches_tolerance() {
        let v = midpoint_adaptive(|x| x * x * x.exp(), 0.0, 1.0, 16, 1 << 22, 1e-11);
        // exact: e - 2
        assert_relative_eq!(v, std::f64::consts::E - 2.0, epsilon = 1e-10);
    }

    #[test]
    fn geometric_samples_hit_endpoints() {
        let g = geometric_samples(1.0, 1e6, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[199], 1e6);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (b, m) = linear_fit(&xs, &ys);
        assert_relative_eq!(b, 2.0, epsilon = 1e-12);
        assert_relative_eq!(m, -0.5, epsilon = 1e-12);
    }
}
