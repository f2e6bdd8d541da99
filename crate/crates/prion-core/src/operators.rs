//! Finite-volume operators for the three mechanisms acting on the polymer
//! density: transport (lengthening), splitting, and pairwise joining.
//!
//! All deposits use two-pivot bracketing with weights that preserve number
//! and first moment of the deposited piece, so the discrete exchange of
//! monomers between mechanisms closes up to floating-point rounding rather
//! than up to the mesh width. Mass leaving the truncated domain is tracked,
//! never re-injected.

use crate::grid::Grid;
use crate::kernels::RateSet;
use crate::{Error, Result};

/// Marker for pair products that leave the domain.
const OVERFLOW: u32 = u32::MAX;

/// Output of the splitting operator.
#[derive(Debug, Clone)]
pub struct SplitOutput {
    /// Rate of change of the cell-averaged density, including the
    /// degradation and breakage losses.
    pub du: Vec<f64>,
    /// Rate of monomer production from sub-critical fragments.
    pub monomer_return: f64,
    /// Rate of polymerized-mass loss to degradation, reported separately for
    /// the balance ledger.
    pub mass_degradation: f64,
}

/// Output of the joining operator.
#[derive(Debug, Clone)]
pub struct JoinOutput {
    pub du: Vec<f64>,
    /// First-moment rate routed past the truncation boundary.
    pub overflow: f64,
}

/// Output of the transport operator.
#[derive(Debug, Clone)]
pub struct TransportOutput {
    pub du: Vec<f64>,
    /// Number flux through the right boundary.
    pub number_outflow: f64,
    /// First-moment rate through the right boundary, `ymax * number_outflow`.
    pub overflow: f64,
    /// Monomer consumption implied by the discrete scheme: the first-moment
    /// production of `du` plus the boundary overflow, assembled as a sum of
    /// nonnegative face terms. Feeding exactly this into the monomer
    /// equation makes the exchange antisymmetric to rounding.
    pub monomer_consumption: f64,
}

/// Grid-and-rates-bound tables for the three operators.
///
/// Everything here is immutable after construction; applying an operator is
/// a pure function of the density, so one instance may be shared freely
/// across threads.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub grid: Grid,
    mu_cell: Vec<f64>,
    beta_cell: Vec<f64>,
    tau_face: Vec<f64>,
    /// Center-to-center gaps plus the last half cell, for the consumption sum.
    face_gap: Vec<f64>,
    /// Dense splitting matrix (row-major), breakage loss on the diagonal and
    /// fragment gains below it; column j holds the density rates per unit
    /// density in cell j.
    split: Vec<f64>,
    /// Monomer return weights: `monomer_return = w . u`.
    mret_w: Vec<f64>,
    /// Joining pair table over unordered pairs (i <= j), row-major by i.
    pair_eta_w: Vec<f64>,
    pair_dep_k: Vec<u32>,
    pair_dep_w: Vec<f64>,
    /// Largest joining rate over the pair table, for step-size bounds.
    pub eta_max: f64,
    /// Largest per-cell loss coefficient `mu + beta`.
    pub loss_max: f64,
}

impl Discretization {
    pub fn new(grid: Grid, rates: &RateSet) -> Result<Self> {
        let n = grid.len();
        let yc = &grid.centers;
        let dy = &grid.widths;

        let mu_cell: Vec<f64> = yc.iter().map(|&y| rates.mu.eval(y)).collect();
        let beta_cell: Vec<f64> = yc.iter().map(|&y| rates.beta.eval(y)).collect();
        let tau_face: Vec<f64> = (0..n).map(|i| rates.tau.eval(grid.edges[i + 1])).collect();
        for (i, arr) in [("degradation", &mu_cell), ("splitting", &beta_cell)] {
            if arr.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid(format!("{i} rate must be finite and nonnegative on the grid")));
            }
        }
        if tau_face.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("polymerization rate must be finite and nonnegative on the grid"));
        }

        let mut face_gap = vec![0.0; n];
        for i in 0..n - 1 {
            face_gap[i] = yc[i + 1] - yc[i];
        }
        face_gap[n - 1] = grid.ymax - yc[n - 1];

        // Splitting: project the fragment distribution of each breaker cell
        // onto the pivots. Fragments below y0 disintegrate; their monomer
        // content accumulates in the return weight.
        let mut split = vec![0.0; n * n];
        let mut mret_w = vec![0.0; n];
        for j in 0..n {
            let yj = yc[j];
            let beta_j = beta_cell[j];
            split[j * n + j] -= beta_j;
            if beta_j == 0.0 {
                continue;
            }
            let base = 2.0 * beta_j * dy[j];
            let q = rates.y0 / yj;
            mret_w[j] = base * yj * rates.k0.first_moment(q);

            let mut deposit = |num: f64, mom: f64| {
                if !(num > 0.0) || !num.is_finite() {
                    return;
                }
                let c = mom / num;
                match grid.center_at_or_below(c) {
                    None => {
                        // No pivot to the left: place the piece on the first
                        // pivot preserving its monomer content.
                        split[0 * n + j] += mom / yc[0] / dy[0];
                    }
                    Some(k) if k + 1 >= n => {
                        split[(n - 1) * n + j] += num / dy[n - 1];
                    }
                    Some(k) => {
                        let mut hi = (mom - yc[k] * num) / (yc[k + 1] - yc[k]);
                        let mut lo = num - hi;
                        if hi < 0.0 {
                            hi = 0.0;
                            lo = num;
                        } else if lo < 0.0 {
                            lo = 0.0;
                            hi = num;
                        }
                        split[k * n + j] += lo / dy[k];
                        split[(k + 1) * n + j] += hi / dy[k + 1];
                    }
                }
            };

            // Whole cells strictly below the breaker, then the partial piece
            // between the breaker's left edge and its center.
            let mut cdf_lo = rates.k0.cdf(grid.edges[0] / yj);
            let mut mom_lo = rates.k0.first_moment(grid.edges[0] / yj);
            for i in 0..j {
                let xb = grid.edges[i + 1] / yj;
                let cdf_hi = rates.k0.cdf(xb);
                let mom_hi = rates.k0.first_moment(xb);
                deposit(base * (cdf_hi - cdf_lo), base * yj * (mom_hi - mom_lo));
                cdf_lo = cdf_hi;
                mom_lo = mom_hi;
            }
            deposit(
                base * (rates.k0.cdf(1.0) - cdf_lo),
                base * yj * (rates.k0.first_moment(1.0) - mom_lo),
            );
        }

        // Joining pair table: products land between the two bracketing
        // pivots with number- and moment-preserving weights; products past
        // the last pivot cannot be deposited moment-exactly and overflow.
        let n_pairs = n * (n + 1) / 2;
        let mut pair_eta_w = Vec::with_capacity(n_pairs);
        let mut pair_dep_k = Vec::with_capacity(n_pairs);
        let mut pair_dep_w = Vec::with_capacity(n_pairs);
        let mut eta_max: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let eta = rates.eta.eval(yc[i], yc[j]);
                if !(eta >= 0.0) || !eta.is_finite() {
                    return Err(Error::invalid(format!(
                        "joining rate must be finite and nonnegative, got {eta} at ({}, {})",
                        yc[i], yc[j]
                    )));
                }
                eta_max = eta_max.max(eta);
                let mult = if i == j { 1.0 } else { 2.0 };
                pair_eta_w.push(mult * eta * dy[i] * dy[j]);
                let s = yc[i] + yc[j];
                if s > yc[n - 1] {
                    pair_dep_k.push(OVERFLOW);
                    pair_dep_w.push(s);
                } else {
                    let k = grid
                        .center_at_or_below(s)
                        .expect("pair product below the first center is impossible");
                    if k + 1 >= n {
                        pair_dep_k.push((n - 2) as u32);
                        pair_dep_w.push(0.0);
                    } else {
                        pair_dep_k.push(k as u32);
                        pair_dep_w.push((yc[k + 1] - s) / (yc[k + 1] - yc[k]));
                    }
                }
            }
        }

        let loss_max = mu_cell
            .iter()
            .zip(&beta_cell)
            .map(|(m, b)| m + b)
            .fold(0.0f64, f64::max);

        Ok(Discretization {
            grid,
            mu_cell,
            beta_cell,
            tau_face,
            face_gap,
            split,
            mret_w,
            pair_eta_w,
            pair_dep_k,
            pair_dep_w,
            eta_max,
            loss_max,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu_cell
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta_cell
    }

    /// Polymer number `sum u_i dy_i`.
    pub fn number(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.grid.widths).map(|(u, w)| u * w).sum()
    }

    /// Polymerized mass `sum y_i u_i dy_i`.
    pub fn mass(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(&self.grid.centers)
            .zip(&self.grid.widths)
            .map(|((u, y), w)| y * u * w)
            .sum()
    }

    /// Generalized moment `sum y_i^order u_i dy_i`.
    pub fn moment(&self, u: &[f64], order: f64) -> f64 {
        u.iter()
            .zip(&self.grid.centers)
            .zip(&self.grid.widths)
            .map(|((u, y), w)| y.powf(order) * u * w)
            .sum()
    }

    /// Splitting: breakage loss, fragment gain, degradation loss, and the
    /// monomer return from sub-critical fragments.
    pub fn splitting(&self, u: &[f64]) -> SplitOutput {
        let n = self.len();
        debug_assert_eq!(u.len(), n);
        let mut du = vec![0.0; n];
        for (i, dui) in du.iter_mut().enumerate() {
            let row = &self.split[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for (a, &uj) in row.iter().zip(u) {
                acc += a * uj;
            }
            *dui = acc - self.mu_cell[i] * u[i];
        }
        let monomer_return = self.mret_w.iter().zip(u).map(|(w, u)| w * u).sum();
        let mass_degradation = self
            .mu_cell
            .iter()
            .zip(u)
            .zip(self.grid.centers.iter().zip(&self.grid.widths))
            .map(|((m, u), (y, w))| y * m * u * w)
            .sum();
        SplitOutput { du, monomer_return, mass_degradation }
    }

    /// Pairwise joining. Each unordered pair reacts at the symmetric rate;
    /// the product deposits between the two bracketing pivots, preserving
    /// its first moment, or overflows past the boundary.
    pub fn joining(&self, u: &[f64]) -> JoinOutput {
        let n = self.len();
        debug_assert_eq!(u.len(), n);
        let mut dn = vec![0.0; n];
        let mut overflow = 0.0;
        let mut p = 0usize;
        for i in 0..n {
            let ui = u[i];
            if ui == 0.0 {
                p += n - i;
                continue;
            }
            for j in i..n {
                let r = self.pair_eta_w[p] * ui * u[j];
                if r != 0.0 {
                    dn[i] -= r;
                    dn[j] -= r;
                    let k = self.pair_dep_k[p];
                    if k == OVERFLOW {
                        overflow += r * self.pair_dep_w[p];
                    } else {
                        let k = k as usize;
                        let w = self.pair_dep_w[p];
                        dn[k] += r * w;
                        dn[k + 1] += r * (1.0 - w);
                    }
                }
                p += 1;
            }
        }
        let du: Vec<f64> = dn.iter().zip(&self.grid.widths).map(|(dn, w)| dn / w).collect();
        JoinOutput { du, overflow }
    }

    /// First-order upwind transport with speed factor `v / (1 + nu * m1)`
    /// and zero inflow at the critical size.
    pub fn transport(&self, u: &[f64], v: f64, nu: f64, m1: f64) -> Result<TransportOutput> {
        let n = self.len();
        debug_assert_eq!(u.len(), n);
        if v < 0.0 {
            return Err(Error::invalid(format!("monomer count must be nonnegative, got {v}")));
        }
        let denom = 1.0 + nu * m1;
        if !(denom > 0.0) {
            return Err(Error::invalid(format!("saturation denominator must be positive, got {denom}")));
        }
        let s = v / denom;
        let mut du = vec![0.0; n];
        let mut consumption = 0.0;
        let mut flux_left = 0.0;
        for i in 0..n {
            let flux = s * self.tau_face[i] * u[i];
            du[i] = (flux_left - flux) / self.grid.widths[i];
            consumption += self.face_gap[i] * flux;
            flux_left = flux;
        }
        let number_outflow = flux_left;
        Ok(TransportOutput {
            du,
            number_outflow,
            overflow: self.grid.ymax * number_outflow,
            monomer_consumption: consumption,
        })
    }

    /// Exact per-cell joining loss-rate coefficients `2 sum_j eta u_j dy_j`
    /// for the positivity step bound.
    pub fn joining_loss_rates(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut rate = vec![0.0; n];
        let mut p = 0usize;
        for i in 0..n {
            for j in i..n {
                let w = self.pair_eta_w[p];
                if i == j {
                    rate[i] += 2.0 * w * u[i] / self.grid.widths[i];
                } else {
                    rate[i] += w * u[j] / self.grid.widths[i];
                    rate[j] += w * u[i] / self.grid.widths[j];
                }
                p += 1;
            }
        }
        rate
    }

    /// Weak-form coefficients of the splitting operator for a per-cell test
    /// vector: `c[j]` such that `sum_i phi_i du_i dy_i = sum_j c_j u_j` for
    /// the breakage part (degradation excluded).
    pub fn split_weak_coeffs(&self, phi: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut c = vec![0.0; n];
        for i in 0..n {
            let w = phi[i] * self.grid.widths[i];
            let row = &self.split[i * n..(i + 1) * n];
            for (cj, a) in c.iter_mut().zip(row) {
                *cj += w * a;
            }
        }
        c
    }

    /// Weak-form coefficients of the joining operator: per unordered pair,
    /// `(phi(product) - phi_i - phi_j)` times the pair rate weight, with the
    /// deposit interpolation convention (overflow pairs contribute no
    /// product term).
    pub fn join_weak_coeffs(&self, phi: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut c = Vec::with_capacity(self.pair_eta_w.len());
        let mut p = 0usize;
        for i in 0..n {
            for j in i..n {
                let k = self.pair_dep_k[p];
                let phi_hat = if k == OVERFLOW {
                    0.0
                } else {
                    let k = k as usize;
                    let w = self.pair_dep_w[p];
                    w * phi[k] + (1.0 - w) * phi[k + 1]
                };
                c.push((phi_hat - phi[i] - phi[j]) * self.pair_eta_w[p]);
                p += 1;
            }
        }
        c
    }

    /// Evaluates `sum over pairs coeff_p u_i u_j` for coefficients produced
    /// by [`Self::join_weak_coeffs`].
    pub fn pair_sum(&self, coeffs: &[f64], u: &[f64]) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        let mut p = 0usize;
        for i in 0..n {
            let ui = u[i];
            if ui == 0.0 {
                p += n - i;
                continue;
            }
            for j in i..n {
                acc += coeffs[p] * ui * u[j];
                p += 1;
            }
        }
        acc
    }

    /// Weak-form transport pairing `sum_i phi_i du_i dy_i` per unit speed
    /// factor, assembled from face fluxes.
    pub fn transport_weak(&self, phi: &[f64], u: &[f64]) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for i in 0..n - 1 {
            acc += (phi[i + 1] - phi[i]) * self.tau_face[i] * u[i];
        }
        acc - phi[n - 1] * self.tau_face[n - 1] * u[n - 1]
    }
}
