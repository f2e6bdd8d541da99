//! Finite-volume grid on the truncated size domain `[y0, ymax]`.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Cell layout mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    Uniform,
    /// Widths grow by a constant factor `ratio > 1` from left to right.
    Geometric { ratio: f64 },
}

/// Partition of `[y0, ymax]` into contiguous cells.
///
/// `edges` has `n + 1` entries with `edges[0] = y0` and `edges[n] = ymax`;
/// `centers[i]` and `widths[i]` are midpoint and width of cell `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub y0: f64,
    pub ymax: f64,
    pub mode: GridMode,
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
}

impl Grid {
    pub fn uniform(y0: f64, ymax: f64, n: usize) -> Result<Self> {
        Self::validate_extent(y0, ymax, n)?;
        let h = (ymax - y0) / n as f64;
        let edges: Vec<f64> = (0..=n)
            .map(|i| if i == n { ymax } else { y0 + i as f64 * h })
            .collect();
        Ok(Self::from_edges(y0, ymax, GridMode::Uniform, edges))
    }

    pub fn geometric(y0: f64, ymax: f64, n: usize, ratio: f64) -> Result<Self> {
        Self::validate_extent(y0, ymax, n)?;
        if !(ratio > 1.0) || !ratio.is_finite() {
            return Err(Error::invalid(format!(
                "geometric grid requires ratio > 1, got {ratio}"
            )));
        }
        // First width chosen so the widths w0 * ratio^i sum to ymax - y0.
        let w0 = (ymax - y0) * (ratio - 1.0) / (ratio.powi(n as i32) - 1.0);
        let mut edges = Vec::with_capacity(n + 1);
        let mut w = w0;
        let mut x = y0;
        edges.push(y0);
        for i in 0..n {
            x += w;
            w *= ratio;
            edges.push(if i == n - 1 { ymax } else { x });
        }
        Ok(Self::from_edges(y0, ymax, GridMode::Geometric { ratio }, edges))
    }

    fn validate_extent(y0: f64, ymax: f64, n: usize) -> Result<()> {
        if !(y0 > 0.0) || !y0.is_finite() {
            return Err(Error::invalid(format!("y0 must be positive, got {y0}")));
        }
        if !(ymax > 2.0 * y0) || !ymax.is_finite() {
            return Err(Error::invalid(format!(
                "ymax must exceed 2*y0 = {}, got {ymax}",
                2.0 * y0
            )));
        }
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 cells, got {n}")));
        }
        Ok(())
    }

    fn from_edges(y0: f64, ymax: f64, mode: GridMode, edges: Vec<f64>) -> Self {
        let centers: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let widths: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
        Grid {
            y0,
            ymax,
            mode,
            edges,
            centers,
            widths,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Index of the cell whose half-open span `[edge_i, edge_{i+1})` contains
    /// `y`; the right boundary maps to the last cell.
    pub fn cell_containing(&self, y: f64) -> Option<usize> {
        if y < self.y0 || y > self.ymax {
            return None;
        }
        let i = self.edges.partition_point(|&e| e <= y);
        Some(i.saturating_sub(1).min(self.len() - 1))
    }

    /// Largest `k` with `centers[k] <= s`, for bracketing deposits.
    /// `None` when `s` lies left of the first center.
    pub fn center_at_or_below(&self, s: f64) -> Option<usize> {
        let k = self.centers.partition_point(|&c| c <= s);
        k.checked_sub(1)
    }

    /// Checks that `other` describes the same partition (same edges).
    pub fn same_partition(&self, other: &Grid) -> bool {
        self.edges == other.edges
    }
}
