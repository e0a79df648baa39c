//! Composite Gauss–Legendre quadrature on [0, 1] against r^{d-1} dr.
//!
//! Panels are at most π/(4 z) wide for the highest retained zero z, so an
//! integrand oscillating like cos(z r) sees at least eight panels per
//! period.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_NODES: u64 = 100_000_000;
pub const MIN_POINTS_PER_PANEL: usize = 8;
pub const DEFAULT_POINTS_PER_PANEL: usize = 8;

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial estimate, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Nodes and plain (unweighted) Gauss–Legendre weights on [a, b] split into
/// `panels` equal panels.
pub(crate) fn composite_rule(a: f64, b: f64, panels: usize, reference: &(Vec<f64>, Vec<f64>)) -> impl Iterator<Item = (f64, f64)> + '_ {
    let (xs, ws) = reference;
    let width = (b - a) / panels as f64;
    (0..panels).flat_map(move |k| {
        let left = a + k as f64 * width;
        let half = 0.5 * width;
        xs.iter()
            .zip(ws.iter())
            .map(move |(x, w)| (left + half * (x + 1.0), half * w))
    })
}

/// Nodes in (0, 1) with weights that already include r^{d-1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    d: usize,
    points_per_panel: usize,
    panels: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    max_resolved_frequency: f64,
}

impl QuadratureGrid {
    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn points_per_panel(&self) -> usize {
        self.points_per_panel
    }

    pub fn max_resolved_frequency(&self) -> f64 {
        self.max_resolved_frequency
    }

    /// Fails unless the grid was built for a zero at least as large as `freq`.
    pub fn check_resolves(&self, mode: usize, freq: f64) -> Result<()> {
        // Zeros are recomputed bit-identically, so an exact comparison is safe;
        // the slack only absorbs callers that pass a rounded value.
        if freq > self.max_resolved_frequency * (1.0 + 1e-12) {
            return Err(Error::Resolution {
                mode,
                required: freq,
                resolved: self.max_resolved_frequency,
            });
        }
        Ok(())
    }

    /// Σ w_i f_i.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.weights.len());
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// (Σ w_i f_i^p)^{1/p} for nonnegative samples.
    pub fn lp_norm(&self, f: &[f64], p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("p = {p} must be finite and >= 1")));
        }
        if f.len() != self.nodes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a grid of {} nodes",
                f.len(),
                self.nodes.len()
            )));
        }
        if let Some(bad) = f.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "samples must be finite and nonnegative, got {bad}"
            )));
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v.powf(p))
            .sum();
        Ok(s.powf(1.0 / p))
    }

    /// Total mass ∫_0^1 r^{d-1} dr = 1/d.
    pub fn mass(&self) -> f64 {
        1.0 / self.d as f64
    }
}

/// Grid resolving oscillations up to frequency `max_mode_zero`.
pub fn build_grid(d: usize, max_mode_zero: f64, points_per_panel: usize) -> Result<QuadratureGrid> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if !(max_mode_zero >= PI) || !max_mode_zero.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "max_mode_zero = {max_mode_zero} must be >= pi"
        )));
    }
    if points_per_panel < MIN_POINTS_PER_PANEL {
        return Err(Error::InvalidArgument(format!(
            "points_per_panel = {points_per_panel} must be >= {MIN_POINTS_PER_PANEL}"
        )));
    }
    let panels_f = (4.0 * max_mode_zero / PI).ceil();
    let total = panels_f * points_per_panel as f64;
    if total > MAX_NODES as f64 {
        return Err(Error::GridTooLarge {
            nodes: total as u64,
            limit: MAX_NODES,
        });
    }
    let panels = panels_f as usize;
    let reference = gauss_legendre(points_per_panel);
    let power = (d - 1) as i32;
    let (nodes, weights): (Vec<f64>, Vec<f64>) = composite_rule(0.0, 1.0, panels, &reference)
        .map(|(r, w)| (r, w * r.powi(power)))
        .unzip();
    Ok(QuadratureGrid {
        d,
        points_per_panel,
        panels,
        nodes,
        weights,
        max_resolved_frequency: max_mode_zero,
    })
}
