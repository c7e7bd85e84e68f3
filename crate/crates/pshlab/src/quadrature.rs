//! Quadrature grids on ℂP¹ ≅ S², the sphere Laplacian Δ_Θ and finite
//! differences in t.
//!
//! The grid is a product rule: Gauss–Legendre in x = cos θ crossed with a
//! uniform φ grid, with weights carrying the Fubini–Study measure ω (total
//! mass π) via dσ₂ = 4ω.

use crate::catalog::{derivs, Builtin, FunctionSpec, Kind};
use crate::hopf::{Chart, Direction};
use crate::math::{gauss_legendre, pairwise_sum};
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// One direction node with its spherical angles.
#[derive(Debug, Clone, Copy)]
pub struct GridNode {
    pub dir: Direction,
    pub theta: f64,
    pub phi: f64,
}

/// Quadrature nodes and ω-weights on ℂP¹.
#[derive(Debug, Clone)]
pub struct DirectionGrid {
    pub nodes: Vec<GridNode>,
    pub weights: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl DirectionGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss–Legendre(cos θ) × uniform(φ) grid. Weights are ω-measure weights:
/// (Gauss weight)·(2π/n_phi)·(1/4), summing to π. No node sits at a pole.
pub fn make_grid(n_theta: usize, n_phi: usize) -> Result<DirectionGrid> {
    if n_theta < 8 {
        return Err(Error::GridSize { min: 8, got: n_theta });
    }
    if n_phi < 8 {
        return Err(Error::GridSize { min: 8, got: n_phi });
    }
    let (xs, ws) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    for (x, wx) in xs.iter().zip(&ws) {
        let theta = x.acos();
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            nodes.push(GridNode {
                dir: Direction::from_angles(theta, phi),
                theta,
                phi,
            });
            weights.push(wx * dphi / 4.0);
        }
    }
    Ok(DirectionGrid {
        nodes,
        weights,
        n_theta,
        n_phi,
    })
}

/// Σ values·weights by pairwise summation (bit-stable across thread counts).
pub fn integrate(values: &[f64], grid: &DirectionGrid) -> f64 {
    debug_assert_eq!(values.len(), grid.weights.len());
    let products: Vec<f64> = values
        .iter()
        .zip(&grid.weights)
        .map(|(v, w)| v * w)
        .collect();
    pairwise_sum(&products)
}

/// Δ_Θ u_t at every grid node.
///
/// Analytic through the chart sections for the kinds that carry closed
/// forms; second-order centered (θ, φ) stencils otherwise. `MaxOfLogs`
/// members are rejected.
pub fn sphere_laplacian(spec: &FunctionSpec, t: f64, grid: &DirectionGrid) -> Result<Vec<f64>> {
    spec.require_smooth("sphere_laplacian")?;
    let mut out = Vec::with_capacity(grid.len());
    for node in &grid.nodes {
        out.push(lap_theta_at(spec, t, node.theta, node.phi)?);
    }
    Ok(out)
}

/// Δ_Θ u at one spherical point.
pub fn lap_theta_at(spec: &FunctionSpec, t: f64, theta: f64, phi: f64) -> Result<f64> {
    spec.require_smooth("lap_theta_at")?;
    let d = Direction::from_angles(theta, phi);
    if let Some(fp) = derivs::fiber_point(spec, t, d.chart, d.w) {
        return Ok(fp.lap_theta);
    }
    match &spec.kind {
        // The smooth built-ins are radial: the analytic Laplacian vanishes.
        Kind::Custom { builtin: Builtin::SqNorm } => Ok(0.0),
        _ => lap_theta_fd(spec, t, theta, phi),
    }
}

/// Δ_Θ u by centered stencils: u_θθ + cot θ·u_θ + u_φφ/sin²θ.
fn lap_theta_fd(spec: &FunctionSpec, t: f64, theta: f64, phi: f64) -> Result<f64> {
    let h = 1e-4;
    let u = |th: f64, ph: f64| -> Result<f64> {
        let d = Direction::from_angles(th, ph);
        Ok(crate::catalog::profile(spec, t, &d)?.u)
    };
    let u0 = u(theta, phi)?;
    let utp = u(theta + h, phi)?;
    let utm = u(theta - h, phi)?;
    let upp = u(theta, phi + h)?;
    let upm = u(theta, phi - h)?;
    let u_tt = (utp - 2.0 * u0 + utm) / (h * h);
    let u_t = (utp - utm) / (2.0 * h);
    let u_pp = (upp - 2.0 * u0 + upm) / (h * h);
    let s = theta.sin();
    Ok(u_tt + theta.cos() / s * u_t + u_pp / (s * s))
}

/// Centered first or second differences of (t, value) samples; one-sided at
/// the ends. Requires a strictly increasing t-grid (not necessarily uniform).
pub fn t_derivative(ts: &[f64], values: &[f64], order: u8) -> Result<Vec<f64>> {
    if ts.len() < 3 || ts.len() != values.len() {
        return Err(Error::Spacing);
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Spacing);
    }
    let n = ts.len();
    let mut out = vec![0.0; n];
    match order {
        1 => {
            for i in 0..n {
                out[i] = if i == 0 {
                    (values[1] - values[0]) / (ts[1] - ts[0])
                } else if i == n - 1 {
                    (values[n - 1] - values[n - 2]) / (ts[n - 1] - ts[n - 2])
                } else {
                    // Three-point formula, exact for quadratics on uneven grids.
                    let (t0, t1, t2) = (ts[i - 1], ts[i], ts[i + 1]);
                    let (f0, f1, f2) = (values[i - 1], values[i], values[i + 1]);
                    let h1 = t1 - t0;
                    let h2 = t2 - t1;
                    (-h2 / (h1 * (h1 + h2))) * f0 + ((h2 - h1) / (h1 * h2)) * f1
                        + (h1 / (h2 * (h1 + h2))) * f2
                };
            }
        }
        2 => {
            for i in 0..n {
                let j = i.clamp(1, n - 2);
                let (t0, t1, t2) = (ts[j - 1], ts[j], ts[j + 1]);
                let (f0, f1, f2) = (values[j - 1], values[j], values[j + 1]);
                let h1 = t1 - t0;
                let h2 = t2 - t1;
                out[i] = 2.0 * (h2 * f0 - (h1 + h2) * f1 + h1 * f2) / (h1 * h2 * (h1 + h2));
            }
        }
        _ => return Err(Error::Config("t_derivative order must be 1 or 2".into())),
    }
    Ok(out)
}

/// Chart coordinate of a grid node seen from `chart` (used when windowing a
/// grid against a disc whose center lives in a specific chart).
pub fn node_in_chart(node: &GridNode, chart: Chart) -> Option<Complex64> {
    if node.dir.chart == chart {
        Some(node.dir.w)
    } else if node.dir.w.norm_sqr() == 0.0 {
        None
    } else {
        Some(node.dir.w.inv())
    }
}
