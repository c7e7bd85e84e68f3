//! Lelong-number estimators: ν_u(0, r), ν_u(0), directional slopes, M_A(u)
//! and λ_u(0).
//!
//! All limits here are monotone (ν(0, r) is nondecreasing in r, directional
//! slopes are nondecreasing in t, M_A is nonincreasing in A), so estimates
//! carry brackets from consecutive schedule samples instead of extrapolation.

use crate::catalog::{FunctionSpec, Kind, LineRestriction};
use crate::fiber::FiberIntegrator;
use crate::hopf::{point_from_hopf, Chart, Direction, RealHopf, FOUR_PI, TWO_PI};
use crate::math::{gauss_legendre, pairwise_sum};
use crate::quadrature::DirectionGrid;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// How a limit estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    /// The kind exposes exact asymptotic slopes; the value is the analytic
    /// limit and the bracket comes from the deepest finite samples.
    AnalyticTail,
    /// Reserved for model-based extrapolation (not used by default).
    Extrapolated,
    /// Value at the deepest grid sample, bracketed by the last two samples.
    GridLimit,
}

/// A limit estimate with a monotone bracket.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LelongEstimate {
    pub value: f64,
    pub bracket: (f64, f64),
    pub t_used: f64,
    pub method: EstimateMethod,
    /// False when the last two schedule samples still differ by more than
    /// 1e-3 relative.
    pub converged: bool,
}

/// ν_u(0, e^t): the Fubini–Study mean of u̇ over π for S¹-invariant members,
/// the full 3-sphere mean otherwise.
pub fn lelong_at_radius(spec: &FunctionSpec, t: f64, grid: &DirectionGrid) -> Result<f64> {
    if spec.flags.s1_invariant {
        let it = FiberIntegrator::new(spec)?;
        Ok(it.integrate(t, grid).i / PI)
    } else {
        sphere_mean_slope(spec, t)
    }
}

/// (1/2π²)∫_{S³} r∂_r u dσ₃ by (η, θ, φ) product quadrature with the exact
/// radial derivative along rays.
fn sphere_mean_slope(spec: &FunctionSpec, t: f64) -> Result<f64> {
    let n_theta = 48;
    let n_phi = 96;
    let n_eta = 48;
    let (xs, ws) = gauss_legendre(n_theta);
    let mut vals = Vec::with_capacity(n_theta * n_phi * n_eta);
    for (x, wx) in xs.iter().zip(&ws) {
        let theta = x.acos();
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * TWO_PI / n_phi as f64;
            for k in 0..n_eta {
                let eta = (k as f64 + 0.5) * FOUR_PI / n_eta as f64;
                let p = point_from_hopf(&RealHopf::new(t.exp(), eta, theta, phi));
                let dot = radial_slope_at(spec, &p, t)?;
                // dσ₃ = (1/8) sinθ dθ dφ dη; the Gauss weight carries d cosθ.
                vals.push(dot * wx / 8.0 * (TWO_PI / n_phi as f64) * (FOUR_PI / n_eta as f64));
            }
        }
    }
    Ok(pairwise_sum(&vals) / (2.0 * PI * PI))
}

/// r∂_r u at a point, via the gradient for holomorphic pairs and the line
/// restriction elsewhere.
fn radial_slope_at(spec: &FunctionSpec, p: &crate::hopf::Point, t: f64) -> Result<f64> {
    if let Some(pv) = spec.pair_view() {
        let f = pv.f.eval(p.z1, p.z2);
        let g = pv.g.eval(p.z1, p.z2);
        let (f1, f2) = pv.f.gradient();
        let (g1, g2) = pv.g.gradient();
        let s = f.norm_sqr() + g.norm_sqr();
        let num = p.z1 * (f1.eval(p.z1, p.z2) * f.conj() + g1.eval(p.z1, p.z2) * g.conj())
            + p.z2 * (f2.eval(p.z1, p.z2) * f.conj() + g2.eval(p.z1, p.z2) * g.conj());
        Ok(2.0 * pv.c * num.re / s)
    } else {
        let h = crate::hopf::hopf_from_point(p)?;
        let d = Direction::from_angles(h.theta, h.phi);
        Ok(LineRestriction::of(spec, &d).sample(t).1)
    }
}

/// The exact t → −∞ limit of ν(0, e^t) when the kind exposes one.
pub fn analytic_lelong_limit(spec: &FunctionSpec) -> Option<f64> {
    match &spec.kind {
        Kind::Radial { a } => Some(*a),
        Kind::Custom { .. } => Some(0.0),
        _ if spec.flags.s1_invariant => {
            let pv = spec.pair_view()?;
            if pv.f.is_homogeneous() && pv.g.is_homogeneous() {
                let dmin = pv.f.total_degree().min(pv.g.total_degree());
                Some(2.0 * pv.c * dmin as f64)
            } else {
                None
            }
        }
        _ => None,
    }
}

fn check_schedule_decreasing(schedule: &[f64], floor: f64) -> Result<()> {
    if schedule.len() < 2
        || schedule.windows(2).any(|w| w[1] >= w[0])
        || *schedule.last().unwrap() > floor
    {
        return Err(Error::Config(format!(
            "schedule must be strictly decreasing and reach {floor}"
        )));
    }
    Ok(())
}

/// ν_u(0) as the decreasing limit of ν_u(0, r) along the schedule.
pub fn lelong_number(
    spec: &FunctionSpec,
    schedule: &[f64],
    grid: &DirectionGrid,
) -> Result<LelongEstimate> {
    check_schedule_decreasing(schedule, -20.0)?;
    let n = schedule.len();
    let prev = lelong_at_radius(spec, schedule[n - 2], grid)?;
    let last = lelong_at_radius(spec, schedule[n - 1], grid)?;
    let converged = (last - prev).abs() <= 1e-3 * (1.0 + last.abs());
    let (value, method) = match analytic_lelong_limit(spec) {
        Some(v) => (v, EstimateMethod::AnalyticTail),
        None => (last, EstimateMethod::GridLimit),
    };
    Ok(LelongEstimate {
        value,
        bracket: (value.min(last) - (prev - last).abs(), last.max(value)),
        t_used: schedule[n - 1],
        method,
        converged,
    })
}

/// ∂_t⁺ u_t(ζ) at t: analytic along the line restriction for kinds with
/// closed forms, forward difference (h = 1e-5) otherwise.
pub fn directional_slope(spec: &FunctionSpec, d: &Direction, t: f64) -> f64 {
    let lr = LineRestriction::of(spec, d);
    match spec.kind {
        Kind::Custom { .. } => {
            let h = 1e-5;
            (lr.sample(t + h).0 - lr.sample(t).0) / h
        }
        _ => lr.sample(t).1,
    }
}

/// Directions along which the vanishing order of f or g jumps: roots of the
/// leading line-restriction coefficient in each chart. Grids miss these by
/// construction, so the max search probes them explicitly.
pub fn exceptional_directions(spec: &FunctionSpec) -> Vec<Direction> {
    let mut out = Vec::new();
    let Some(pv) = spec.pair_view() else {
        return out;
    };
    for chart in [Chart::Zeta, Chart::Xi] {
        for poly in [&pv.f, &pv.g] {
            // The leading order generically: the smallest λ-power whose
            // coefficient polynomial (in the direction) is nonzero.
            let deg = poly.total_degree() as usize;
            let mut lead: Option<crate::catalog::poly::Poly1> = None;
            for k in 0..=deg {
                let mut c = vec![Complex64::new(0.0, 0.0); deg + 1];
                for m in &poly.terms {
                    if (m.p + m.q) as usize == k {
                        let idx = match chart {
                            Chart::Zeta => m.p,
                            Chart::Xi => m.q,
                        } as usize;
                        c[idx] += m.coeff;
                    }
                }
                let p1 = crate::catalog::poly::Poly1::new(c);
                if !p1.is_zero() {
                    lead = Some(p1);
                    break;
                }
            }
            if let Some(p1) = lead {
                for root in p1.roots() {
                    let keep = match chart {
                        Chart::Zeta => root.norm() <= 1.0 + 1e-9,
                        Chart::Xi => root.norm() < 1.0 - 1e-9,
                    };
                    if keep {
                        out.push(Direction { chart, w: root });
                    }
                }
            }
        }
    }
    out
}

/// M_A(u): the maximal directional slope at t = −A over the grid directions,
/// the two chart poles and the exceptional directions.
pub fn max_directional(spec: &FunctionSpec, a: f64, grid: &DirectionGrid) -> Result<f64> {
    if a <= 0.0 {
        return Err(Error::Config("A must be positive".into()));
    }
    let t = -a;
    let mut best = f64::NEG_INFINITY;
    for node in &grid.nodes {
        best = best.max(directional_slope(spec, &node.dir, t));
    }
    for d in [
        Direction::zeta(Complex64::new(0.0, 0.0)),
        Direction::xi(Complex64::new(0.0, 0.0)),
    ] {
        best = best.max(directional_slope(spec, &d, t));
    }
    for d in exceptional_directions(spec) {
        best = best.max(directional_slope(spec, &d, t));
    }
    Ok(best)
}

/// The exact λ_u(0) when the kind exposes tail slopes in every direction.
pub fn analytic_lambda_limit(spec: &FunctionSpec) -> Option<f64> {
    match &spec.kind {
        Kind::Radial { a } => Some(*a),
        Kind::Custom { .. } => Some(0.0),
        Kind::MaxOfLogs { .. } | Kind::SmoothedMax { .. } | Kind::HolomorphicPairLog { .. } => {
            // Tail slopes are exact along every line; the sup is attained on
            // a pole or exceptional direction (or a generic one).
            let mut cands = vec![
                Direction::zeta(Complex64::new(0.0, 0.0)),
                Direction::xi(Complex64::new(0.0, 0.0)),
                Direction::zeta(Complex64::new(0.37, 0.21)),
            ];
            cands.extend(exceptional_directions(spec));
            cands
                .iter()
                .map(|d| LineRestriction::of(spec, d).tail_slope())
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        }
    }
}

/// λ_u(0): the decreasing limit of M_A(u) along an increasing A-schedule.
pub fn lambda_origin(
    spec: &FunctionSpec,
    a_schedule: &[f64],
    grid: &DirectionGrid,
) -> Result<LelongEstimate> {
    if a_schedule.len() < 2
        || a_schedule.windows(2).any(|w| w[1] <= w[0])
        || *a_schedule.last().unwrap() < 20.0
    {
        return Err(Error::Config(
            "A-schedule must be strictly increasing and reach 20".into(),
        ));
    }
    let n = a_schedule.len();
    let prev = max_directional(spec, a_schedule[n - 2], grid)?;
    let last = max_directional(spec, a_schedule[n - 1], grid)?;
    let converged = (last - prev).abs() <= 1e-3 * (1.0 + last.abs());
    let (value, method) = match analytic_lambda_limit(spec) {
        Some(v) => (v, EstimateMethod::AnalyticTail),
        None => (last, EstimateMethod::GridLimit),
    };
    Ok(LelongEstimate {
        value,
        bracket: (value.min(last) - (prev - last).abs(), last.max(value)),
        t_used: -a_schedule[n - 1],
        method,
        converged,
    })
}
