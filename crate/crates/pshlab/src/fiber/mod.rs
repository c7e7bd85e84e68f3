//! Boundary-sphere calculus: the 3-form density on S_R and the
//! decomposition of the Monge–Ampère boundary mass into the fiber
//! functionals I, J, 𝓔, K at fixed t = log r.
//!
//! The central identity is
//!
//! ```text
//! (1/π)∫_{S_R} d^c u ∧ dd^c u = 2∫ u̇_t (Δ_ω u_t) ω + ∫ (u̇_t)² ω
//! ```
//!
//! whose left side this module also integrates independently through the
//! 3-form density, giving the internal consistency check of the calculus.

pub mod analytic;

pub use analytic::{FiberIntegrator, FiberSums};

use crate::catalog::{derivs, Builtin, FunctionSpec, Kind};
use crate::hopf::{Chart, Direction, RealHopf};
use crate::quadrature::{integrate, lap_theta_at, DirectionGrid};
use crate::{Error, Result};
use std::f64::consts::PI;

/// The fiber functionals of one member at one log-radius.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct FunctionalRecord {
    pub t: f64,
    /// I_u(t) = ∫ u̇ ω
    pub i: f64,
    /// J_u(t) = ∫ u̇² ω
    pub j: f64,
    /// 𝓔(u_t) = −∫ u Δ_ω u ω
    pub e: f64,
    /// 2∫ u̇ Δ_ω u ω = −d𝓔/dt
    pub cross: f64,
    /// K(u_t) = cross + J = π⁻¹·MA(u)(B_{e^t})
    pub k: f64,
    /// ν_u(0, e^t) = I/π
    pub nu_r: f64,
    /// 𝓘(u_t) = ∫ u ω
    pub script_i: f64,
    /// Secondary energy estimator ∫ du ∧ d^c u (gradient form)
    #[serde(skip)]
    pub e_grad: f64,
    /// I′_u(t) = ∫ ü ω
    #[serde(skip)]
    pub i_prime: f64,
    /// Independently integrated boundary mass over π (3-form path)
    #[serde(skip)]
    pub k3: f64,
}

impl FunctionalRecord {
    fn from_sums(t: f64, s: &FiberSums) -> FunctionalRecord {
        FunctionalRecord {
            t,
            i: s.i,
            j: s.j,
            e: s.e_lap,
            cross: s.cross,
            k: s.cross + s.j,
            nu_r: s.i / PI,
            script_i: s.script_i,
            e_grad: s.e_grad,
            i_prime: s.i_prime,
            k3: s.k3,
        }
    }
}

/// Sampled fiber data over a grid at fixed t.
#[derive(Debug, Clone)]
pub struct FiberField {
    pub t: f64,
    pub u: Vec<f64>,
    pub u_dot: Vec<f64>,
    /// Δ_Θ u_t per node.
    pub lap: Vec<f64>,
}

/// Sample u, u̇ and Δ_Θ u at every node of the grid.
pub fn fiber_field(spec: &FunctionSpec, t: f64, grid: &DirectionGrid) -> Result<FiberField> {
    spec.require_smooth("fiber_field")?;
    if !spec.flags.s1_invariant {
        return Err(Error::NotInvariant {
            name: spec.name.clone(),
            violation: f64::NAN,
        });
    }
    let mut u = Vec::with_capacity(grid.len());
    let mut u_dot = Vec::with_capacity(grid.len());
    let mut lap = Vec::with_capacity(grid.len());
    for node in &grid.nodes {
        if let Some(fp) = derivs::fiber_point(spec, t, node.dir.chart, node.dir.w) {
            u.push(fp.u);
            u_dot.push(fp.u_dot);
            lap.push(fp.lap_theta);
        } else {
            let p = crate::catalog::profile(spec, t, &node.dir)?;
            u.push(p.u);
            u_dot.push(p.u_dot);
            lap.push(lap_theta_at(spec, t, node.theta, node.phi)?);
        }
    }
    Ok(FiberField { t, u, u_dot, lap })
}

/// Functional record by plain quadrature of a sampled field. Adequate when
/// the grid resolves the member at this t; the catalog-aware
/// [`functionals`] upgrades to the layer-resolved composite scheme.
pub fn functionals_from_field(field: &FiberField, grid: &DirectionGrid) -> FunctionalRecord {
    let lap_omega: Vec<f64> = field.lap.iter().map(|l| 2.0 * l).collect();
    let i = integrate(&field.u_dot, grid);
    let j_vals: Vec<f64> = field.u_dot.iter().map(|d| d * d).collect();
    let j = integrate(&j_vals, grid);
    let cross_vals: Vec<f64> = field
        .u_dot
        .iter()
        .zip(&lap_omega)
        .map(|(d, l)| 2.0 * d * l)
        .collect();
    let cross = integrate(&cross_vals, grid);
    let e_vals: Vec<f64> = field
        .u
        .iter()
        .zip(&lap_omega)
        .map(|(u, l)| -u * l)
        .collect();
    let e = integrate(&e_vals, grid);
    let script_i = integrate(&field.u, grid);
    FunctionalRecord {
        t: field.t,
        i,
        j,
        e,
        cross,
        k: cross + j,
        nu_r: i / PI,
        script_i,
        e_grad: f64::NAN,
        i_prime: f64::NAN,
        k3: f64::NAN,
    }
}

/// The functional record of a catalog member at log-radius t.
///
/// Analytic members go through the composite integrator, which resolves the
/// exponentially thin boundary layers that carry the Monge–Ampère mass at
/// deep t; smooth members without closed forms use the sampled field.
pub fn functionals(spec: &FunctionSpec, t: f64, grid: &DirectionGrid) -> Result<FunctionalRecord> {
    let it = FiberIntegrator::new(spec)?;
    Ok(FunctionalRecord::from_sums(t, &it.integrate(t, grid)))
}

/// The density of 8·d^c u ∧ dd^c u against i dζ∧dζ̄∧dη at a real Hopf point:
///
/// ```text
/// 2(u̇·u_{,ζζ̄} − Re{(∂_ζ̄u)(u̇)_{,ζ}}) + u̇²/(1+|ζ|²)².
/// ```
pub fn threeform_density(spec: &FunctionSpec, h: &RealHopf) -> Result<f64> {
    spec.require_smooth("threeform_density")?;
    let d = Direction::from_angles(h.theta, h.phi);
    let fp = match derivs::fiber_point(spec, h.t(), d.chart, d.w) {
        Some(fp) => fp,
        None => match &spec.kind {
            Kind::Custom { builtin: Builtin::SqNorm } => {
                derivs::custom_fiber_point(Builtin::SqNorm, h.t(), spec.shift, d.w)
            }
            _ => {
                return Err(Error::NotSmooth {
                    name: spec.name.clone(),
                    kind: spec.kind.name(),
                })
            }
        },
    };
    Ok(2.0 * (fp.u_dot * fp.u_zzbar - (fp.u_z.conj() * fp.udot_z).re)
        + fp.u_dot * fp.u_dot / (fp.v * fp.v))
}

/// Independently integrated 3-form boundary mass over π: integrating the
/// density over S_{e^t} with the η-factor and the fiber measure gives
/// ∫ density·(1+|ζ|²)²·ω, which the decomposition says equals K(u_t).
pub fn threeform_mass(spec: &FunctionSpec, t: f64, grid: &DirectionGrid) -> Result<f64> {
    let it = FiberIntegrator::new(spec)?;
    Ok(it.integrate(t, grid).k3)
}

/// Coefficients of 4·d^c u restricted to S_r in the real Hopf coframe
/// (dη, dφ, dθ):
///
/// ```text
/// 4 d^c u = (ru_r) dη + (2 sinθ·u_θ − cosθ·ru_r) dφ − (2u_φ/sinθ) dθ.
/// ```
pub fn dc_form_components(spec: &FunctionSpec, h: &RealHopf) -> Result<(f64, f64, f64)> {
    spec.require_smooth("dc_form_components")?;
    let d = Direction::from_angles(h.theta, h.phi);
    let fp = match derivs::fiber_point(spec, h.t(), d.chart, d.w) {
        Some(fp) => fp,
        None => match &spec.kind {
            Kind::Custom { builtin: Builtin::SqNorm } => {
                derivs::custom_fiber_point(Builtin::SqNorm, h.t(), spec.shift, d.w)
            }
            _ => {
                return Err(Error::NotSmooth {
                    name: spec.name.clone(),
                    kind: spec.kind.name(),
                })
            }
        },
    };
    // Angular derivatives from the chart derivative u_z.
    let (u_theta, u_phi) = match d.chart {
        Chart::Zeta => {
            let e = num_complex::Complex64::from_polar(1.0, h.phi);
            (
                fp.v * (fp.u_z * e).re,
                -2.0 * (d.w * fp.u_z).im,
            )
        }
        Chart::Xi => {
            let e = num_complex::Complex64::from_polar(1.0, -h.phi);
            (
                -fp.v * (fp.u_z * e).re,
                2.0 * (d.w * fp.u_z).im,
            )
        }
    };
    let ru_r = fp.u_dot;
    let c_eta = ru_r;
    let c_phi = 2.0 * h.theta.sin() * u_theta - h.theta.cos() * ru_r;
    let c_theta = -2.0 * u_phi / h.theta.sin();
    Ok((c_eta, c_phi, c_theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{demailly, radial, sqnorm, u1, u2};
    use crate::quadrature::make_grid;
    use approx::assert_relative_eq;

    #[test]
    fn log_abs_record_is_exact() {
        let g = make_grid(16, 32).unwrap();
        let spec = radial(1.0);
        let r = functionals(&spec, -1.0, &g).unwrap();
        assert_relative_eq!(r.i, PI);
        assert_relative_eq!(r.j, PI);
        assert_relative_eq!(r.cross, 0.0);
        assert_relative_eq!(r.k, PI);
        assert_relative_eq!(r.nu_r, 1.0);
        assert_relative_eq!(r.e, 0.0);
    }

    #[test]
    fn sqnorm_record_matches_closed_forms() {
        let g = make_grid(16, 32).unwrap();
        let spec = sqnorm();
        let t = -1.0;
        let r = functionals(&spec, t, &g).unwrap();
        let e2 = (2.0f64 * t).exp();
        assert_relative_eq!(r.i, 2.0 * PI * e2, epsilon = 1e-12);
        assert_relative_eq!(r.j, 4.0 * PI * e2 * e2, epsilon = 1e-12);
        assert_relative_eq!(r.cross, 0.0);
        assert_relative_eq!(r.k, 4.0 * PI * e2 * e2, epsilon = 1e-12);
    }

    #[test]
    fn fiber_field_samples_are_sane() {
        let g = make_grid(16, 32).unwrap();
        for spec in [radial(1.0), demailly(2), u2(5), sqnorm()] {
            let f = fiber_field(&spec, -1.0, &g).unwrap();
            assert!(f.u_dot.iter().all(|&d| d >= -1e-9), "{}", spec.name);
            assert!(f.u.iter().all(|u| u.is_finite()));
        }
        assert!(fiber_field(&crate::catalog::coman_guedj(5), -1.0, &g).is_err());
        assert!(fiber_field(&crate::catalog::demailly_max(2), -1.0, &g).is_err());
    }

    #[test]
    fn naive_field_quadrature_matches_composite_when_resolved() {
        // At shallow t the layers are fat and the plain sampled-field record
        // agrees with the composite integrator.
        let g = make_grid(96, 192).unwrap();
        let spec = demailly(2);
        let t = -0.5;
        let naive = functionals_from_field(&fiber_field(&spec, t, &g).unwrap(), &g);
        let composite = functionals(&spec, t, &g).unwrap();
        assert_relative_eq!(naive.i, composite.i, max_relative = 1e-8);
        assert_relative_eq!(naive.j, composite.j, max_relative = 1e-8);
        assert_relative_eq!(naive.k, composite.k, max_relative = 1e-5);
    }

    #[test]
    fn demailly_boundary_layer_profile() {
        // At t=-10 the slope sits near 1/2 away from the ζ=0 pole and rises
        // to 2 inside the boundary layer.
        let spec = demailly(2);
        let g = make_grid(32, 64).unwrap();
        let f = fiber_field(&spec, -10.0, &g).unwrap();
        let generic_ok = f
            .u_dot
            .iter()
            .filter(|&&d| (d - 0.5).abs() < 1e-3)
            .count();
        assert!(generic_ok > f.u_dot.len() * 9 / 10);
        let pole = crate::catalog::profile(&spec, -10.0, &Direction::zeta(num_complex::Complex64::new(0.0, 0.0))).unwrap();
        assert_relative_eq!(pole.u_dot, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn demailly_deep_mass_reaches_paper_value() {
        // K(u_t) → π τ with τ = 1 for the Demailly surrogate; the layer at
        // t=-30 has radius ~e^{-90} and is reachable only through the
        // composite scheme.
        let g = make_grid(64, 128).unwrap();
        let r = functionals(&demailly(2), -30.0, &g).unwrap();
        assert_relative_eq!(r.k / PI, 1.0, max_relative = 5e-3);
        assert_relative_eq!(r.nu_r, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn threeform_density_examples() {
        // log|z|: density = 1/(1+|ζ|²)².
        let h = RealHopf::new(0.3, 0.7, 1.1, 0.4);
        let v = 1.0 + (1.1f64 / 2.0).tan().powi(2);
        let d = threeform_density(&radial(1.0), &h).unwrap();
        assert_relative_eq!(d, 1.0 / (v * v), epsilon = 1e-12);
        // a log|z|: a²/(1+|ζ|²)².
        let d = threeform_density(&radial(2.0), &h).unwrap();
        assert_relative_eq!(d, 4.0 / (v * v), epsilon = 1e-12);

        let max = crate::catalog::demailly_max(2);
        assert!(threeform_density(&max, &h).is_err());
    }

    #[test]
    fn dc_form_components_examples() {
        // log|z|: (1, −cosθ, 0).
        let h = RealHopf::new(0.5, 0.0, 1.0, 0.7);
        let (ce, cp, ct) = dc_form_components(&radial(1.0), &h).unwrap();
        assert_relative_eq!(ce, 1.0);
        assert_relative_eq!(cp, -(1.0f64).cos());
        assert_relative_eq!(ct, 0.0);

        // |z|² at radius r: (2r², −2r² cosθ, 0).
        let h = RealHopf::new(0.4, 0.0, 2.0, 1.3);
        let (ce, cp, ct) = dc_form_components(&sqnorm(), &h).unwrap();
        assert_relative_eq!(ce, 2.0 * 0.16, epsilon = 1e-12);
        assert_relative_eq!(cp, -2.0 * 0.16 * (2.0f64).cos(), epsilon = 1e-12);
        assert_relative_eq!(ct, 0.0);

        // Toric members have no φ-dependence: c_theta = 0.
        let h = RealHopf::new(0.3, 0.0, 1.2, 0.9);
        let (_, _, ct) = dc_form_components(&demailly(2), &h).unwrap();
        assert_relative_eq!(ct, 0.0, epsilon = 1e-12);

        // dc components transform consistently across the chart switch.
        let hq = RealHopf::new(0.3, 0.0, 2.4, 0.9);
        let (ce, cp, ct) = dc_form_components(&u1(5), &hq).unwrap();
        let fd = |dth: f64, dph: f64| {
            let d = Direction::from_angles(hq.theta + dth, hq.phi + dph);
            crate::catalog::profile(&u1(5), hq.t(), &d).unwrap().u
        };
        let h_fd = 1e-6;
        let u_theta = (fd(h_fd, 0.0) - fd(-h_fd, 0.0)) / (2.0 * h_fd);
        let u_phi = (fd(0.0, h_fd) - fd(0.0, -h_fd)) / (2.0 * h_fd);
        let dot = crate::catalog::profile(&u1(5), hq.t(), &Direction::from_angles(hq.theta, hq.phi))
            .unwrap()
            .u_dot;
        assert_relative_eq!(ce, dot, epsilon = 1e-9);
        assert_relative_eq!(cp, 2.0 * hq.theta.sin() * u_theta - hq.theta.cos() * dot, epsilon = 1e-6);
        assert_relative_eq!(ct, -2.0 * u_phi / hq.theta.sin(), epsilon = 1e-6);
    }

    #[test]
    fn cauchy_schwarz_and_monotonicity_along_t() {
        let g = make_grid(96, 192).unwrap();
        for spec in [radial(0.5), demailly(2), u1(5), u2(5), sqnorm()] {
            let ts: Vec<f64> = (0..14).map(|k| -8.0 + 0.5 * k as f64).collect();
            let recs: Vec<FunctionalRecord> = ts
                .iter()
                .map(|&t| functionals(&spec, t, &g).unwrap())
                .collect();
            for r in &recs {
                assert!(r.i >= 0.0 && r.j >= 0.0);
                assert!(
                    r.j * PI >= r.i * r.i - 1e-8 * (1.0 + r.j),
                    "{}: Cauchy–Schwarz J ≥ I²/π failed",
                    spec.name
                );
                assert_relative_eq!(r.k, r.cross + r.j);
            }
            for w in recs.windows(2) {
                assert!(w[1].i >= w[0].i - 1e-8, "{}: I not monotone", spec.name);
                assert!(w[1].j >= w[0].j - 1e-8, "{}: J not monotone", spec.name);
            }
            // Radial members: Cauchy–Schwarz equality.
            if matches!(spec.kind, Kind::Radial { .. }) {
                for r in &recs {
                    assert_relative_eq!(r.j * PI, r.i * r.i, epsilon = 1e-9);
                }
            }
        }
    }
}
