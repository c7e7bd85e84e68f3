//! Independent Monge–Ampère mass estimators and the theorem-bound report.
//!
//! Nothing here uses the fiber decomposition: the density path integrates
//! 8·det(complex Hessian) over shells, the boundary path integrates the
//! 3-form over S_r directly, and the toric path is a 1D reduction in θ.
//! The residual-mass estimator then cross-validates the decomposition's
//! K-functional against these oracles and checks
//! ν² ≤ τ ≤ 2λν + ν².

pub mod boundary;

pub use boundary::{boundary_mass, tubes_for, AmbientDerivs, BoundaryConfig};

use crate::catalog::{check_s1_invariance, FunctionSpec, InvarianceVerdict, Kind};
use crate::fiber::FiberIntegrator;
use crate::hopf::{point_from_hopf, Point, RealHopf, FOUR_PI, TWO_PI};
use crate::lelong::{lambda_origin, lelong_number, LelongEstimate};
use crate::math::{gauss_legendre, gauss_legendre_on, log_add_exp, pairwise_sum, sigmoid, sigmoid_prod};
use crate::quadrature::DirectionGrid;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Density of (dd^c u)² against 4D Lebesgue measure: 8·det of the complex
/// Hessian. Nonnegative for plurisubharmonic u up to rounding.
pub fn ma_density(spec: &FunctionSpec, p: &Point) -> Result<f64> {
    let d = boundary::ambient_derivs(spec, p)?;
    let det = d.hess[0][0] * d.hess[1][1] - d.hess[0][1] * d.hess[1][0];
    Ok(8.0 * det.re)
}

/// How the shell integral of `ma_mass_ball` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellMethod {
    Grid4D,
    MonteCarlo,
}

/// A mass value with an error estimate from refinement or sampling.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MassValue {
    pub value: f64,
    pub error_estimate: f64,
    /// True when the shell density integral was below tolerance and the
    /// value is carried by the boundary term alone.
    pub atomic_shortcut: bool,
}

/// Default inner shell radius.
pub const DEFAULT_R0: f64 = 4.5399929762484854e-5; // e^{-10}

/// MA(u)(B_r) = shell density integral over r₀ < |z| < r plus the boundary
/// mass at r₀ from the independent 3-form oracle.
pub fn ma_mass_ball(
    spec: &FunctionSpec,
    r: f64,
    method: ShellMethod,
    seed: u64,
) -> Result<MassValue> {
    spec.require_smooth("ma_mass_ball")?;
    if !(0.0 < r && r < 1.0) {
        return Err(Error::Domain { r, domain: "(0, 1)" });
    }
    let r0 = DEFAULT_R0.min(r / 2.0);
    let (shell, shell_err) = match method {
        ShellMethod::Grid4D => shell_grid(spec, r0, r)?,
        ShellMethod::MonteCarlo => shell_monte_carlo(spec, r0, r, seed)?,
    };
    let cfg = BoundaryConfig::default();
    let boundary = boundary_mass(spec, r0, &cfg)?;
    let atomic = shell.abs() < 1e-6 * boundary.abs().max(1e-12);
    Ok(MassValue {
        value: shell + boundary,
        error_estimate: shell_err + 1e-2 * boundary.abs(),
        atomic_shortcut: atomic,
    })
}

/// Product quadrature of the density over the shell, log-spaced in radius.
fn shell_grid(spec: &FunctionSpec, r0: f64, r1: f64) -> Result<(f64, f64)> {
    let run = |n_r: usize, n_theta: usize, n_phi: usize, n_eta: usize| -> Result<f64> {
        let (ts, tw) = gauss_legendre_on(n_r, r0.ln(), r1.ln());
        let (xs, ws) = gauss_legendre(n_theta);
        let mut tasks = Vec::new();
        for (t, wt) in ts.iter().zip(&tw) {
            for (x, wx) in xs.iter().zip(&ws) {
                tasks.push((*t, x.acos(), wt * wx));
            }
        }
        let vals: Result<Vec<f64>> = tasks
            .par_iter()
            .map(|&(t, theta, w)| -> Result<f64> {
                let r = t.exp();
                let mut acc = 0.0;
                for j in 0..n_phi {
                    let phi = (j as f64 + 0.5) * TWO_PI / n_phi as f64;
                    for k in 0..n_eta {
                        let eta = (k as f64 + 0.5) * FOUR_PI / n_eta as f64;
                        let p = point_from_hopf(&RealHopf::new(r, eta, theta, phi));
                        acc += ma_density(spec, &p)?;
                    }
                }
                // dλ = r³ dr dσ₃-density; with dr = r dt and the (θ,φ,η)
                // measure sinθ/8 dθ dφ dη absorbed in the weights.
                Ok(acc * w * r.powi(4) / 8.0 * (TWO_PI / n_phi as f64) * (FOUR_PI / n_eta as f64))
            })
            .collect();
        Ok(pairwise_sum(&vals?))
    };
    let coarse = run(24, 16, 12, 8)?;
    let fine = run(32, 24, 16, 8)?;
    Ok((fine, (fine - coarse).abs()))
}

/// Monte Carlo shell integral with the recorded seed.
fn shell_monte_carlo(spec: &FunctionSpec, r0: f64, r1: f64, seed: u64) -> Result<(f64, f64)> {
    let n = 200_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = Vec::with_capacity(n);
    let volume = PI * PI / 2.0 * (r1.powi(4) - r0.powi(4));
    for _ in 0..n {
        // Uniform in the 4-ball shell: radius via inverse cdf of r³dr.
        let u: f64 = rng.gen();
        let r = (r0.powi(4) + u * (r1.powi(4) - r0.powi(4))).powf(0.25);
        let theta = (1.0f64 - 2.0 * rng.gen::<f64>()).acos();
        let phi = rng.gen_range(0.0..TWO_PI);
        let eta = rng.gen_range(0.0..FOUR_PI);
        let p = point_from_hopf(&RealHopf::new(r, eta, theta, phi));
        vals.push(ma_density(spec, &p)?);
    }
    let mean = pairwise_sum(&vals) / n as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    Ok((mean * volume, volume * (var / n as f64).sqrt()))
}

/// Monomial data of a toric member: |f|² = |c_f|² r^{2d_f} sin^{2p}(θ/2) cos^{2q}(θ/2).
struct ToricSide {
    log_c2: f64,
    d: f64,
    p: f64,
    q: f64,
}

struct ToricPair {
    c: f64,
    lo: ToricSide,
    hi: ToricSide,
}

impl ToricPair {
    fn of(spec: &FunctionSpec) -> Result<ToricPair> {
        if !spec.flags.toric {
            return Err(Error::NotToric { name: spec.name.clone() });
        }
        let pv = spec.pair_view().ok_or_else(|| Error::NotToric { name: spec.name.clone() })?;
        let side = |poly: &crate::catalog::poly::Poly2| -> ToricSide {
            let m = &poly.terms[0];
            ToricSide {
                log_c2: 2.0 * m.coeff.norm().ln(),
                d: (m.p + m.q) as f64,
                p: m.p as f64,
                q: m.q as f64,
            }
        };
        Ok(ToricPair {
            c: pv.c,
            lo: side(&pv.f),
            hi: side(&pv.g),
        })
    }

    /// σ-point data at (t, θ): (σ, u̇, ü, u_θ, sinθ·Lap1D, ∂_θu̇).
    fn point(&self, t: f64, theta: f64) -> (f64, f64, f64, f64, f64, f64) {
        let ls = (theta / 2.0).sin().ln();
        let lc = (theta / 2.0).cos().ln();
        let la = self.lo.log_c2 + 2.0 * self.lo.d * t + 2.0 * self.lo.p * ls + 2.0 * self.lo.q * lc;
        let lb = self.hi.log_c2 + 2.0 * self.hi.d * t + 2.0 * self.hi.p * ls + 2.0 * self.hi.q * lc;
        let w = lb - la;
        let s = sigmoid(w);
        let sp = sigmoid_prod(w);
        let cot = 1.0 / (theta / 2.0).tan();
        let tan = (theta / 2.0).tan();
        let a_th = self.lo.p * cot - self.lo.q * tan;
        let b_th = self.hi.p * cot - self.hi.q * tan;
        let dd = self.hi.d - self.lo.d;
        let u_dot = 2.0 * self.c * (self.lo.d * (1.0 - s) + self.hi.d * s);
        let u_ddot = 4.0 * self.c * dd * dd * sp;
        let u_theta = self.c * ((1.0 - s) * a_th + s * b_th);
        // Δ_Θ (toric) = c[−(1−σ)d_lo − σ d_hi + σ(1−σ)(b_θ−a_θ)²]; the
        // boundary form needs sinθ·Δ_Θ.
        let lap = self.c
            * (-(1.0 - s) * self.lo.d - s * self.hi.d + sp * (b_th - a_th) * (b_th - a_th));
        let udot_theta = 2.0 * self.c * dd * sp * (b_th - a_th);
        (s, u_dot, u_ddot, u_theta, theta.sin() * lap, udot_theta)
    }

    /// u at (t, θ), shift excluded.
    fn u(&self, t: f64, theta: f64) -> f64 {
        let ls = (theta / 2.0).sin().ln();
        let lc = (theta / 2.0).cos().ln();
        let la = self.lo.log_c2 + 2.0 * self.lo.d * t + 2.0 * self.lo.p * ls + 2.0 * self.lo.q * lc;
        let lb = self.hi.log_c2 + 2.0 * self.hi.d * t + 2.0 * self.hi.p * ls + 2.0 * self.hi.q * lc;
        self.c * log_add_exp(la, lb)
    }
}

/// Nodes in x = log tan(θ/2), covering any boundary layer at the poles.
fn toric_theta_nodes(pair: &ToricPair, t: f64, n_per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    // Balance points at each pole in the x-variable (σ-transitions).
    let balance = |sin_side: bool| -> f64 {
        let (dp, dq) = (pair.hi.p - pair.lo.p, pair.hi.q - pair.lo.q);
        let num = pair.hi.log_c2 - pair.lo.log_c2 + 2.0 * (pair.hi.d - pair.lo.d) * t;
        if sin_side {
            if dp.abs() < 1e-12 {
                return 0.0;
            }
            -num / (2.0 * dp)
        } else {
            if dq.abs() < 1e-12 {
                return 0.0;
            }
            num / (2.0 * dq)
        }
    };
    let x_lo = (balance(true).min(0.0) - 45.0).max(-320.0);
    let x_hi = (balance(false).max(0.0) + 45.0).min(320.0);
    let panel = 1.25;
    let n_panels = ((x_hi - x_lo) / panel).ceil() as usize;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for k in 0..n_panels {
        let a = x_lo + (x_hi - x_lo) * k as f64 / n_panels as f64;
        let b = x_lo + (x_hi - x_lo) * (k + 1) as f64 / n_panels as f64;
        let (xs, ws) = gauss_legendre_on(n_per_panel, a, b);
        for (x, w) in xs.iter().zip(&ws) {
            // θ(x) = 2 atan(e^x); dθ = sinθ dx.
            let theta = 2.0 * x.exp().atan();
            nodes.push(theta);
            weights.push(w * theta.sin());
        }
    }
    (nodes, weights)
}

/// 1D toric reduction of MA(u)(B_r): shell part over [r₀, r] plus the
/// boundary 3-form reduced to a θ-integral.
pub fn toric_mass(spec: &FunctionSpec, r: f64, n_theta: usize) -> Result<f64> {
    spec.require_smooth("toric_mass")?;
    let pair = ToricPair::of(spec)?;
    let r0 = DEFAULT_R0.min(r / 2.0);
    let t0 = r0.ln();
    let t1 = r.ln();
    // Boundary at r₀: MA = 2π²·T₁ + (π²/2)·T₂, with
    // T₁ = ∫ u̇ ∂_θ(sinθ u_θ) dθ and T₂ = ∫ u̇² sinθ dθ.
    let per_node = n_theta.clamp(8, 64);
    let (thetas, wts) = toric_theta_nodes(&pair, t0, per_node.min(16));
    let mut t1_vals = Vec::with_capacity(thetas.len());
    let mut t2_vals = Vec::with_capacity(thetas.len());
    for (theta, w) in thetas.iter().zip(&wts) {
        let (_, u_dot, _, _, sin_lap, _) = pair.point(t0, *theta);
        t1_vals.push(u_dot * sin_lap * w);
        t2_vals.push(u_dot * u_dot * theta.sin() * w);
    }
    let boundary = 2.0 * PI * PI * pairwise_sum(&t1_vals) + PI * PI / 2.0 * pairwise_sum(&t2_vals);
    // Shell: π²∫dt∫dθ [2ü ∂_θ(sinθ u_θ) − 2 sinθ (∂_θu̇)² + ü u̇ sinθ].
    let n_t_panels = ((t1 - t0) / 0.5).ceil() as usize;
    let mut shell_vals = Vec::new();
    for k in 0..n_t_panels {
        let a = t0 + (t1 - t0) * k as f64 / n_t_panels as f64;
        let b = t0 + (t1 - t0) * (k + 1) as f64 / n_t_panels as f64;
        let (ts, tws) = gauss_legendre_on(10, a, b);
        for (t, tw) in ts.iter().zip(&tws) {
            let (thetas, wts) = toric_theta_nodes(&pair, *t, 12);
            let mut acc = Vec::with_capacity(thetas.len());
            for (theta, w) in thetas.iter().zip(&wts) {
                let (_, u_dot, u_ddot, _, sin_lap, udot_th) = pair.point(*t, *theta);
                acc.push(
                    (2.0 * u_ddot * sin_lap - 2.0 * theta.sin() * udot_th * udot_th
                        + u_ddot * u_dot * theta.sin())
                        * w,
                );
            }
            shell_vals.push(pairwise_sum(&acc) * tw);
        }
    }
    let shell = PI * PI * pairwise_sum(&shell_vals);
    Ok(boundary + shell)
}

/// How τ was estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMethod {
    BoundaryK,
    VolumeOracle,
    ToricOracle,
}

/// Residual-mass estimate with bracket and cross-check.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TauEstimate {
    pub tau: f64,
    pub bracket: (f64, f64),
    pub method: TauMethod,
    /// Relative disagreement of the independent volume oracle at the
    /// shallow cross-check radius (None when the oracle was the method).
    pub volume_check: Option<f64>,
    pub converged: bool,
}

/// τ_u(0) = lim (1/π²) MA(u)(B_r).
///
/// S¹-invariant smooth members evaluate K(u_t)/π at the deepest scheduled t
/// (BoundaryK) and cross-check the volume oracle at t = −2; other members
/// fall back to the volume oracle entirely.
pub fn residual_mass(
    spec: &FunctionSpec,
    schedule: &[f64],
    grid: &DirectionGrid,
) -> Result<TauEstimate> {
    spec.require_smooth("residual_mass")?;
    if schedule.len() < 2 || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("schedule must be strictly decreasing".into()));
    }
    let n = schedule.len();
    if spec.flags.s1_invariant {
        let it = FiberIntegrator::new(spec)?;
        let k_prev = {
            let s = it.integrate(schedule[n - 2], grid);
            s.cross + s.j
        };
        let k_last = {
            let s = it.integrate(schedule[n - 1], grid);
            s.cross + s.j
        };
        let tau = k_last / PI;
        let spread = (k_prev - k_last).abs() / PI;
        let cfg = BoundaryConfig::default();
        let t_check = (-2.0f64).max(schedule[0]);
        let vol = boundary_mass(spec, t_check.exp(), &cfg)?;
        let k_at_check = {
            let s = it.integrate(t_check, grid);
            s.cross + s.j
        };
        let vol_rel = (vol / PI - k_at_check).abs() / k_at_check.abs().max(1e-12);
        Ok(TauEstimate {
            tau,
            bracket: (tau - spread, tau + spread),
            method: TauMethod::BoundaryK,
            volume_check: Some(vol_rel),
            converged: spread <= 1e-3 * (1.0 + tau.abs()),
        })
    } else {
        // Volume oracle at two radii; the mass is nondecreasing in r.
        let cfg = BoundaryConfig::default();
        let shallow = boundary_mass(spec, (-2.0f64).exp(), &cfg)? / (PI * PI);
        let deeper = boundary_mass(spec, (-3.0f64).exp(), &cfg)? / (PI * PI);
        let spread = (shallow - deeper).abs();
        Ok(TauEstimate {
            tau: deeper,
            bracket: (deeper - spread, deeper + spread),
            method: TauMethod::VolumeOracle,
            volume_check: None,
            converged: spread <= 5e-2 * (1.0 + deeper.abs()),
        })
    }
}

/// The full per-member verification report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MassReport {
    pub name: String,
    pub nu: LelongEstimate,
    pub lambda: LelongEstimate,
    pub tau: TauEstimate,
    /// ν²
    pub lower_bound: f64,
    /// 2λν + ν²
    pub upper_bound: f64,
    pub verdict_lower: bool,
    pub verdict_upper: bool,
    /// The upper bound is a theorem only for S¹-invariant members.
    pub upper_bound_applicable: bool,
    pub s1_invariant: bool,
    pub s1_max_violation: f64,
    pub tolerance: f64,
}

impl MassReport {
    /// True when the report is consistent with the two-sided mass bound
    /// (for the non-invariant members only the general lower bound counts).
    pub fn passes(&self) -> bool {
        self.verdict_lower && (!self.upper_bound_applicable || self.verdict_upper)
    }
}

/// Schedules for `verify_bounds`.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub t_schedule: Vec<f64>,
    pub a_schedule: Vec<f64>,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            t_schedule: (1..=15).map(|k| -2.0 * k as f64).collect(),
            a_schedule: vec![2.0, 5.0, 10.0, 20.0, 25.0],
            tolerance: 2e-2,
            seed: 7,
        }
    }
}

/// Assemble ν, λ, τ and the bound verdicts for one member.
pub fn verify_bounds(
    spec: &FunctionSpec,
    grid: &DirectionGrid,
    cfg: &VerifyConfig,
) -> Result<MassReport> {
    let verdict = check_s1_invariance(spec, 400, 1e-9, cfg.seed);
    let (invariant, violation) = match verdict {
        InvarianceVerdict::Invariant => (true, 0.0),
        InvarianceVerdict::NotInvariant { max_violation } => (false, max_violation),
    };
    let nu = lelong_number(spec, &cfg.t_schedule, grid)?;
    let lambda = lambda_origin(spec, &cfg.a_schedule, grid)?;
    let tau = if spec.flags.smooth_off_origin {
        residual_mass(spec, &cfg.t_schedule, grid)?
    } else {
        // Non-smooth members carry no numerical τ here; the surrogate route
        // exists for them. Report the radial closed form when available.
        return Err(Error::NotSmooth {
            name: spec.name.clone(),
            kind: spec.kind.name(),
        });
    };
    let lower = nu.value * nu.value;
    let upper = 2.0 * lambda.value * nu.value + nu.value * nu.value;
    let tol = cfg.tolerance;
    Ok(MassReport {
        name: spec.name.clone(),
        nu,
        lambda,
        tau,
        lower_bound: lower,
        upper_bound: upper,
        verdict_lower: tau.tau >= lower - tol * (1.0 + lower),
        verdict_upper: tau.tau <= upper + tol * (1.0 + upper),
        upper_bound_applicable: invariant,
        s1_invariant: invariant,
        s1_max_violation: violation,
        tolerance: tol,
    })
}

/// K(u_t) is constant along t exactly when the shell density vanishes: the
/// geodesic-ray detector used by the ray module.
pub fn shell_density_sup(spec: &FunctionSpec, r0: f64, r1: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup = 0.0f64;
    for _ in 0..2000 {
        let u: f64 = rng.gen();
        let r = (r0.powi(4) + u * (r1.powi(4) - r0.powi(4))).powf(0.25);
        let theta = (1.0f64 - 2.0 * rng.gen::<f64>()).acos();
        let phi = rng.gen_range(0.0..TWO_PI);
        let eta = rng.gen_range(0.0..FOUR_PI);
        let p = point_from_hopf(&RealHopf::new(r, eta, theta, phi));
        sup = sup.max(ma_density(spec, &p)?.abs());
    }
    Ok(sup)
}

/// MA-mass is atomic for log-homogeneous members; |z|² is the reference
/// non-geodesic. Used in tests and the ray checks.
pub fn is_log_homogeneous(spec: &FunctionSpec) -> bool {
    match &spec.kind {
        Kind::Radial { .. } => true,
        _ => spec
            .pair_view()
            .map(|pv| pv.f.is_homogeneous() && pv.g.is_homogeneous())
            .unwrap_or(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{coman_guedj, demailly, radial, sqnorm, u1, u2};
    use crate::quadrature::make_grid;
    use approx::assert_relative_eq;

    #[test]
    fn ma_density_examples() {
        // |z|² → 8 everywhere (fixes the normalization constant, which is
        // cross-checked against the decomposition closed form elsewhere).
        let p = Point::from_re_im(0.2, 0.1, -0.3, 0.25);
        assert_relative_eq!(ma_density(&sqnorm(), &p).unwrap(), 8.0, max_relative = 1e-6);

        // log|z| is maximal off the origin: density 0.
        assert!(ma_density(&radial(1.0), &p).unwrap().abs() < 1e-10);

        // u₁: the rank-one Hessian of c·log(|f|²+|g|²) kills the determinant.
        let p = Point::from_re_im(0.1, 0.0, 0.2, 0.0);
        assert!(ma_density(&u1(5), &p).unwrap().abs() < 1e-8);
    }

    #[test]
    fn ma_density_nonnegative() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for spec in [demailly(2), u1(5), u2(5), coman_guedj(5), sqnorm(), radial(0.5)] {
            for _ in 0..200 {
                let p = Point::from_re_im(
                    rng.gen_range(-0.4..0.4),
                    rng.gen_range(-0.4..0.4),
                    rng.gen_range(-0.4..0.4),
                    rng.gen_range(-0.4..0.4),
                );
                if p.norm() < 0.05 {
                    continue;
                }
                let d = ma_density(&spec, &p).unwrap();
                assert!(d >= -1e-9, "{}: density {d} at {p:?}", spec.name);
            }
        }
    }

    #[test]
    fn mass_ball_examples() {
        // |z|²: MA(B_r) = 4π²r⁴ (closed form from the decomposition).
        let m = ma_mass_ball(&sqnorm(), 0.5, ShellMethod::Grid4D, 1).unwrap();
        assert_relative_eq!(m.value, PI * PI / 4.0, max_relative = 1e-3);
        assert!(!m.atomic_shortcut);

        // log|z|: MA = π² at any radius, all atomic.
        let m = ma_mass_ball(&radial(1.0), 0.3, ShellMethod::Grid4D, 1).unwrap();
        assert_relative_eq!(m.value, PI * PI, max_relative = 1e-4);
        assert!(m.atomic_shortcut);

        // u₁ (n=5): π²/5, all atomic.
        let m = ma_mass_ball(&u1(5), 0.3, ShellMethod::Grid4D, 1).unwrap();
        assert_relative_eq!(m.value, PI * PI / 5.0, max_relative = 1e-2);
        assert!(m.atomic_shortcut);
    }

    #[test]
    fn monte_carlo_shell_matches_grid() {
        let g = ma_mass_ball(&sqnorm(), 0.5, ShellMethod::Grid4D, 1).unwrap();
        let m = ma_mass_ball(&sqnorm(), 0.5, ShellMethod::MonteCarlo, 1).unwrap();
        assert_relative_eq!(m.value, g.value, max_relative = 1e-2);
        // Deterministic in the seed.
        let m2 = ma_mass_ball(&sqnorm(), 0.5, ShellMethod::MonteCarlo, 1).unwrap();
        assert_eq!(m.value, m2.value);
    }

    #[test]
    fn toric_mass_examples() {
        // |z|² at r = 0.5 → π²/4.
        let m = toric_mass(&sqnorm(), 0.5, 32);
        // sqnorm is Custom: no toric pair view; must error NotToric.
        assert!(m.is_err());

        // radial a·log|z| → a²π² — via the pair form (a/2, z₁, z₂).
        let mut rad = radial(2.0);
        rad.kind = Kind::HolomorphicPairLog {
            c: 1.0,
            f: crate::catalog::poly::Poly2::monomial(1, 0),
            g: crate::catalog::poly::Poly2::monomial(0, 1),
        };
        let rad = FunctionSpec::new("radial-pair", rad.kind, -1.0);
        let m = toric_mass(&rad, 0.4, 32).unwrap();
        assert_relative_eq!(m, 4.0 * PI * PI, max_relative = 1e-8);

        // Demailly m=2 at r = e⁻²: shell ≈ 0, boundary → π².
        let m = toric_mass(&demailly(2), (-2.0f64).exp(), 32).unwrap();
        assert_relative_eq!(m, PI * PI, max_relative = 1e-6);
    }

    #[test]
    fn toric_and_generic_paths_agree() {
        let r = (-2.0f64).exp();
        let toric = toric_mass(&demailly(2), r, 32).unwrap();
        let generic = ma_mass_ball(&demailly(2), r, ShellMethod::Grid4D, 1).unwrap();
        assert_relative_eq!(toric, generic.value, max_relative = 1e-2);
        // And both agree with the decomposition path.
        let g = make_grid(64, 128).unwrap();
        let it = FiberIntegrator::new(&demailly(2)).unwrap();
        let s = it.integrate(-2.0, &g);
        assert_relative_eq!(toric, PI * (s.cross + s.j), max_relative = 1e-6);
    }

    #[test]
    fn residual_mass_examples() {
        let g = make_grid(64, 128).unwrap();
        let sched: Vec<f64> = (1..=15).map(|k| -2.0 * k as f64).collect();
        let e = residual_mass(&radial(1.0), &sched, &g).unwrap();
        assert_relative_eq!(e.tau, 1.0, epsilon = 1e-10);
        assert_eq!(e.method, TauMethod::BoundaryK);
        assert!(e.volume_check.unwrap() < 1e-2);

        let e = residual_mass(&demailly(2), &sched, &g).unwrap();
        assert_relative_eq!(e.tau, 1.0, max_relative = 1e-2);

        let e = residual_mass(&u2(5), &sched, &g).unwrap();
        assert_relative_eq!(e.tau, 1.0, max_relative = 1e-2);

        let e = residual_mass(&coman_guedj(5), &sched, &g).unwrap();
        assert_eq!(e.method, TauMethod::VolumeOracle);
        assert_relative_eq!(e.tau, 1.0, max_relative = 5e-2);
    }

    #[test]
    fn verify_bounds_examples() {
        let g = make_grid(64, 128).unwrap();
        let cfg = VerifyConfig::default();

        // Demailly m=2: 1 = τ ≤ 2λν + ν² = 2.25.
        let r = verify_bounds(&demailly(2), &g, &cfg).unwrap();
        assert!(r.s1_invariant);
        assert_relative_eq!(r.upper_bound, 2.25, epsilon = 1e-6);
        assert!(r.verdict_lower && r.verdict_upper && r.passes());

        // u₁: 0.2 ≤ 0.44.
        let r = verify_bounds(&u1(5), &g, &cfg).unwrap();
        assert_relative_eq!(r.tau.tau, 0.2, max_relative = 2e-2);
        assert_relative_eq!(r.upper_bound, 0.44, epsilon = 1e-6);
        assert!(r.passes());

        // Coman–Guedj: flagged non-invariant, upper bound violated.
        let r = verify_bounds(&coman_guedj(5), &g, &cfg).unwrap();
        assert!(!r.s1_invariant);
        assert!(r.s1_max_violation > 1e-4);
        assert!(!r.upper_bound_applicable);
        assert!(!r.verdict_upper, "upper bound should be violated");
        assert!(r.verdict_lower, "general lower bound still holds");
        assert!(r.passes());
    }

    #[test]
    fn k_constant_for_log_homogeneous_members() {
        let g = make_grid(64, 128).unwrap();
        for spec in [radial(1.5), demailly(2), u1(5), u2(5)] {
            assert!(is_log_homogeneous(&spec));
            let it = FiberIntegrator::new(&spec).unwrap();
            let ks: Vec<f64> = [-1.0, -3.0, -7.0]
                .iter()
                .map(|&t| {
                    let s = it.integrate(t, &g);
                    s.cross + s.j
                })
                .collect();
            let spread = (ks[0] - ks[2]).abs() / ks[0].abs();
            assert!(spread < 1e-6, "{}: K spread {spread}", spec.name);
        }
        assert!(!is_log_homogeneous(&coman_guedj(5)));
        assert!(!is_log_homogeneous(&sqnorm()));
    }

    use crate::catalog::FunctionSpec;
}
