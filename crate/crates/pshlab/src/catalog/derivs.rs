//! Pointwise analytic fiber derivatives.
//!
//! For an S¹-invariant member the restriction to the sphere of log-radius t
//! is a function u_t(ζ) on ℂP¹. For homogeneous holomorphic pairs it has the
//! closed form u_t/c = log(F + G) with
//!
//! ```text
//! log F = 2 d_f t + log|P(w)|² − d_f log V,    V = 1 + |w|²,
//! ```
//!
//! (P, Q the chart sections of f, g). Everything the boundary calculus needs
//! is a rational expression in σ = G/(F+G) and the logarithmic derivatives
//! of P and Q, which stays finite arbitrarily deep along the ray. Mass
//! concentrates in layers of radius ~e^{(d_g−d_f)t/μ} around the roots of the
//! lower-degree section, so the layer terms are assembled in log space.

use super::{Builtin, FunctionSpec, HomogeneousPair, Kind};
use crate::hopf::Chart;
use crate::math::{log_add_exp, log_sigmoid, sigmoid};
use num_complex::Complex64;

/// All fiber quantities at one point (t fixed, chart coordinate w).
#[derive(Debug, Clone, Copy)]
pub struct FiberPoint {
    /// u (shift included).
    pub u: f64,
    /// u̇ = ∂_t u.
    pub u_dot: f64,
    /// ü = ∂²_t u.
    pub u_ddot: f64,
    /// ∂_w u in the chart coordinate.
    pub u_z: Complex64,
    /// ∂_w u̇.
    pub udot_z: Complex64,
    /// ∂_w ∂_w̄ u (real for real u).
    pub u_zzbar: f64,
    /// Δ_Θ u = V² ∂_w∂_w̄ u, the round-sphere Laplacian.
    pub lap_theta: f64,
    /// V = 1 + |w|².
    pub v: f64,
}

impl FiberPoint {
    fn radial(u: f64, u_dot: f64, u_ddot: f64, v: f64) -> FiberPoint {
        FiberPoint {
            u,
            u_dot,
            u_ddot,
            u_z: Complex64::new(0.0, 0.0),
            udot_z: Complex64::new(0.0, 0.0),
            u_zzbar: 0.0,
            lap_theta: 0.0,
            v,
        }
    }
}

/// A chart section written as δ^μ · (tail series) around an expansion point,
/// so its logarithmic derivative stays finite through the root layer.
#[derive(Debug, Clone)]
pub struct ShiftedSection {
    pub center: Complex64,
    /// Order of vanishing at the center (0 away from roots).
    pub mu: usize,
    /// Tail coefficients: section(center+δ) = δ^μ Σ_j tail[j] δ^j, tail[0] ≠ 0.
    pub tail: Vec<Complex64>,
}

impl ShiftedSection {
    pub fn new(section: &super::poly::Poly1, center: Complex64) -> ShiftedSection {
        let shifted = taylor_shift(&section.coeffs, center);
        let scale = shifted.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let mu = shifted
            .iter()
            .position(|c| c.norm() > 1e-13 * scale.max(1e-300))
            .unwrap_or(shifted.len());
        ShiftedSection {
            center,
            mu,
            tail: shifted[mu.min(shifted.len())..].to_vec(),
        }
    }

    /// (log|section|², section′/section) at center + δ. Finite for any δ ≠ 0
    /// however small, because the δ^μ factor is handled in log form.
    pub fn log_and_dlog(&self, delta: Complex64) -> (f64, Complex64) {
        if self.tail.is_empty() {
            return (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
        }
        let mut tval = Complex64::new(0.0, 0.0);
        let mut tder = Complex64::new(0.0, 0.0);
        for (j, cj) in self.tail.iter().enumerate().rev() {
            tval = tval * delta + cj;
            if j > 0 {
                tder = tder * delta + cj * j as f64;
            }
        }
        let log_sq = 2.0 * (self.mu as f64) * delta.norm().ln() + 2.0 * tval.norm().ln();
        // 1/δ assembled through |δ| to survive |δ|² underflow.
        let dmag = delta.norm();
        let recip = (delta / dmag).conj() / dmag;
        let dlog = (Complex64::new(self.mu as f64, 0.0) + delta * tder / tval) * recip;
        (log_sq, dlog)
    }
}

/// Taylor coefficients of a polynomial about z0, by repeated synthetic
/// division.
pub fn taylor_shift(coeffs: &[Complex64], z0: Complex64) -> Vec<Complex64> {
    let mut cur = coeffs.to_vec();
    let mut out = Vec::with_capacity(coeffs.len());
    while !cur.is_empty() {
        let mut q = vec![Complex64::new(0.0, 0.0); cur.len() - 1];
        let mut r = *cur.last().unwrap();
        for j in (0..cur.len() - 1).rev() {
            q[j] = r;
            r = cur[j] + z0 * r;
        }
        out.push(r);
        cur = q;
    }
    out
}

/// Evaluation context for one chart of a homogeneous pair. The optional
/// shifted sections keep the logarithmic derivatives exact inside a root
/// layer; plain Horner evaluation is used elsewhere.
pub struct PairChartEval<'a> {
    pub pair: &'a HomogeneousPair,
    pub c: f64,
    pub shift: f64,
    pub chart: Chart,
    pub shifted: Option<(&'a ShiftedSection, &'a ShiftedSection)>,
}

impl PairChartEval<'_> {
    /// Fiber point at an offset δ from the shifted-section center. This is
    /// the entry point for layer quadrature: δ may be far below the rounding
    /// of center + δ, so it must never be reconstructed by subtraction.
    pub fn fiber_point_at_offset(&self, t: f64, delta: Complex64) -> FiberPoint {
        let (sp, sq) = self.shifted.expect("offset evaluation needs shifted sections");
        let w = sp.center + delta;
        let (lp, dp) = sp.log_and_dlog(delta);
        let (lq, dq) = sq.log_and_dlog(delta);
        self.assemble(t, w, lp, dp, lq, dq)
    }

    /// (log|P|², P′/P, log|Q|², Q′/Q) at w.
    fn section_logs(&self, w: Complex64) -> (f64, Complex64, f64, Complex64) {
        if let Some((sp, sq)) = self.shifted {
            let delta = w - sp.center;
            let (lp, dp) = sp.log_and_dlog(delta);
            let (lq, dq) = sq.log_and_dlog(delta);
            (lp, dp, lq, dq)
        } else {
            let (p, q) = self.pair.sections(self.chart);
            let (pd, qd) = self.pair.section_derivatives(self.chart);
            let pv = p.eval(w);
            let qv = q.eval(w);
            let dp = if pv.norm_sqr() > 0.0 {
                pd.eval(w) / pv
            } else {
                Complex64::new(0.0, 0.0)
            };
            let dq = if qv.norm_sqr() > 0.0 {
                qd.eval(w) / qv
            } else {
                Complex64::new(0.0, 0.0)
            };
            (2.0 * pv.norm().ln(), dp, 2.0 * qv.norm().ln(), dq)
        }
    }

    /// Full fiber point at (t, w).
    pub fn fiber_point(&self, t: f64, w: Complex64) -> FiberPoint {
        let (lp, dp, lq, dq) = self.section_logs(w);
        self.assemble(t, w, lp, dp, lq, dq)
    }

    fn assemble(
        &self,
        t: f64,
        w: Complex64,
        lp: f64,
        dp: Complex64,
        lq: f64,
        dq: Complex64,
    ) -> FiberPoint {
        let c = self.c;
        let df = self.pair.df as f64;
        let dg = self.pair.dg as f64;
        let v = 1.0 + w.norm_sqr();
        let lv = v.ln();
        let lf = 2.0 * df * t + lp - df * lv;
        let lg = 2.0 * dg * t + lq - dg * lv;
        let wgap = lg - lf;
        let s = sigmoid(wgap);
        // log-derivatives of F and G in the chart coordinate.
        let a = dp - df * w.conj() / v;
        let b = dq - dg * w.conj() / v;
        let d_ab = b - a;
        // σ(1−σ)·X assembled in log space; X = |b−a|² can reach e^{600}.
        let log_sp = log_sigmoid(wgap) + log_sigmoid(-wgap);
        let dmag = d_ab.norm();
        let layer = if dmag > 0.0 {
            (log_sp + 2.0 * dmag.ln()).exp()
        } else {
            0.0
        };
        let sp = log_sp.exp();
        let u = c * log_add_exp(lf, lg) + self.shift;
        let u_dot = 2.0 * c * (df * (1.0 - s) + dg * s);
        let u_ddot = 4.0 * c * (dg - df) * (dg - df) * sp;
        let u_z = c * ((1.0 - s) * a + s * b);
        let dd = dg - df;
        let udot_z = if dmag > 0.0 {
            let phase = d_ab / dmag;
            2.0 * c * dd * (log_sp + dmag.ln()).exp() * phase
        } else {
            Complex64::new(0.0, 0.0)
        };
        let u_zzbar = c * (-(df * (1.0 - s) + dg * s) / (v * v) + layer);
        FiberPoint {
            u,
            u_dot,
            u_ddot,
            u_z,
            udot_z,
            u_zzbar,
            lap_theta: v * v * u_zzbar,
            v,
        }
    }
}

/// Pointwise fiber data for a catalog entry at (t, chart, w), when the kind
/// admits a fiber function at all (S¹-invariant) with analytic derivatives.
///
/// Returns None for kinds that need finite differences (`Custom`) or that
/// have no smooth fiber restriction (`MaxOfLogs`, non-invariant pairs).
pub fn fiber_point(spec: &FunctionSpec, t: f64, chart: Chart, w: Complex64) -> Option<FiberPoint> {
    match &spec.kind {
        Kind::Radial { a } => Some(FiberPoint::radial(
            a * t + spec.shift,
            *a,
            0.0,
            1.0 + w.norm_sqr(),
        )),
        Kind::Custom { .. } | Kind::MaxOfLogs { .. } => None,
        _ => {
            if !spec.flags.s1_invariant {
                return None;
            }
            let pv = spec.pair_view()?;
            let pair = HomogeneousPair::from_view(&pv)?;
            let eval = PairChartEval {
                pair: &pair,
                c: pv.c,
                shift: spec.shift,
                chart,
                shifted: None,
            };
            Some(eval.fiber_point(t, w))
        }
    }
}

/// Fiber data for the smooth `Custom` built-ins via closed radial forms;
/// used to seed finite-difference paths with exact values where they exist.
pub fn custom_fiber_point(builtin: Builtin, t: f64, shift: f64, w: Complex64) -> FiberPoint {
    match builtin {
        Builtin::SqNorm => {
            let e = (2.0 * t).exp();
            FiberPoint::radial(e + shift, 2.0 * e, 4.0 * e, 1.0 + w.norm_sqr())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{demailly, radial, u1, u2};
    use crate::hopf::Direction;
    use approx::assert_relative_eq;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn taylor_shift_matches_direct_evaluation() {
        // p(x) = 1 - 2x + x^3 around z0 = 0.5 - 0.25i
        let coeffs = vec![c64(1.0, 0.0), c64(-2.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)];
        let z0 = c64(0.5, -0.25);
        let shifted = taylor_shift(&coeffs, z0);
        let delta = c64(0.1, 0.2);
        let direct: Complex64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * (z0 + delta).powu(k as u32))
            .sum();
        let via: Complex64 = shifted
            .iter()
            .enumerate()
            .map(|(k, c)| c * delta.powu(k as u32))
            .sum();
        assert_relative_eq!((direct - via).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn shifted_section_is_stable_through_the_layer() {
        // P(ζ) = 1 - ζ around its root: log|P|² = 2 log|δ| exactly.
        let p = crate::catalog::poly::Poly1::new(vec![c64(1.0, 0.0), c64(-1.0, 0.0)]);
        let s = ShiftedSection::new(&p, c64(1.0, 0.0));
        assert_eq!(s.mu, 1);
        let delta = c64(1e-200, 0.0);
        let (lsq, dlog) = s.log_and_dlog(delta);
        assert_relative_eq!(lsq, 2.0 * (1e-200f64).ln(), epsilon = 1e-10);
        assert_relative_eq!(dlog.re, 1e200, max_relative = 1e-12);
    }

    #[test]
    fn radial_members_have_zero_angular_derivatives() {
        let spec = radial(2.0);
        let fp = fiber_point(&spec, -3.0, Chart::Zeta, c64(0.3, 0.4)).unwrap();
        assert_relative_eq!(fp.u_dot, 2.0);
        assert_relative_eq!(fp.lap_theta, 0.0);

        // a log|z| written as the pair (a/2, z1, z2) must agree: the layer
        // term cancels the chart curvature exactly.
        let pair_form = crate::catalog::FunctionSpec::new(
            "radial-pair",
            Kind::HolomorphicPairLog {
                c: 1.0,
                f: crate::catalog::poly::Poly2::monomial(1, 0),
                g: crate::catalog::poly::Poly2::monomial(0, 1),
            },
            -1.0,
        );
        let fp = fiber_point(&pair_form, -3.0, Chart::Zeta, c64(0.3, 0.4)).unwrap();
        assert_relative_eq!(fp.u_dot, 2.0, epsilon = 1e-14);
        assert!(fp.lap_theta.abs() < 1e-13);
    }

    #[test]
    fn pair_derivatives_match_finite_differences() {
        // Check u_z, u_zzbar, udot_z and lap against central differences of
        // the closed-form fiber evaluation, at a moderate t where plain
        // evaluation is well conditioned.
        for spec in [demailly(2), u1(5), u2(5)] {
            let pv = spec.pair_view().unwrap();
            let pair = HomogeneousPair::from_view(&pv).unwrap();
            let t = -1.5;
            let w0 = c64(0.52, 0.31);
            let ev = PairChartEval {
                pair: &pair,
                c: pv.c,
                shift: spec.shift,
                chart: Chart::Zeta,
                shifted: None,
            };
            let fp = ev.fiber_point(t, w0);
            let h = 1e-5;
            let up = |w: Complex64, t: f64| ev.fiber_point(t, w).u;
            let ux = (up(w0 + c64(h, 0.0), t) - up(w0 - c64(h, 0.0), t)) / (2.0 * h);
            let uy = (up(w0 + c64(0.0, h), t) - up(w0 - c64(0.0, h), t)) / (2.0 * h);
            // ∂_w = (∂_x - i ∂_y)/2
            let uz_fd = c64(ux / 2.0, -uy / 2.0);
            assert_relative_eq!(fp.u_z.re, uz_fd.re, max_relative = 1e-6, epsilon = 1e-9);
            assert_relative_eq!(fp.u_z.im, uz_fd.im, max_relative = 1e-6, epsilon = 1e-9);

            let uxx = (up(w0 + c64(h, 0.0), t) - 2.0 * up(w0, t) + up(w0 - c64(h, 0.0), t)) / (h * h);
            let uyy = (up(w0 + c64(0.0, h), t) - 2.0 * up(w0, t) + up(w0 - c64(0.0, h), t)) / (h * h);
            // ∂_w ∂_w̄ = (∂_xx + ∂_yy)/4
            assert_relative_eq!(fp.u_zzbar, (uxx + uyy) / 4.0, max_relative = 1e-4, epsilon = 1e-8);

            let dotp = ev.fiber_point(t, w0 + c64(h, 0.0)).u_dot;
            let dotm = ev.fiber_point(t, w0 - c64(h, 0.0)).u_dot;
            let dotpy = ev.fiber_point(t, w0 + c64(0.0, h)).u_dot;
            let dotmy = ev.fiber_point(t, w0 - c64(0.0, h)).u_dot;
            let dz_fd = c64(
                (dotp - dotm) / (4.0 * h),
                -(dotpy - dotmy) / (4.0 * h),
            );
            assert_relative_eq!(fp.udot_z.re, dz_fd.re, max_relative = 1e-5, epsilon = 1e-10);
            assert_relative_eq!(fp.udot_z.im, dz_fd.im, max_relative = 1e-5, epsilon = 1e-10);

            let ddp = ev.fiber_point(t + h, w0).u_dot;
            let ddm = ev.fiber_point(t - h, w0).u_dot;
            assert_relative_eq!(fp.u_ddot, (ddp - ddm) / (2.0 * h), max_relative = 1e-5, epsilon = 1e-10);
        }
    }

    #[test]
    fn charts_agree_on_the_overlap() {
        let spec = u2(5);
        let d = Direction::zeta(c64(0.8, -0.4));
        let flipped = d.flip();
        let a = fiber_point(&spec, -2.0, d.chart, d.w).unwrap();
        let b = fiber_point(&spec, -2.0, flipped.chart, flipped.w).unwrap();
        assert_relative_eq!(a.u, b.u, epsilon = 1e-12);
        assert_relative_eq!(a.u_dot, b.u_dot, epsilon = 1e-12);
        // Δ_Θ is a scalar on the sphere: chart independent.
        assert_relative_eq!(a.lap_theta, b.lap_theta, epsilon = 1e-10, max_relative = 1e-10);
    }

    #[test]
    fn demailly_hand_computed_laplacian() {
        // Hand evaluation at t=-2, θ=π/2, φ=0 (ζ=1): with c=1/4, d_f=1,
        // d_g=4, P=ζ, Q=1: F = e^{2t}/2, G = e^{8t}/16, σ = G/(F+G),
        // w_ζ = -1/ζ - 3ζ̄/V = -5/2, so
        // Δ_Θu = (1/4)(-1 - 3σ) + (1/4)σ(1-σ)·4·(25/4).
        let t = -2.0f64;
        let f = (2.0 * t).exp() / 2.0;
        let g = (8.0 * t).exp() / 16.0;
        let s = g / (f + g);
        let expect = 0.25 * (-1.0 - 3.0 * s) + 0.25 * s * (1.0 - s) * 25.0;
        let spec = demailly(2);
        let fp = fiber_point(&spec, t, Chart::Zeta, c64(1.0, 0.0)).unwrap();
        assert_relative_eq!(fp.lap_theta, expect, max_relative = 1e-12);
    }
}
