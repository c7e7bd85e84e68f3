//! The library of test functions.
//!
//! Every entry evaluates u on the punctured unit ball and knows enough about
//! its own structure (radial profile, holomorphic pair, symmetry flags) for
//! the downstream modules to pick exact derivative paths where they exist.

pub mod derivs;
pub mod poly;

use crate::hopf::{Chart, Direction, Point};
use crate::math::{log_add_exp, sigmoid};
use crate::{Error, Result};
use num_complex::Complex64;
use poly::{parse_poly, Poly2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Step for central finite differences in t, used when a kind provides no
/// analytic t-derivative.
pub const FD_STEP_T: f64 = 1e-4;

/// Named built-in evaluators for the `Custom` kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// u = |z|², the standard smooth non-singular test member.
    SqNorm,
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::SqNorm => "sqnorm",
        }
    }
}

/// How a catalog entry is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    /// a·log|z| with a > 0.
    Radial { a: f64 },
    /// c·log(|f|² + |g|²) for holomorphic polynomials f, g whose only common
    /// zero inside B₁ is the origin.
    HolomorphicPairLog { c: f64, f: Poly2, g: Poly2 },
    /// max{a₁ log|z₁|, a₂ log|z₂|}. Not C² across the branch locus, so the
    /// smooth calculus rejects it; route through `smoothed_surrogate`.
    MaxOfLogs { a1: f64, a2: f64 },
    /// (1/p)·log(|z₁|^{p a₁} + |z₂|^{p a₂}); requires p·aᵢ/2 to be positive
    /// integers so the expression is a holomorphic pair in disguise.
    SmoothedMax { a1: f64, a2: f64, p: f64 },
    Custom { builtin: Builtin },
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Radial { .. } => "radial",
            Kind::HolomorphicPairLog { .. } => "pairlog",
            Kind::MaxOfLogs { .. } => "maxlogs",
            Kind::SmoothedMax { .. } => "smoothedmax",
            Kind::Custom { .. } => "custom",
        }
    }
}

/// Symmetry and regularity flags, claimed at construction and verifiable by
/// the check operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flags {
    pub s1_invariant: bool,
    pub toric: bool,
    pub smooth_off_origin: bool,
}

/// A catalog entry.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    pub name: String,
    pub kind: Kind,
    pub flags: Flags,
    /// Additive constant; the normalization sup u ≤ -1 is realized here.
    pub shift: f64,
}

/// A holomorphic-pair view (c, f, g) shared by `HolomorphicPairLog` and
/// `SmoothedMax`.
#[derive(Debug, Clone)]
pub struct PairView {
    pub c: f64,
    pub f: Poly2,
    pub g: Poly2,
}

impl FunctionSpec {
    fn derive_flags(kind: &Kind) -> Flags {
        match kind {
            Kind::Radial { .. } => Flags {
                s1_invariant: true,
                toric: true,
                smooth_off_origin: true,
            },
            Kind::HolomorphicPairLog { f, g, .. } => {
                let s1 = f.is_homogeneous() && g.is_homogeneous();
                Flags {
                    s1_invariant: s1,
                    toric: s1 && f.is_toric_factor() && g.is_toric_factor(),
                    smooth_off_origin: true,
                }
            }
            Kind::MaxOfLogs { .. } => Flags {
                s1_invariant: true,
                toric: true,
                smooth_off_origin: false,
            },
            Kind::SmoothedMax { .. } => Flags {
                s1_invariant: true,
                toric: true,
                smooth_off_origin: true,
            },
            Kind::Custom { .. } => Flags {
                s1_invariant: true,
                toric: true,
                smooth_off_origin: true,
            },
        }
    }

    pub fn new(name: impl Into<String>, kind: Kind, shift: f64) -> Self {
        let flags = Self::derive_flags(&kind);
        FunctionSpec {
            name: name.into(),
            kind,
            flags,
            shift,
        }
    }

    pub fn with_shift(&self, shift: f64) -> Self {
        let mut s = self.clone();
        s.shift = shift;
        s
    }

    /// The (c, f, g) holomorphic-pair view when the kind has one.
    pub fn pair_view(&self) -> Option<PairView> {
        match &self.kind {
            Kind::HolomorphicPairLog { c, f, g } => Some(PairView {
                c: *c,
                f: f.clone(),
                g: g.clone(),
            }),
            Kind::SmoothedMax { a1, a2, p } => {
                let k1 = p * a1 / 2.0;
                let k2 = p * a2 / 2.0;
                if k1.fract() != 0.0 || k2.fract() != 0.0 || k1 < 1.0 || k2 < 1.0 {
                    return None;
                }
                Some(PairView {
                    c: 1.0 / p,
                    f: Poly2::monomial(k1 as u32, 0),
                    g: Poly2::monomial(0, k2 as u32),
                })
            }
            _ => None,
        }
    }

    pub fn require_smooth(&self, _op: &'static str) -> Result<()> {
        if self.flags.smooth_off_origin {
            Ok(())
        } else {
            Err(Error::NotSmooth {
                name: self.name.clone(),
                kind: self.kind.name(),
            })
        }
    }
}

fn check_domain(p: &Point) -> Result<f64> {
    let r = p.norm();
    if r == 0.0 {
        return Err(Error::Domain { r, domain: "B_1 \\ {0}" });
    }
    if r >= 1.0 {
        return Err(Error::Domain { r, domain: "B_1 \\ {0}" });
    }
    Ok(r)
}

/// Evaluate u at a point of B₁ ∖ {0}.
///
/// For S¹-invariant holomorphic pairs the evaluation routes through the
/// invariant data (t, ζ), so rotating the argument only perturbs the result
/// at the rounding of t and ζ themselves.
pub fn eval(spec: &FunctionSpec, p: &Point) -> Result<f64> {
    let r = check_domain(p)?;
    Ok(eval_unchecked(spec, p, r))
}

fn eval_unchecked(spec: &FunctionSpec, p: &Point, r: f64) -> f64 {
    let t = r.ln();
    match &spec.kind {
        Kind::Radial { a } => a * t + spec.shift,
        Kind::MaxOfLogs { a1, a2 } => {
            let b1 = a1 * p.z1.norm().ln();
            let b2 = a2 * p.z2.norm().ln();
            b1.max(b2) + spec.shift
        }
        Kind::Custom { builtin: Builtin::SqNorm } => r * r + spec.shift,
        _ => {
            let pv = spec.pair_view().expect("pair kinds expose a pair view");
            if spec.flags.s1_invariant {
                // Invariant route through (t, chart coordinate).
                let (chart, w) = if p.z1.norm() <= p.z2.norm() {
                    (Chart::Zeta, p.z1 / p.z2)
                } else {
                    (Chart::Xi, p.z2 / p.z1)
                };
                let core = HomogeneousPair::from_view(&pv).expect("invariant pair is homogeneous");
                core.u(t, chart, w) * pv.c + spec.shift
            } else {
                let s = pv.f.eval(p.z1, p.z2).norm_sqr() + pv.g.eval(p.z1, p.z2).norm_sqr();
                pv.c * s.ln() + spec.shift
            }
        }
    }
}

/// Chart data of a homogeneous holomorphic pair: everything the fiber
/// calculus needs, in underflow-safe logarithmic form.
///
/// With P = f(·,1), Q = g(·,1) in chart Zeta (and the z₁-sections in chart
/// Xi), the fiber restriction is u/c = log(F + G) where
/// log F = 2 d_f t + log|P(w)|² − d_f log V and similarly for G,
/// V = 1 + |w|².
#[derive(Debug, Clone)]
pub struct HomogeneousPair {
    pub df: u32,
    pub dg: u32,
    pub p_zeta: poly::Poly1,
    pub q_zeta: poly::Poly1,
    pub p_xi: poly::Poly1,
    pub q_xi: poly::Poly1,
    pub pd_zeta: poly::Poly1,
    pub qd_zeta: poly::Poly1,
    pub pd_xi: poly::Poly1,
    pub qd_xi: poly::Poly1,
}

impl HomogeneousPair {
    pub fn from_view(pv: &PairView) -> Option<Self> {
        if !pv.f.is_homogeneous() || !pv.g.is_homogeneous() {
            return None;
        }
        let p_zeta = pv.f.section(Chart::Zeta);
        let q_zeta = pv.g.section(Chart::Zeta);
        let p_xi = pv.f.section(Chart::Xi);
        let q_xi = pv.g.section(Chart::Xi);
        Some(HomogeneousPair {
            df: pv.f.total_degree(),
            dg: pv.g.total_degree(),
            pd_zeta: p_zeta.derivative(),
            qd_zeta: q_zeta.derivative(),
            pd_xi: p_xi.derivative(),
            qd_xi: q_xi.derivative(),
            p_zeta,
            q_zeta,
            p_xi,
            q_xi,
        })
    }

    pub fn sections(&self, chart: Chart) -> (&poly::Poly1, &poly::Poly1) {
        match chart {
            Chart::Zeta => (&self.p_zeta, &self.q_zeta),
            Chart::Xi => (&self.p_xi, &self.q_xi),
        }
    }

    pub fn section_derivatives(&self, chart: Chart) -> (&poly::Poly1, &poly::Poly1) {
        match chart {
            Chart::Zeta => (&self.pd_zeta, &self.qd_zeta),
            Chart::Xi => (&self.pd_xi, &self.qd_xi),
        }
    }

    /// (log F, log G)(t, w) in the given chart, divided by nothing: these are
    /// the logarithms of the two half-sums of e^{u/c}.
    pub fn log_fg(&self, t: f64, chart: Chart, w: Complex64) -> (f64, f64) {
        let (p, q) = self.sections(chart);
        let v = 1.0 + w.norm_sqr();
        let lf = 2.0 * self.df as f64 * t + p.eval(w).norm_sqr().ln() - self.df as f64 * v.ln();
        let lg = 2.0 * self.dg as f64 * t + q.eval(w).norm_sqr().ln() - self.dg as f64 * v.ln();
        (lf, lg)
    }

    /// u/c at (t, w).
    pub fn u(&self, t: f64, chart: Chart, w: Complex64) -> f64 {
        let (lf, lg) = self.log_fg(t, chart, w);
        log_add_exp(lf, lg)
    }

    /// u̇/c = 2 d_f (1-σ) + 2 d_g σ with σ = G/(F+G).
    pub fn u_dot(&self, t: f64, chart: Chart, w: Complex64) -> f64 {
        let (lf, lg) = self.log_fg(t, chart, w);
        let s = sigmoid(lg - lf);
        2.0 * (self.df as f64 * (1.0 - s) + self.dg as f64 * s)
    }
}

/// A sample of the fiber profile u_t along one complex line.
#[derive(Debug, Clone, Copy)]
pub struct ProfileSample {
    pub t: f64,
    pub u: f64,
    pub u_dot: f64,
    pub has_analytic_dot: bool,
}

/// The restriction of a catalog entry to a complex line through the origin,
/// with underflow-safe evaluation arbitrarily deep along the line.
#[derive(Debug, Clone)]
pub enum LineRestriction {
    /// u(t) = a t + shift.
    Radial { a: f64, shift: f64 },
    /// u(t) = e^{2t} + shift.
    SqNorm { shift: f64 },
    /// u(t) = max(a₁(t + o₁), a₂(t + o₂)) + shift with the angular offsets oᵢ
    /// absorbed; −∞ offsets mark a branch that is absent on this line.
    MaxBranches { a1: f64, o1: f64, a2: f64, o2: f64, shift: f64 },
    /// u(t) = c log(|f(λ)|² + |g(λ)|²) + shift along z(λ); the coefficient
    /// lists hold f(λ) = λ^{ord} Σ_j coeffs[j] λ^j with coeffs[0] ≠ 0.
    Pair(PairLine),
}

#[derive(Debug, Clone)]
pub struct PairLine {
    pub c: f64,
    pub f_ord: Option<usize>,
    pub f_coeffs: Vec<Complex64>,
    pub g_ord: Option<usize>,
    pub g_coeffs: Vec<Complex64>,
    /// t = log λ + v_half_log on this line.
    pub v_half_log: f64,
    pub shift: f64,
}

fn trim_orders(coeffs: &[Complex64]) -> (Option<usize>, Vec<Complex64>) {
    let first = coeffs.iter().position(|c| c.norm_sqr() > 0.0);
    match first {
        None => (None, Vec::new()),
        Some(k) => (Some(k), coeffs[k..].to_vec()),
    }
}

/// log |Σ_j coeffs[j] λ^j|² and its t-derivative 2 Re(λ A'/A), for λ = e^s.
fn log_series_sq(coeffs: &[Complex64], lambda: f64) -> (f64, f64) {
    let mut a = Complex64::new(0.0, 0.0);
    let mut da = Complex64::new(0.0, 0.0);
    for (j, cj) in coeffs.iter().enumerate().rev() {
        a = a * lambda + cj;
        if j > 0 {
            da = da * lambda + cj * j as f64;
        }
    }
    // da currently holds A'(λ) Horner-wise shifted by one power.
    let a_sq = a.norm_sqr();
    if a_sq == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    let dot = 2.0 * lambda * (da * a.conj()).re / a_sq;
    (a_sq.ln(), dot)
}

impl LineRestriction {
    pub fn of(spec: &FunctionSpec, d: &Direction) -> LineRestriction {
        match &spec.kind {
            Kind::Radial { a } => LineRestriction::Radial { a: *a, shift: spec.shift },
            Kind::Custom { builtin: Builtin::SqNorm } => LineRestriction::SqNorm { shift: spec.shift },
            Kind::MaxOfLogs { a1, a2 } => {
                // On the line (λw, λ): |z₁| = λ|w|/√V·√V = ... with λ real,
                // |z₁| = e^t sin(θ/2)-scaled; express through the direction.
                let theta = d.theta();
                let (s1, s2) = ((theta / 2.0).sin(), (theta / 2.0).cos());
                LineRestriction::MaxBranches {
                    a1: *a1,
                    o1: s1.ln(),
                    a2: *a2,
                    o2: s2.ln(),
                    shift: spec.shift,
                }
            }
            _ => {
                let pv = spec.pair_view().expect("pair kinds expose a pair view");
                let fc = pv.f.restrict_line(d);
                let gc = pv.g.restrict_line(d);
                let (f_ord, f_coeffs) = trim_orders(&fc);
                let (g_ord, g_coeffs) = trim_orders(&gc);
                LineRestriction::Pair(PairLine {
                    c: pv.c,
                    f_ord,
                    f_coeffs,
                    g_ord,
                    g_coeffs,
                    v_half_log: 0.5 * (1.0 + d.w.norm_sqr()).ln(),
                    shift: spec.shift,
                })
            }
        }
    }

    /// u and du/dt at log-radius t along the line.
    pub fn sample(&self, t: f64) -> (f64, f64) {
        match self {
            LineRestriction::Radial { a, shift } => (a * t + shift, *a),
            LineRestriction::SqNorm { shift } => {
                let e = (2.0 * t).exp();
                (e + shift, 2.0 * e)
            }
            LineRestriction::MaxBranches { a1, o1, a2, o2, shift } => {
                let b1 = a1 * t + if o1.is_finite() { a1 * o1 } else { f64::NEG_INFINITY };
                let b2 = a2 * t + if o2.is_finite() { a2 * o2 } else { f64::NEG_INFINITY };
                if b1 > b2 {
                    (b1 + shift, *a1)
                } else if b2 > b1 {
                    (b2 + shift, *a2)
                } else {
                    (b1 + shift, a1.max(*a2))
                }
            }
            LineRestriction::Pair(pl) => pl.sample(t),
        }
    }

    /// The t → −∞ slope (the directional Lelong number of this line).
    pub fn tail_slope(&self) -> f64 {
        match self {
            LineRestriction::Radial { a, .. } => *a,
            LineRestriction::SqNorm { .. } => 0.0,
            LineRestriction::MaxBranches { a1, o1, a2, o2, .. } => {
                // As t → −∞ the branch with the smaller slope dominates the
                // max, unless it is absent on this line.
                if !o1.is_finite() {
                    *a2
                } else if !o2.is_finite() {
                    *a1
                } else {
                    a1.min(*a2)
                }
            }
            LineRestriction::Pair(pl) => {
                let of = pl.f_ord.map(|k| k as f64);
                let og = pl.g_ord.map(|k| k as f64);
                let ord = match (of, og) {
                    (Some(a), Some(b)) => a.min(b),
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => return 0.0,
                };
                2.0 * pl.c * ord
            }
        }
    }
}

impl PairLine {
    fn log_branches(&self, t: f64) -> (f64, f64, f64, f64) {
        let lambda = (t - self.v_half_log).exp();
        let s = t - self.v_half_log;
        let (lf, ldf) = match self.f_ord {
            None => (f64::NEG_INFINITY, 0.0),
            Some(k) => {
                let (l, d) = log_series_sq(&self.f_coeffs, lambda);
                (2.0 * k as f64 * s + l, 2.0 * k as f64 + d)
            }
        };
        let (lg, ldg) = match self.g_ord {
            None => (f64::NEG_INFINITY, 0.0),
            Some(k) => {
                let (l, d) = log_series_sq(&self.g_coeffs, lambda);
                (2.0 * k as f64 * s + l, 2.0 * k as f64 + d)
            }
        };
        (lf, ldf, lg, ldg)
    }

    pub fn sample(&self, t: f64) -> (f64, f64) {
        let (lf, ldf, lg, ldg) = self.log_branches(t);
        let u = self.c * log_add_exp(lf, lg) + self.shift;
        let dot = if lf == f64::NEG_INFINITY {
            ldg
        } else if lg == f64::NEG_INFINITY {
            ldf
        } else {
            let s = sigmoid(lg - lf);
            (1.0 - s) * ldf + s * ldg
        };
        (u, self.c * dot)
    }
}

/// Fiber profile u_t at direction d: analytic t-derivative for the kinds
/// that have one, central finite difference otherwise.
pub fn profile(spec: &FunctionSpec, t: f64, d: &Direction) -> Result<ProfileSample> {
    let lr = LineRestriction::of(spec, d);
    let analytic = !matches!(
        spec.kind,
        Kind::Custom { .. } | Kind::MaxOfLogs { .. }
    );
    let (u, u_dot) = if analytic {
        lr.sample(t)
    } else {
        let (u, _) = lr.sample(t);
        let (up, _) = lr.sample(t + FD_STEP_T);
        let (um, _) = lr.sample(t - FD_STEP_T);
        (u, (up - um) / (2.0 * FD_STEP_T))
    };
    Ok(ProfileSample {
        t,
        u,
        u_dot,
        has_analytic_dot: analytic,
    })
}

/// Outcome of the circular-symmetry sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InvarianceVerdict {
    Invariant,
    NotInvariant { max_violation: f64 },
}

impl InvarianceVerdict {
    pub fn is_invariant(&self) -> bool {
        matches!(self, InvarianceVerdict::Invariant)
    }
}

/// Sample u(e^{iθ}p) − u(p) at random (p, θ) pairs; the spec is invariant
/// when the relative violation stays below tol.
pub fn check_s1_invariance(
    spec: &FunctionSpec,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> InvarianceVerdict {
    let n = n_samples.max(100);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51c1);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let r = rng.gen_range(0.02..0.95);
        let theta = rng.gen_range(0.0..std::f64::consts::PI);
        let phi = rng.gen_range(0.0..crate::hopf::TWO_PI);
        let eta = rng.gen_range(0.0..crate::hopf::FOUR_PI);
        let p = crate::hopf::point_from_hopf(&crate::hopf::RealHopf::new(r, eta, theta, phi));
        let rot = rng.gen_range(0.0..crate::hopf::TWO_PI);
        let q = p.rotate(rot);
        let (Ok(up), Ok(uq)) = (eval(spec, &p), eval(spec, &q)) else {
            continue;
        };
        if !up.is_finite() || !uq.is_finite() {
            continue;
        }
        let viol = (up - uq).abs() / (1.0 + up.abs());
        worst = worst.max(viol);
    }
    if worst <= tol {
        InvarianceVerdict::Invariant
    } else {
        InvarianceVerdict::NotInvariant { max_violation: worst }
    }
}

/// Shift the spec so its sampled supremum over B₁ is ≤ −1. Entries already
/// below the bar are returned unchanged.
pub fn normalize(spec: &FunctionSpec, n_samples: usize, seed: u64) -> Result<FunctionSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0_5b);
    let mut sup = f64::NEG_INFINITY;
    // Plurisubharmonic entries attain their sup near the boundary sphere;
    // sample it densely plus random interior points for safety.
    for _ in 0..n_samples.max(200) {
        let theta = rng.gen_range(0.0..std::f64::consts::PI);
        let phi = rng.gen_range(0.0..crate::hopf::TWO_PI);
        let eta = rng.gen_range(0.0..crate::hopf::FOUR_PI);
        let on_boundary: bool = rng.gen_bool(0.7);
        let r = if on_boundary {
            1.0 - 1e-9
        } else {
            rng.gen_range(0.05..1.0f64)
        };
        let p = crate::hopf::point_from_hopf(&crate::hopf::RealHopf::new(r, eta, theta, phi));
        if let Ok(u) = eval(spec, &p) {
            sup = sup.max(u);
        }
    }
    if sup > 1e10 {
        return Err(Error::UnboundedAbove { sup });
    }
    if sup <= -1.0 {
        Ok(spec.clone())
    } else {
        Ok(spec.with_shift(spec.shift - (sup + 1.0)))
    }
}

/// Build a smooth c·log(|f|²+|g|²) member, rejecting pairs with common zeros
/// away from the origin (probed on shell grids with local descent).
pub fn smoothed_surrogate(
    name: impl Into<String>,
    c: f64,
    f: Poly2,
    g: Poly2,
) -> Result<FunctionSpec> {
    for &radius in &[0.8f64, 0.4, 0.1] {
        if let Some(bad) = common_zero_probe(&f, &g, radius) {
            if bad {
                return Err(Error::CommonZero { radius });
            }
        }
    }
    Ok(FunctionSpec::new(
        name,
        Kind::HolomorphicPairLog { c, f, g },
        -1.5,
    ))
}

/// Returns Some(true) when a common zero of (f, g) is detected on the shell
/// |z| = radius.
fn common_zero_probe(f: &Poly2, g: &Poly2, radius: f64) -> Option<bool> {
    let maxdeg = f.total_degree().max(g.total_degree()) as i32;
    let scale = radius.powi(2 * maxdeg);
    let s_at = |theta: f64, phi: f64, eta: f64| -> f64 {
        let p = crate::hopf::point_from_hopf(&crate::hopf::RealHopf::new(radius, eta, theta, phi));
        f.eval(p.z1, p.z2).norm_sqr() + g.eval(p.z1, p.z2).norm_sqr()
    };
    let n = 48;
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    for i in 0..n {
        let theta = (i as f64 + 0.5) * std::f64::consts::PI / n as f64;
        for j in 0..2 * n {
            let phi = j as f64 * std::f64::consts::PI / n as f64;
            for k in 0..4 {
                let eta = k as f64 * std::f64::consts::PI;
                let s = s_at(theta, phi, eta);
                if s < best.0 {
                    best = (s, theta, phi, eta);
                }
            }
        }
    }
    // Local coordinate descent from the best grid node.
    let (mut s, mut theta, mut phi, mut eta) = best;
    let mut h = 0.1f64;
    for _ in 0..60 {
        let mut improved = false;
        for (dt, dp, de) in [
            (h, 0.0, 0.0),
            (-h, 0.0, 0.0),
            (0.0, h, 0.0),
            (0.0, -h, 0.0),
            (0.0, 0.0, h),
            (0.0, 0.0, -h),
        ] {
            let cand = s_at(theta + dt, phi + dp, eta + de);
            if cand < s {
                s = cand;
                theta += dt;
                phi += dp;
                eta += de;
                improved = true;
            }
        }
        if !improved {
            h *= 0.5;
            if h < 1e-12 {
                break;
            }
        }
    }
    Some(s < 1e-22 * scale)
}

/// The Demailly surrogate for ε = 1/m: (1/2m)·log(|z₁|² + |z₂^{m²}|²).
pub fn demailly(m: u32) -> FunctionSpec {
    FunctionSpec::new(
        format!("demailly-m{m}"),
        Kind::HolomorphicPairLog {
            c: 1.0 / (2.0 * m as f64),
            f: Poly2::monomial(1, 0),
            g: Poly2::monomial(0, m * m),
        },
        -1.5,
    )
}

/// u₁ = (1/2n)·log(|z₂ − z₁|² + |z₂ⁿ|²).
pub fn u1(n: u32) -> FunctionSpec {
    let f = parse_poly("z2-z1").unwrap();
    FunctionSpec::new(
        format!("u1-n{n}"),
        Kind::HolomorphicPairLog {
            c: 1.0 / (2.0 * n as f64),
            f,
            g: Poly2::monomial(0, n),
        },
        -1.5,
    )
}

/// u₂ = (1/2n)·log(|z₂ⁿ − z₁ⁿ|² + |z₂ⁿ|²).
pub fn u2(n: u32) -> FunctionSpec {
    let f = parse_poly(&format!("z2^{n}-z1^{n}")).unwrap();
    FunctionSpec::new(
        format!("u2-n{n}"),
        Kind::HolomorphicPairLog {
            c: 1.0 / (2.0 * n as f64),
            f,
            g: Poly2::monomial(0, n),
        },
        -1.5,
    )
}

/// The Coman–Guedj member (1/2n)·log(|z₂ − z₁ⁿ|² + |z₂ⁿ|²); not S¹-invariant.
pub fn coman_guedj(n: u32) -> FunctionSpec {
    let f = parse_poly(&format!("z2-z1^{n}")).unwrap();
    FunctionSpec::new(
        format!("coman-guedj-n{n}"),
        Kind::HolomorphicPairLog {
            c: 1.0 / (2.0 * n as f64),
            f,
            g: Poly2::monomial(0, n),
        },
        -1.5,
    )
}

/// a·log|z| normalized to sup = −1 on B₁.
pub fn radial(a: f64) -> FunctionSpec {
    FunctionSpec::new(format!("radial-a{a}"), Kind::Radial { a }, -1.0)
}

/// |z|² − 2.
pub fn sqnorm() -> FunctionSpec {
    FunctionSpec::new(
        "sqnorm",
        Kind::Custom { builtin: Builtin::SqNorm },
        -2.0,
    )
}

/// Demailly's original non-smooth max for ε = 1/m.
pub fn demailly_max(m: u32) -> FunctionSpec {
    FunctionSpec::new(
        format!("demailly-max-m{m}"),
        Kind::MaxOfLogs {
            a1: 1.0 / m as f64,
            a2: m as f64,
        },
        -1.0,
    )
}

/// The built-in catalog used by the CLI and the acceptance suite.
pub fn default_catalog() -> Vec<FunctionSpec> {
    let mut log_abs = radial(1.0);
    log_abs.name = "log-abs".into();
    vec![
        log_abs,
        radial(0.5),
        radial(2.0),
        demailly(1),
        demailly(2),
        demailly(3),
        u1(5),
        u2(5),
        coman_guedj(5),
        sqnorm(),
        demailly_max(2),
    ]
}

/// Find a catalog entry by name.
pub fn find<'a>(catalog: &'a [FunctionSpec], name: &str) -> Result<&'a FunctionSpec> {
    catalog
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownFunction(name.into()))
}

/// Parse a catalog file: one record per line, `name kind key=value ...`,
/// `#` starts a comment. Kinds and keys:
///
/// ```text
/// radial       a=<f64>
/// pairlog      c=<f64> f=<poly> g=<poly>
/// maxlogs      a1=<f64> a2=<f64>
/// smoothedmax  a1=<f64> a2=<f64> p=<f64>
/// custom       builtin=sqnorm
/// ```
///
/// Every kind accepts `shift=<f64>` (default −1.5). Polynomials follow the
/// grammar of [`poly::parse_poly`], e.g. `f=z2-z1^5`.
pub fn parse_catalog(text: &str) -> Result<Vec<FunctionSpec>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let name = fields.next().unwrap().to_string();
        let kind_name = fields
            .next()
            .ok_or_else(|| Error::Parse(format!("line {}: missing kind", lineno + 1)))?;
        let mut kv = std::collections::HashMap::new();
        for field in fields {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got `{field}`", lineno + 1)))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let shift: f64 = match kv.get("shift") {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad shift", lineno + 1)))?,
            None => -1.5,
        };
        let getf = |key: &str| -> Result<f64> {
            kv.get(key)
                .ok_or_else(|| Error::Parse(format!("line {}: missing {key}=", lineno + 1)))?
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad {key}", lineno + 1)))
        };
        let kind = match kind_name {
            "radial" => Kind::Radial { a: getf("a")? },
            "pairlog" => Kind::HolomorphicPairLog {
                c: getf("c")?,
                f: parse_poly(kv.get("f").ok_or_else(|| Error::Parse(format!("line {}: missing f=", lineno + 1)))?)?,
                g: parse_poly(kv.get("g").ok_or_else(|| Error::Parse(format!("line {}: missing g=", lineno + 1)))?)?,
            },
            "maxlogs" => Kind::MaxOfLogs {
                a1: getf("a1")?,
                a2: getf("a2")?,
            },
            "smoothedmax" => Kind::SmoothedMax {
                a1: getf("a1")?,
                a2: getf("a2")?,
                p: getf("p")?,
            },
            "custom" => {
                let b = kv
                    .get("builtin")
                    .ok_or_else(|| Error::Parse(format!("line {}: missing builtin=", lineno + 1)))?;
                match b.as_str() {
                    "sqnorm" => Kind::Custom { builtin: Builtin::SqNorm },
                    other => return Err(Error::Parse(format!("line {}: unknown builtin `{other}`", lineno + 1))),
                }
            }
            other => return Err(Error::Parse(format!("line {}: unknown kind `{other}`", lineno + 1))),
        };
        out.push(FunctionSpec::new(name, kind, shift));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(a: f64, b: f64) -> Point {
        Point::from_re_im(a, 0.0, b, 0.0)
    }

    #[test]
    fn eval_trivial_and_derived_examples() {
        let log = radial(1.0).with_shift(0.0);
        assert_relative_eq!(eval(&log, &pt(0.0, 0.5)).unwrap(), 0.5f64.ln());

        // Demailly surrogate m=2 at (0, 0.5): (1/4) log(0.5^8) = 2 log 0.5.
        let d2 = demailly(2).with_shift(0.0);
        assert_relative_eq!(
            eval(&d2, &pt(0.0, 0.5)).unwrap(),
            2.0 * 0.5f64.ln(),
            epsilon = 1e-14
        );

        // Coman–Guedj n=5 at (0.1, 0.1).
        let cg = coman_guedj(5).with_shift(0.0);
        let expect = 0.1f64 * 0.0 + (1.0 / 10.0) * ((0.1 - 1e-5f64).powi(2) + 1e-10).ln();
        assert_relative_eq!(eval(&cg, &pt(0.1, 0.1)).unwrap(), expect, epsilon = 1e-13);

        assert!(eval(&log, &pt(0.0, 0.0)).is_err());
        assert!(eval(&log, &pt(0.0, 1.0)).is_err());
    }

    #[test]
    fn invariant_eval_routes_through_invariants() {
        let d2 = demailly(2);
        let p = crate::hopf::point_from_hopf(&crate::hopf::RealHopf::new(0.3, 1.1, 0.9, 2.2));
        let u0 = eval(&d2, &p).unwrap();
        for k in 1..8 {
            let q = p.rotate(0.77 * k as f64);
            let u = eval(&d2, &q).unwrap();
            assert_relative_eq!(u, u0, epsilon = 1e-13);
        }
    }

    #[test]
    fn profile_examples() {
        // a log|z|: u = a t (+shift), u̇ = a in any direction.
        let f = radial(2.0).with_shift(0.0);
        let d = Direction::zeta(Complex64::new(0.3, 0.1));
        let s = profile(&f, -3.0, &d).unwrap();
        assert_relative_eq!(s.u, -6.0);
        assert_relative_eq!(s.u_dot, 2.0);
        assert!(s.has_analytic_dot);

        // Demailly m=2 on the line z1 = 0: slope m = 2 for every t.
        let d2 = demailly(2).with_shift(0.0);
        let pole = Direction::zeta(Complex64::new(0.0, 0.0));
        let s = profile(&d2, -30.0, &pole).unwrap();
        assert_relative_eq!(s.u_dot, 2.0, epsilon = 1e-12);

        // |z|² (kind Custom): u = e^{2t}, FD u̇ ≈ 2e^{2t}.
        let sq = sqnorm().with_shift(0.0);
        let s = profile(&sq, -1.0, &d).unwrap();
        assert_relative_eq!(s.u, (-2.0f64).exp(), epsilon = 1e-14);
        assert_relative_eq!(s.u_dot, 2.0 * (-2.0f64).exp(), epsilon = 1e-8);
        assert!(!s.has_analytic_dot);
    }

    #[test]
    fn analytic_dot_matches_finite_differences() {
        let specs = [demailly(2), u1(5), u2(5), coman_guedj(5)];
        let dirs = [
            Direction::zeta(Complex64::new(0.4, 0.2)),
            Direction::zeta(Complex64::new(0.99, 0.0)),
            Direction::xi(Complex64::new(0.3, -0.8)),
        ];
        for spec in &specs {
            for d in &dirs {
                let lr = LineRestriction::of(spec, d);
                for &t in &[-0.5, -2.0, -6.0] {
                    let (_, dot) = lr.sample(t);
                    let h = 1e-6;
                    let (up, _) = lr.sample(t + h);
                    let (um, _) = lr.sample(t - h);
                    let fd = (up - um) / (2.0 * h);
                    assert_relative_eq!(dot, fd, epsilon = 1e-7, max_relative = 1e-7);
                }
            }
        }
    }

    #[test]
    fn deep_tail_slopes_are_exact_asymptotes() {
        // At t = -800 a naive evaluation of e^{2t} underflows; the line
        // restriction must still give the exact asymptotic slope.
        let d2 = demailly(2).with_shift(0.0);
        let generic = Direction::zeta(Complex64::new(0.37, 0.11));
        let lr = LineRestriction::of(&d2, &generic);
        let (_, dot) = lr.sample(-800.0);
        assert_relative_eq!(dot, 0.5, epsilon = 1e-12);
        assert_relative_eq!(lr.tail_slope(), 0.5);

        let pole = Direction::zeta(Complex64::new(0.0, 0.0));
        let lr = LineRestriction::of(&d2, &pole);
        assert_relative_eq!(lr.tail_slope(), 2.0);

        // u1: exceptional direction ζ = 1 has slope 1, generic 1/5.
        let u = u1(5);
        let exc = Direction::zeta(Complex64::new(1.0, 0.0));
        assert_relative_eq!(LineRestriction::of(&u, &exc).tail_slope(), 1.0);
        let lr = LineRestriction::of(&u, &generic);
        assert_relative_eq!(lr.tail_slope(), 0.2);
    }

    #[test]
    fn invariance_verdicts() {
        assert!(check_s1_invariance(&demailly(2), 300, 1e-9, 1).is_invariant());
        assert!(check_s1_invariance(&u1(5), 300, 1e-9, 1).is_invariant());
        assert!(check_s1_invariance(&u2(5), 300, 1e-9, 1).is_invariant());
        match check_s1_invariance(&coman_guedj(5), 300, 1e-9, 1) {
            InvarianceVerdict::NotInvariant { max_violation } => assert!(max_violation > 1e-4),
            v => panic!("expected NotInvariant, got {v:?}"),
        }
    }

    #[test]
    fn normalize_examples() {
        // log|z| with no shift: sup = 0 on B₁, so normalize shifts by -1.
        let log = radial(1.0).with_shift(0.0);
        let n = normalize(&log, 2000, 5).unwrap();
        assert_relative_eq!(n.shift, -1.0, epsilon = 1e-6);

        // Already-normalized entries are unchanged.
        let f = radial(1.0).with_shift(-5.0);
        let n = normalize(&f, 2000, 5).unwrap();
        assert_relative_eq!(n.shift, -5.0);

        // |z|²: sup = 1, shift becomes -2.
        let sq = sqnorm().with_shift(0.0);
        let n = normalize(&sq, 2000, 5).unwrap();
        assert_relative_eq!(n.shift, -2.0, epsilon = 1e-6);
    }

    #[test]
    fn surrogate_construction() {
        // (f=z1, g=z2^4, c=1/4) is the Demailly surrogate for ε = 1/2:
        // tail slopes match max{(1/2)log|z1|, 2 log|z2|} at t = -30.
        let s = smoothed_surrogate("dem2", 0.25, parse_poly("z1").unwrap(), parse_poly("z2^4").unwrap()).unwrap();
        assert!(s.flags.s1_invariant);
        assert!(s.flags.toric);
        let original = demailly_max(2);
        for d in [
            Direction::zeta(Complex64::new(0.0, 0.0)),
            Direction::zeta(Complex64::new(0.5, 0.2)),
            Direction::xi(Complex64::new(0.0, 0.0)),
        ] {
            let a = LineRestriction::of(&s, &d).tail_slope();
            let b = LineRestriction::of(&original, &d).tail_slope();
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }

        // u1/u2 shapes from the paper's examples.
        let s = smoothed_surrogate("u1", 0.1, parse_poly("z2-z1").unwrap(), parse_poly("z2^5").unwrap()).unwrap();
        assert!(s.flags.s1_invariant);
        assert!(!s.flags.toric);

        // A pair with a common zero line is rejected.
        let bad = smoothed_surrogate(
            "bad",
            0.5,
            parse_poly("z2-z1").unwrap(),
            parse_poly("z2^2-z1*z2").unwrap(),
        );
        assert!(matches!(bad, Err(Error::CommonZero { .. })));
    }

    #[test]
    fn fiber_profiles_are_monotone_and_convex_in_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in [demailly(2), u1(5), u2(5), radial(1.0), sqnorm()] {
            for _ in 0..20 {
                let d = Direction::from_angles(
                    rng.gen_range(0.05..std::f64::consts::PI - 0.05),
                    rng.gen_range(0.0..crate::hopf::TWO_PI),
                );
                let lr = LineRestriction::of(&spec, &d);
                let ts: Vec<f64> = (0..60).map(|k| -12.0 + 0.2 * k as f64).collect();
                let us: Vec<f64> = ts.iter().map(|&t| lr.sample(t).0).collect();
                for w in us.windows(2) {
                    assert!(w[1] >= w[0] - 1e-12, "{}: u_t not monotone", spec.name);
                }
                for w in us.windows(3) {
                    assert!(
                        w[2] - 2.0 * w[1] + w[0] >= -1e-9,
                        "{}: u_t not convex",
                        spec.name
                    );
                }
            }
        }
    }

    #[test]
    fn pairlog_is_c2_by_second_differences() {
        // Central second differences of eval converge at rate h² on sample
        // points, confirming C² smoothness off the origin.
        let spec = u1(5);
        let base = pt(0.21, 0.33);
        let dir = [0.4, -0.1, 0.2, 0.85];
        let norm = (dir.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let second = |h: f64| -> f64 {
            let shf = |s: f64| {
                Point::from_re_im(
                    base.z1.re + s * dir[0] / norm,
                    base.z1.im + s * dir[1] / norm,
                    base.z2.re + s * dir[2] / norm,
                    base.z2.im + s * dir[3] / norm,
                )
            };
            (eval(&spec, &shf(h)).unwrap() - 2.0 * eval(&spec, &shf(0.0)).unwrap()
                + eval(&spec, &shf(-h)).unwrap())
                / (h * h)
        };
        let d1 = second(1e-3);
        let d2 = second(5e-4);
        let d3 = second(2.5e-4);
        // Successive halvings agree ever more closely (h² convergence).
        assert!((d2 - d3).abs() <= 0.35 * (d1 - d2).abs() + 1e-9);
    }

    #[test]
    fn catalog_file_round_trip() {
        let text = "\
# demo catalog
mylog radial a=1 shift=-1
dem2  pairlog c=0.25 f=z1 g=z2^4
cg5   pairlog c=0.1 f=z2-z1^5 g=z2^5
sq    custom builtin=sqnorm shift=-2
dm    maxlogs a1=0.5 a2=2
sm    smoothedmax a1=0.5 a2=2 p=4
";
        let cat = parse_catalog(text).unwrap();
        assert_eq!(cat.len(), 6);
        assert_eq!(cat[0].kind, Kind::Radial { a: 1.0 });
        assert!(cat[1].flags.s1_invariant && cat[1].flags.toric);
        assert!(!cat[2].flags.s1_invariant);
        assert!(cat[5].pair_view().is_some());
        assert!(parse_catalog("x unknownkind a=1").is_err());
        assert!(parse_catalog("x radial").is_err());
    }

    #[test]
    fn smoothed_max_lowers_to_the_demailly_pair() {
        let sm = FunctionSpec::new(
            "sm",
            Kind::SmoothedMax { a1: 0.5, a2: 2.0, p: 4.0 },
            0.0,
        );
        let pv = sm.pair_view().unwrap();
        assert_relative_eq!(pv.c, 0.25);
        assert_eq!(pv.f, Poly2::monomial(1, 0));
        assert_eq!(pv.g, Poly2::monomial(0, 4));
        let d2 = demailly(2).with_shift(0.0);
        let p = pt(0.2, 0.4);
        assert_relative_eq!(
            eval(&sm, &p).unwrap(),
            eval(&d2, &p).unwrap(),
            epsilon = 1e-13
        );
    }
}
