//! Independent boundary-mass oracle: ∫_{S_R} d^c u ∧ dd^c u evaluated as a
//! genuine 3-form integral over the boundary sphere, with no use of the
//! fiber decomposition.
//!
//! The 3-form is evaluated pointwise on tangent triples from ambient complex
//! derivatives, and the sphere is covered by a windowed global chart plus
//! log-polar tube patches around the curves where the dominant holomorphic
//! factor vanishes (the Monge–Ampère boundary mass of the pair members
//! concentrates there in layers far below any global grid resolution).

use crate::catalog::poly::{Poly1, Poly2};
use crate::catalog::{Builtin, FunctionSpec, Kind};
use crate::hopf::{Chart, Point};
use crate::math::{gauss_legendre, gauss_legendre_on, pairwise_sum, sigmoid};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// First derivatives and mixed complex Hessian of u at a point.
#[derive(Debug, Clone, Copy)]
pub struct AmbientDerivs {
    /// (∂u/∂z₁, ∂u/∂z₂)
    pub grad: [Complex64; 2],
    /// u_{z_j z̄_k}, Hermitian.
    pub hess: [[Complex64; 2]; 2],
}

/// Ambient derivatives: closed forms through (f, g, ∂f, ∂g) for holomorphic
/// pairs and radial members, 4D central differences (h = 1e-4·r) for
/// `Custom` kinds.
pub fn ambient_derivs(spec: &FunctionSpec, p: &Point) -> Result<AmbientDerivs> {
    spec.require_smooth("ambient_derivs")?;
    let pv = match &spec.kind {
        Kind::Radial { a } => {
            // a·log|z| as the pair (a/2)·log(|z₁|² + |z₂|²).
            return Ok(pair_ambient(
                0.5 * a,
                &Poly2::monomial(1, 0),
                &Poly2::monomial(0, 1),
                p,
            ));
        }
        Kind::Custom { builtin: Builtin::SqNorm } => return fd_ambient(spec, p),
        _ => spec.pair_view().ok_or_else(|| Error::NotSmooth {
            name: spec.name.clone(),
            kind: spec.kind.name(),
        })?,
    };
    Ok(pair_ambient(pv.c, &pv.f, &pv.g, p))
}

fn pair_ambient(c: f64, f: &Poly2, g: &Poly2, p: &Point) -> AmbientDerivs {
    let fv = f.eval(p.z1, p.z2);
    let gv = g.eval(p.z1, p.z2);
    let (f1p, f2p) = f.gradient();
    let (g1p, g2p) = g.gradient();
    let fd = [f1p.eval(p.z1, p.z2), f2p.eval(p.z1, p.z2)];
    let gd = [g1p.eval(p.z1, p.z2), g2p.eval(p.z1, p.z2)];
    let s = fv.norm_sqr() + gv.norm_sqr();
    let grad = [
        c * (fd[0] * fv.conj() + gd[0] * gv.conj()) / s,
        c * (fd[1] * fv.conj() + gd[1] * gv.conj()) / s,
    ];
    // u_{jk̄} = c·W_j·conj(W_k)/S² with W_j = g ∂_j f − f ∂_j g.
    let w = [gv * fd[0] - fv * gd[0], gv * fd[1] - fv * gd[1]];
    let mut hess = [[Complex64::new(0.0, 0.0); 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            hess[j][k] = c * w[j] * w[k].conj() / (s * s);
        }
    }
    AmbientDerivs { grad, hess }
}

fn fd_ambient(spec: &FunctionSpec, p: &Point) -> Result<AmbientDerivs> {
    let r = p.norm();
    let h = 1e-4 * r;
    let shift = |p: &Point, axis: usize, s: f64| -> Point {
        let mut q = *p;
        match axis {
            0 => q.z1.re += s,
            1 => q.z1.im += s,
            2 => q.z2.re += s,
            _ => q.z2.im += s,
        }
        q
    };
    let u = |q: &Point| crate::catalog::eval(spec, q);
    let u0 = u(p)?;
    let mut d1 = [0.0f64; 4];
    let mut d2 = [[0.0f64; 4]; 4];
    for a in 0..4 {
        let up = u(&shift(p, a, h))?;
        let um = u(&shift(p, a, -h))?;
        d1[a] = (up - um) / (2.0 * h);
        d2[a][a] = (up - 2.0 * u0 + um) / (h * h);
    }
    for a in 0..4 {
        for b in (a + 1)..4 {
            let upp = u(&shift(&shift(p, a, h), b, h))?;
            let upm = u(&shift(&shift(p, a, h), b, -h))?;
            let ump = u(&shift(&shift(p, a, -h), b, h))?;
            let umm = u(&shift(&shift(p, a, -h), b, -h))?;
            let v = (upp - upm - ump + umm) / (4.0 * h * h);
            d2[a][b] = v;
            d2[b][a] = v;
        }
    }
    // ∂_{z_j} = (∂_x − i∂_y)/2; u_{jk̄} = ((∂x∂x + ∂y∂y) + i(∂x∂y − ∂y∂x))/4
    // on the corresponding axis pairs.
    let zi = |j: usize| (2 * j, 2 * j + 1);
    let grad = [
        Complex64::new(d1[0] / 2.0, -d1[1] / 2.0),
        Complex64::new(d1[2] / 2.0, -d1[3] / 2.0),
    ];
    let mut hess = [[Complex64::new(0.0, 0.0); 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            let (xj, yj) = zi(j);
            let (xk, yk) = zi(k);
            hess[j][k] = Complex64::new(
                (d2[xj][xk] + d2[yj][yk]) / 4.0,
                (d2[xj][yk] - d2[yj][xk]) / 4.0,
            );
        }
    }
    Ok(AmbientDerivs { grad, hess })
}

/// The 3-form d^c u ∧ dd^c u evaluated on three tangent vectors of ℂ².
fn three_form(d: &AmbientDerivs, t: &[[Complex64; 2]; 3]) -> f64 {
    let alpha = |x: &[Complex64; 2]| -> f64 { (d.grad[0] * x[0] + d.grad[1] * x[1]).im };
    let beta = |y: &[Complex64; 2], z: &[Complex64; 2]| -> f64 {
        let mut q = Complex64::new(0.0, 0.0);
        for j in 0..2 {
            for k in 0..2 {
                q += d.hess[j][k] * y[j] * z[k].conj();
            }
        }
        -2.0 * q.im
    };
    alpha(&t[0]) * beta(&t[1], &t[2]) - alpha(&t[1]) * beta(&t[0], &t[2])
        + alpha(&t[2]) * beta(&t[0], &t[1])
}

fn real4(z: &Point) -> [f64; 4] {
    [z.z1.re, z.z1.im, z.z2.re, z.z2.im]
}

fn real4c(v: &[Complex64; 2]) -> [f64; 4] {
    [v[0].re, v[0].im, v[1].re, v[1].im]
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for col in 0..4 {
        let mut piv = col;
        for row in (col + 1)..4 {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for row in (col + 1)..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

/// Outward orientation sign of a tangent triple at z.
fn orientation(z: &Point, t: &[[Complex64; 2]; 3]) -> f64 {
    let m = [real4(z), real4c(&t[0]), real4c(&t[1]), real4c(&t[2])];
    if det4(&m) >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Overall sign fixed once so that ∫_{S_R} d^c(log|z|) ∧ dd^c(log|z|) = +π².
const GLOBAL_SIGN: f64 = 1.0;

fn form_value(spec: &FunctionSpec, z: &Point, t: &[[Complex64; 2]; 3]) -> Result<f64> {
    let d = ambient_derivs(spec, z)?;
    Ok(GLOBAL_SIGN * orientation(z, t) * three_form(&d, t))
}

/// A tube patch around the zero curve of the dominant factor, expressed as a
/// graph: either z₂ = ψ(z₁) (`over_z1`) or z₁ = ψ(z₂).
#[derive(Debug, Clone)]
pub struct Tube {
    pub over_z1: bool,
    pub psi: Poly1,
    /// Outer |v| radius of the window, as a multiple of the sphere radius.
    pub radius_frac: f64,
    /// The complementary factor; its magnitude on the curve places the inner
    /// end of the s-range.
    pub high: Poly2,
}

/// v(z): the transverse coordinate of the tube at a point.
pub fn tube_v(tube: &Tube, z: &Point) -> Complex64 {
    if tube.over_z1 {
        z.z2 - tube.psi.eval(z.z1)
    } else {
        z.z1 - tube.psi.eval(z.z2)
    }
}

fn tube_window(tube: &Tube, r: f64, vmag: f64) -> f64 {
    if vmag <= 0.0 {
        return 1.0;
    }
    let s0 = (tube.radius_frac * r).ln() - 1.6;
    let x = (s0 - vmag.ln()) / 0.45;
    sigmoid(2.0 * x + 0.6 * x * x * x)
}

/// Tubes for a catalog member: one per zero direction (or graph curve) of
/// the factor that dominates away from its zeros.
pub fn tubes_for(spec: &FunctionSpec) -> Vec<Tube> {
    let Some(pv) = spec.pair_view() else {
        return Vec::new();
    };
    let lowest = |p: &Poly2| p.terms.iter().map(|m| m.p + m.q).min().unwrap_or(0);
    let (lo_f, lo_g) = (lowest(&pv.f), lowest(&pv.g));
    if lo_f == lo_g {
        return Vec::new();
    }
    let low = if lo_f < lo_g { &pv.f } else { &pv.g };
    let high = if lo_f < lo_g { &pv.g } else { &pv.f };
    let mut tubes = Vec::new();
    if low.is_homogeneous() {
        // Factor through the exceptional directions: one linear tube per
        // distinct root of the chart sections (clusters from the root
        // finder are merged so multiple roots give a single tube).
        let mut roots: Vec<(bool, Complex64)> = Vec::new();
        let mut push_root = |over_z1: bool, root: Complex64, roots: &mut Vec<(bool, Complex64)>| {
            if !roots
                .iter()
                .any(|(o, z)| *o == over_z1 && (*z - root).norm() < 1e-6)
            {
                roots.push((over_z1, root));
            }
        };
        let pz = low.section(Chart::Zeta);
        if pz.degree() >= 1 {
            for root in pz.roots() {
                if root.norm() <= 1.0 + 1e-9 {
                    // line z₁ = ζ₀ z₂: v = z₁ − ζ₀ z₂, graph over z₂.
                    push_root(false, root, &mut roots);
                }
            }
        }
        let px = low.section(Chart::Xi);
        if px.degree() >= 1 {
            for root in px.roots() {
                if root.norm() < 1.0 - 1e-9 {
                    push_root(true, root, &mut roots);
                }
            }
        }
        for (over_z1, root) in roots {
            tubes.push(Tube {
                over_z1,
                psi: Poly1::new(vec![Complex64::new(0.0, 0.0), root]),
                radius_frac: 0.22,
                high: high.clone(),
            });
        }
    } else {
        // Graph shape: a single monomial in one variable of degree one plus
        // terms in the other variable only.
        let graph = |p: &Poly2, want_z2: bool| -> Option<Poly1> {
            let mut linear = Complex64::new(0.0, 0.0);
            let deg_other = p
                .terms
                .iter()
                .map(|m| if want_z2 { m.p } else { m.q })
                .max()
                .unwrap_or(0) as usize;
            let mut rest = vec![Complex64::new(0.0, 0.0); deg_other + 1];
            for m in &p.terms {
                match (want_z2, m.p, m.q) {
                    (true, 0, 1) => linear += m.coeff,
                    (true, k, 0) => rest[k as usize] += m.coeff,
                    (false, 1, 0) => linear += m.coeff,
                    (false, 0, k) => rest[k as usize] += m.coeff,
                    _ => return None,
                }
            }
            if linear.norm_sqr() == 0.0 {
                return None;
            }
            Some(Poly1::new(
                rest.iter().map(|c| -c / linear).collect(),
            ))
        };
        if let Some(psi) = graph(low, true) {
            tubes.push(Tube {
                over_z1: true,
                psi,
                radius_frac: 0.22,
                high: high.clone(),
            });
        } else if let Some(psi) = graph(low, false) {
            tubes.push(Tube {
                over_z1: false,
                psi,
                radius_frac: 0.22,
                high: high.clone(),
            });
        }
    }
    tubes
}

/// Quadrature sizes for the boundary oracle.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryConfig {
    pub n_theta: usize,
    pub n_phi: usize,
    pub n_eta: usize,
    pub n_alpha: usize,
    pub n_b: usize,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig {
            n_theta: 64,
            n_phi: 96,
            n_eta: 48,
            n_alpha: 64,
            n_b: 32,
        }
    }
}

/// ∫_{S_r} d^c u ∧ dd^c u by the windowed global chart plus tube patches.
pub fn boundary_mass(spec: &FunctionSpec, r: f64, cfg: &BoundaryConfig) -> Result<f64> {
    spec.require_smooth("boundary_mass")?;
    let tubes = tubes_for(spec);
    let global = global_part(spec, r, &tubes, cfg)?;
    let mut total = global;
    for tube in &tubes {
        total += tube_part(spec, r, tube, cfg)?;
    }
    Ok(total)
}

/// Global chart: z = r(ζ e^{iη}/√V, e^{iη}/√V) over (θ, φ, η) with the tube
/// windows removed.
fn global_part(
    spec: &FunctionSpec,
    r: f64,
    tubes: &[Tube],
    cfg: &BoundaryConfig,
) -> Result<f64> {
    let (xs, ws) = gauss_legendre(cfg.n_theta);
    let n_eta = if spec.flags.s1_invariant { 1 } else { cfg.n_eta };
    let eta_weight = 2.0 * PI / n_eta as f64;
    let dphi = 2.0 * PI / cfg.n_phi as f64;
    let mut tasks = Vec::new();
    for (x, wx) in xs.iter().zip(&ws) {
        let theta = x.acos();
        for j in 0..cfg.n_phi {
            let phi = (j as f64 + 0.5) * dphi;
            tasks.push((theta, phi, *wx));
        }
    }
    let vals: Result<Vec<f64>> = tasks
        .par_iter()
        .map(|&(theta, phi, wx)| -> Result<f64> {
            let zeta = Complex64::from_polar((theta / 2.0).tan(), phi);
            let v = 1.0 + zeta.norm_sqr();
            let sv = v.sqrt();
            // dζ/dθ and dζ/dφ.
            let dz_dtheta = Complex64::from_polar(v / 2.0, phi);
            let dz_dphi = Complex64::new(0.0, 1.0) * zeta;
            // ∂z/∂ζ and ∂z/∂ζ̄ of the section map at η = 0 (the η factor
            // rotates the whole frame and cancels in the oriented form).
            let dz1_dz = (1.0 - zeta.norm_sqr() / (2.0 * v)) / sv;
            let dz1_dzb = -zeta * zeta / (2.0 * v * sv);
            let dz2_dz = -zeta.conj() / (2.0 * v * sv);
            let dz2_dzb = -zeta / (2.0 * v * sv);
            let mut acc = 0.0;
            for k in 0..n_eta {
                let eta = (k as f64 + 0.5) * eta_weight;
                let e = Complex64::from_polar(1.0, eta);
                let z = Point::new(r * zeta * e / sv, r * e / sv);
                let win = 1.0
                    - tubes
                        .iter()
                        .map(|tb| tube_window(tb, r, tube_v(tb, &z).norm()))
                        .sum::<f64>();
                if win <= 1e-300 {
                    continue;
                }
                let chain = |dz: Complex64| -> [Complex64; 2] {
                    [
                        r * e * (dz1_dz * dz + dz1_dzb * dz.conj()),
                        r * e * (dz2_dz * dz + dz2_dzb * dz.conj()),
                    ]
                };
                let t_eta = [
                    Complex64::new(0.0, 1.0) * z.z1,
                    Complex64::new(0.0, 1.0) * z.z2,
                ];
                let tangents = [chain(dz_dtheta), chain(dz_dphi), t_eta];
                // dθ measure from the Gauss weight in cos θ.
                acc += win * form_value(spec, &z, &tangents)? / theta.sin().max(1e-300);
            }
            Ok(acc * wx * dphi * eta_weight)
        })
        .collect();
    Ok(pairwise_sum(&vals?))
}

/// One tube patch in (α, s = log|v|, b = arg v) coordinates: the base point
/// moves on the circle of the base variable, and the sphere constraint fixes
/// its modulus by Newton iteration.
fn tube_part(spec: &FunctionSpec, r: f64, tube: &Tube, cfg: &BoundaryConfig) -> Result<f64> {
    // Layer position: |v| where the transverse factor balances the
    // complementary factor evaluated on the curve, padded generously.
    let a0 = base_modulus(tube, r, 0.5, Complex64::new(0.0, 0.0))?;
    let base0 = Complex64::from_polar(a0, 0.5);
    let on_curve = if tube.over_z1 {
        Point::new(base0, tube.psi.eval(base0))
    } else {
        Point::new(tube.psi.eval(base0), base0)
    };
    let other_mag = tube.high.eval(on_curve.z1, on_curve.z2).norm().max(1e-280);
    let s_max = (tube.radius_frac * r).ln();
    let s_min = (other_mag.ln() - 45.0).min(s_max - 8.0).max(-320.0);
    let panel = 1.25;
    let n_panels = ((s_max - s_min) / panel).ceil() as usize;
    let panels: Vec<(f64, f64)> = (0..n_panels)
        .map(|k| {
            (
                s_min + (s_max - s_min) * k as f64 / n_panels as f64,
                s_min + (s_max - s_min) * (k + 1) as f64 / n_panels as f64,
            )
        })
        .collect();
    let dalpha = 2.0 * PI / cfg.n_alpha as f64;
    let db = 2.0 * PI / cfg.n_b as f64;
    let vals: Result<Vec<f64>> = panels
        .par_iter()
        .map(|&(pa, pb)| -> Result<f64> {
            let (ss, ws) = gauss_legendre_on(16, pa, pb);
            let mut acc = 0.0;
            for (s, wsk) in ss.iter().zip(&ws) {
                let vmag = s.exp();
                let chi = tube_window(tube, r, vmag);
                if chi <= 0.0 {
                    continue;
                }
                for ia in 0..cfg.n_alpha {
                    let alpha = (ia as f64 + 0.5) * dalpha;
                    for ib in 0..cfg.n_b {
                        let b = ib as f64 * db;
                        let v = Complex64::from_polar(vmag, b);
                        let (z, tangents) = tube_point(tube, r, alpha, v)?;
                        // d|v|·|v| db ds from s = log|v|.
                        acc += chi
                            * form_value(spec, &z, &tangents)?
                            * wsk
                            * dalpha
                            * db;
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    Ok(pairwise_sum(&vals?))
}

/// Modulus a of the base variable so that the point sits on S_r.
fn base_modulus(tube: &Tube, r: f64, alpha: f64, v: Complex64) -> Result<f64> {
    let mut a = r / (1.0 + tube.psi.eval(Complex64::from_polar(r, alpha)).norm() / r).sqrt();
    for _ in 0..60 {
        let base = Complex64::from_polar(a, alpha);
        let other = tube.psi.eval(base) + v;
        let c = a * a + other.norm_sqr() - r * r;
        let dpsi = tube.psi.derivative().eval(base);
        let e = Complex64::from_polar(1.0, alpha);
        let dc = 2.0 * a + 2.0 * (other.conj() * dpsi * e).re;
        let step = c / dc;
        a -= step;
        if step.abs() < 1e-15 * r {
            break;
        }
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::Config("tube base modulus failed to converge".into()));
    }
    Ok(a)
}

/// Point and tangents of the tube parametrization at (α, v).
fn tube_point(
    tube: &Tube,
    r: f64,
    alpha: f64,
    v: Complex64,
) -> Result<(Point, [[Complex64; 2]; 3])> {
    let a = base_modulus(tube, r, alpha, v)?;
    let base = Complex64::from_polar(a, alpha);
    let e = Complex64::from_polar(1.0, alpha);
    let psi_v = tube.psi.eval(base);
    let other = psi_v + v;
    let dpsi = tube.psi.derivative().eval(base);
    // Implicit differentiation of a² + |ψ(a e^{iα}) + v|² = r².
    let dc_da = 2.0 * a + 2.0 * (other.conj() * dpsi * e).re;
    let dc_dalpha = 2.0 * (other.conj() * dpsi * Complex64::new(0.0, 1.0) * base).re;
    // v moves with s (dv = v ds) and b (dv = iv db).
    let dc_ds = 2.0 * (other.conj() * v).re;
    let dc_db = 2.0 * (other.conj() * Complex64::new(0.0, 1.0) * v).re;
    let da_dalpha = -dc_dalpha / dc_da;
    let da_ds = -dc_ds / dc_da;
    let da_db = -dc_db / dc_da;
    let dbase_dalpha = e * da_dalpha + Complex64::new(0.0, 1.0) * base;
    let dbase_ds = e * da_ds;
    let dbase_db = e * da_db;
    let dother = |dbase: Complex64, dv: Complex64| dpsi * dbase + dv;
    let t_alpha_pair = (
        dbase_dalpha,
        dother(dbase_dalpha, Complex64::new(0.0, 0.0)),
    );
    let t_s_pair = (dbase_ds, dother(dbase_ds, v));
    let t_b_pair = (dbase_db, dother(dbase_db, Complex64::new(0.0, 1.0) * v));
    let assemble = |pair: (Complex64, Complex64)| -> [Complex64; 2] {
        if tube.over_z1 {
            [pair.0, pair.1]
        } else {
            [pair.1, pair.0]
        }
    };
    let z = if tube.over_z1 {
        Point::new(base, other)
    } else {
        Point::new(other, base)
    };
    Ok((
        z,
        [
            assemble(t_alpha_pair),
            assemble(t_s_pair),
            assemble(t_b_pair),
        ],
    ))
}
