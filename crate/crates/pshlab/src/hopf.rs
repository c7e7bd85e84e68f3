//! Coordinate systems on ℂ² ∖ {0}.
//!
//! The real Hopf coordinate (r, η, θ, φ) represents a point as
//!
//! ```text
//! z₁ = r sin(θ/2) e^{i(η+φ)/2},   z₂ = r cos(θ/2) e^{i(η-φ)/2},
//! ```
//!
//! with θ ∈ [0, π], φ ∈ [0, 2π), η ∈ [0, 4π). The diagonal S¹ action moves η
//! only, and the quotient map to ℂP¹ is ζ = z₁/z₂ = tan(θ/2) e^{iφ}.

use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;
pub const FOUR_PI: f64 = 4.0 * PI;

/// A point of ℂ² in Euclidean coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl Point {
    pub fn new(z1: Complex64, z2: Complex64) -> Self {
        Point { z1, z2 }
    }

    pub fn from_re_im(z1_re: f64, z1_im: f64, z2_re: f64, z2_im: f64) -> Self {
        Point::new(Complex64::new(z1_re, z1_im), Complex64::new(z2_re, z2_im))
    }

    /// Euclidean norm r = √(|z₁|² + |z₂|²).
    pub fn norm(&self) -> f64 {
        (self.z1.norm_sqr() + self.z2.norm_sqr()).sqrt()
    }

    /// The diagonal circle action z ↦ e^{iθ} z.
    pub fn rotate(&self, angle: f64) -> Point {
        let u = Complex64::from_polar(1.0, angle);
        Point::new(self.z1 * u, self.z2 * u)
    }
}

/// Real Hopf coordinate of a point of ℂ² ∖ {0}.
#[derive(Debug, Clone, Copy)]
pub struct RealHopf {
    /// Radius, r > 0.
    pub r: f64,
    /// Fiber angle in [0, 4π).
    pub eta: f64,
    /// Polar angle in [0, π].
    pub theta: f64,
    /// Azimuthal angle in [0, 2π).
    pub phi: f64,
}

impl RealHopf {
    pub fn new(r: f64, eta: f64, theta: f64, phi: f64) -> Self {
        RealHopf { r, eta, theta, phi }
    }

    /// Log-radius t = log r.
    pub fn t(&self) -> f64 {
        self.r.ln()
    }
}

/// Coordinate chart on ℂP¹.
///
/// `Zeta` holds ζ = z₁/z₂ near the ζ = 0 pole (θ ≤ π/2), `Xi` holds
/// ξ = 1/ζ = z₂/z₁ near the other pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    Zeta,
    Xi,
}

/// A direction on ℂP¹ in one of the two charts.
///
/// Canonical representations keep |w| ≤ 1; constructors tolerate a hysteresis
/// band up to |w| = 1.1 before switching charts, so callers tracking a moving
/// direction near the equator do not flip-flop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub chart: Chart,
    pub w: Complex64,
}

/// Chart-switch hysteresis: |w| above this forces re-normalization.
const CHART_HYSTERESIS: f64 = 1.1;

impl Direction {
    /// Direction from a chart coordinate, re-normalized when the coordinate
    /// leaves the hysteresis band.
    pub fn new(chart: Chart, w: Complex64) -> Self {
        let d = Direction { chart, w };
        if w.norm() > CHART_HYSTERESIS {
            d.flip()
        } else {
            d
        }
    }

    pub fn zeta(w: Complex64) -> Self {
        Direction::new(Chart::Zeta, w)
    }

    pub fn xi(w: Complex64) -> Self {
        Direction::new(Chart::Xi, w)
    }

    /// The same point of ℂP¹ in the other chart. The ζ = 0 pole has no Xi
    /// representation (and vice versa); flipping an exact pole keeps it put.
    pub fn flip(&self) -> Direction {
        if self.w.norm_sqr() == 0.0 {
            return *self;
        }
        Direction {
            chart: match self.chart {
                Chart::Zeta => Chart::Xi,
                Chart::Xi => Chart::Zeta,
            },
            w: self.w.inv(),
        }
    }

    /// Extended value of ζ = z₁/z₂ (None at the ζ = ∞ pole).
    pub fn zeta_value(&self) -> Option<Complex64> {
        match self.chart {
            Chart::Zeta => Some(self.w),
            Chart::Xi => {
                if self.w.norm_sqr() == 0.0 {
                    None
                } else {
                    Some(self.w.inv())
                }
            }
        }
    }

    /// Polar angle θ ∈ [0, π] of this direction.
    pub fn theta(&self) -> f64 {
        match self.chart {
            Chart::Zeta => 2.0 * self.w.norm().atan(),
            Chart::Xi => PI - 2.0 * self.w.norm().atan(),
        }
    }

    /// Azimuthal angle φ ∈ [0, 2π) of this direction.
    pub fn phi(&self) -> f64 {
        let raw = match self.chart {
            Chart::Zeta => self.w.arg(),
            Chart::Xi => -self.w.arg(),
        };
        raw.rem_euclid(TWO_PI)
    }

    pub fn from_angles(theta: f64, phi: f64) -> Direction {
        if theta <= PI / 2.0 {
            Direction {
                chart: Chart::Zeta,
                w: Complex64::from_polar((theta / 2.0).tan(), phi),
            }
        } else {
            Direction {
                chart: Chart::Xi,
                w: Complex64::from_polar((PI / 2.0 - theta / 2.0).tan().max(0.0), -phi),
            }
        }
    }
}

fn normalize_angle(a: f64, period: f64) -> f64 {
    let m = a.rem_euclid(period);
    if m == period {
        0.0
    } else {
        m
    }
}

/// Real Hopf coordinates of a Euclidean point.
///
/// θ = 2 atan2(|z₁|, |z₂|); η + φ = 2 arg z₁ and η − φ = 2 arg z₂, with η
/// normalized into [0, 4π) and φ into [0, 2π). At the poles θ ∈ {0, π} one of
/// the two arguments is free and is resolved to keep the defined one exact.
pub fn hopf_from_point(p: &Point) -> Result<RealHopf> {
    let r = p.norm();
    if r == 0.0 {
        return Err(Error::ZeroPoint);
    }
    let theta = 2.0 * p.z1.norm().atan2(p.z2.norm());
    let a1 = p.z1.arg(); // (η+φ)/2, defined unless z1 = 0
    let a2 = p.z2.arg(); // (η-φ)/2, defined unless z2 = 0
    let (eta, phi) = if p.z1.norm_sqr() == 0.0 {
        (normalize_angle(2.0 * a2, FOUR_PI), 0.0)
    } else if p.z2.norm_sqr() == 0.0 {
        (normalize_angle(2.0 * a1, FOUR_PI), 0.0)
    } else {
        let eta = a1 + a2;
        let phi = a1 - a2;
        // Shifting phi by 2π shifts eta by 2π as well (both halve the same
        // arguments), so reduce phi into [0, 2π) first, then eta.
        let mut eta = eta;
        let mut phi = phi;
        if phi < 0.0 {
            phi += TWO_PI;
            eta += TWO_PI;
        }
        (normalize_angle(eta, FOUR_PI), normalize_angle(phi, TWO_PI))
    };
    Ok(RealHopf::new(r, eta, theta, phi))
}

/// Euclidean point of a real Hopf coordinate.
pub fn point_from_hopf(h: &RealHopf) -> Point {
    let s = (h.theta / 2.0).sin();
    let c = (h.theta / 2.0).cos();
    let z1 = Complex64::from_polar(h.r * s, 0.5 * (h.eta + h.phi));
    let z2 = Complex64::from_polar(h.r * c, 0.5 * (h.eta - h.phi));
    Point::new(z1, z2)
}

/// Projection to ℂP¹: ζ = tan(θ/2) e^{iφ} in chart Zeta for θ ≤ π/2, else
/// ξ = cot(θ/2) e^{-iφ} in chart Xi.
pub fn direction_of(h: &RealHopf) -> Direction {
    Direction::from_angles(h.theta, h.phi)
}

/// A point of the complex line ℓ_d through the origin, at log-radius t, with
/// fiber angle η.
pub fn line_point(d: &Direction, t: f64, eta: f64) -> Point {
    point_from_hopf(&RealHopf::new(t.exp(), eta, d.theta(), d.phi()))
}

/// Density of the Fubini–Study form ω = i dζ∧dζ̄ / 2(1+|ζ|²)² against
/// i dζ∧dζ̄ of the chart coordinate; the same expression holds in either
/// chart. Integrating it over ℂP¹ gives π.
pub fn fs_weight(d: &Direction) -> f64 {
    let v = 1.0 + d.w.norm_sqr();
    0.5 / (v * v)
}
