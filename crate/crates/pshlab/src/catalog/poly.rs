//! Polynomials in (z₁, z₂) for the holomorphic-pair catalog members, their
//! chart sections on ℂP¹ and their restrictions to complex lines through 0.

use crate::hopf::{Chart, Direction};
use crate::{Error, Result};
use num_complex::Complex64;
use std::fmt;

/// A monomial c·z₁^p·z₂^q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coeff: Complex64,
    pub p: u32,
    pub q: u32,
}

/// A polynomial in (z₁, z₂), stored as a sum of monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    pub terms: Vec<Monomial>,
}

impl Poly2 {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Poly2 { terms }
    }

    /// z₁^p z₂^q with unit coefficient.
    pub fn monomial(p: u32, q: u32) -> Self {
        Poly2::new(vec![Monomial {
            coeff: Complex64::new(1.0, 0.0),
            p,
            q,
        }])
    }

    pub fn eval(&self, z1: Complex64, z2: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|m| m.coeff * z1.powu(m.p) * z2.powu(m.q))
            .sum()
    }

    /// (∂/∂z₁, ∂/∂z₂).
    pub fn gradient(&self) -> (Poly2, Poly2) {
        let d1 = Poly2::new(
            self.terms
                .iter()
                .filter(|m| m.p > 0)
                .map(|m| Monomial {
                    coeff: m.coeff * m.p as f64,
                    p: m.p - 1,
                    q: m.q,
                })
                .collect(),
        );
        let d2 = Poly2::new(
            self.terms
                .iter()
                .filter(|m| m.q > 0)
                .map(|m| Monomial {
                    coeff: m.coeff * m.q as f64,
                    p: m.p,
                    q: m.q - 1,
                })
                .collect(),
        );
        (d1, d2)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|m| m.p + m.q).max().unwrap_or(0)
    }

    /// All monomials share one total degree. Such factors transform by a
    /// phase under the diagonal circle action, so |f|² is S¹-invariant.
    pub fn is_homogeneous(&self) -> bool {
        let mut deg = None;
        for m in &self.terms {
            match deg {
                None => deg = Some(m.p + m.q),
                Some(d) if d == m.p + m.q => {}
                _ => return false,
            }
        }
        true
    }

    /// |f|² is invariant under independent rotations of the two coordinates,
    /// which requires f to be a single monomial (cross terms of a sum spoil
    /// the invariance).
    pub fn is_toric_factor(&self) -> bool {
        self.terms.len() <= 1
    }

    /// Chart section on ℂP¹: P(ζ) = f(ζ, 1) for chart Zeta, f(1, ξ) for Xi.
    /// For homogeneous f of degree d this satisfies f = z₂^d P(ζ) (resp.
    /// z₁^d P̃(ξ)).
    pub fn section(&self, chart: Chart) -> Poly1 {
        let deg = self
            .terms
            .iter()
            .map(|m| match chart {
                Chart::Zeta => m.p,
                Chart::Xi => m.q,
            })
            .max()
            .unwrap_or(0) as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); deg + 1];
        for m in &self.terms {
            let k = match chart {
                Chart::Zeta => m.p,
                Chart::Xi => m.q,
            } as usize;
            coeffs[k] += m.coeff;
        }
        Poly1::new(coeffs)
    }

    /// Coefficients in λ of the restriction to the line through 0 in
    /// direction d: z = (λw, λ) in chart Zeta, z = (λ, λw) in chart Xi.
    /// Index k holds the coefficient of λ^k.
    pub fn restrict_line(&self, d: &Direction) -> Vec<Complex64> {
        let deg = self.total_degree() as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); deg + 1];
        for m in &self.terms {
            let k = (m.p + m.q) as usize;
            let angular = match d.chart {
                Chart::Zeta => d.w.powu(m.p),
                Chart::Xi => d.w.powu(m.q),
            };
            coeffs[k] += m.coeff * angular;
        }
        coeffs
    }

    fn fmt_term(m: &Monomial, f: &mut fmt::Formatter<'_>, first: bool) -> fmt::Result {
        let c = m.coeff;
        let sign = if c.re < 0.0 && c.im == 0.0 { "-" } else { "+" };
        if !first || sign == "-" {
            if first {
                write!(f, "-")?;
            } else {
                write!(f, "{sign}")?;
            }
        }
        let mag = if c.im == 0.0 { c.re.abs() } else { f64::NAN };
        let unit_coeff = c.im == 0.0 && (mag - 1.0).abs() < 1e-15 && (m.p > 0 || m.q > 0);
        if !unit_coeff {
            if c.im == 0.0 {
                write!(f, "{}", mag)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            if m.p > 0 || m.q > 0 {
                write!(f, "*")?;
            }
        }
        if m.p > 0 {
            write!(f, "z1")?;
            if m.p > 1 {
                write!(f, "^{}", m.p)?;
            }
        }
        if m.q > 0 {
            if m.p > 0 {
                write!(f, "*")?;
            }
            write!(f, "z2")?;
            if m.q > 1 {
                write!(f, "^{}", m.q)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, m) in self.terms.iter().enumerate() {
            Poly2::fmt_term(m, f, i == 0)?;
        }
        Ok(())
    }
}

/// Parse expressions like `z2^5-z1^5`, `z2-z1`, `3*z1^2*z2`, `z1`.
///
/// Grammar: sum of terms split on top-level + and -; each term is a product
/// of an optional integer (or decimal) coefficient and factors `z1[^k]`,
/// `z2[^k]` joined by `*`.
pub fn parse_poly(s: &str) -> Result<Poly2> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut terms = Vec::new();
    let bytes = s.as_bytes();
    let mut start = 0usize;
    let mut i = 0usize;
    let mut split_points = Vec::new();
    while i < bytes.len() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && i > 0 && bytes[i - 1] as char != '^' {
            split_points.push(i);
        }
        i += 1;
    }
    split_points.push(bytes.len());
    for &sp in &split_points {
        let chunk = &s[start..sp];
        if !chunk.is_empty() {
            terms.push(parse_term(chunk)?);
        }
        start = sp;
    }
    Ok(Poly2::new(terms))
}

fn parse_term(t: &str) -> Result<Monomial> {
    let mut coeff = Complex64::new(1.0, 0.0);
    let mut rest = t;
    if let Some(r) = rest.strip_prefix('-') {
        coeff = -coeff;
        rest = r;
    } else if let Some(r) = rest.strip_prefix('+') {
        rest = r;
    }
    let mut p = 0u32;
    let mut q = 0u32;
    for factor in rest.split('*') {
        if factor.is_empty() {
            return Err(Error::Parse(format!("empty factor in `{t}`")));
        }
        if let Some(var) = factor.strip_prefix("z1") {
            p += parse_power(var, t)?;
        } else if let Some(var) = factor.strip_prefix("z2") {
            q += parse_power(var, t)?;
        } else {
            let v: f64 = factor
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient `{factor}` in `{t}`")))?;
            coeff *= v;
        }
    }
    Ok(Monomial { coeff, p, q })
}

fn parse_power(var: &str, term: &str) -> Result<u32> {
    if var.is_empty() {
        Ok(1)
    } else if let Some(k) = var.strip_prefix('^') {
        k.parse()
            .map_err(|_| Error::Parse(format!("bad exponent in `{term}`")))
    } else {
        Err(Error::Parse(format!("bad factor in `{term}`")))
    }
}

/// A polynomial in one complex variable, coefficient of x^k at index k.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly1 {
    pub coeffs: Vec<Complex64>,
}

impl Poly1 {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map(|c| c.norm_sqr() == 0.0) == Some(true) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Poly1 { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly1 {
        if self.coeffs.len() <= 1 {
            return Poly1::new(vec![Complex64::new(0.0, 0.0)]);
        }
        Poly1::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, c)| c * (k as f64 + 1.0))
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// All complex roots by Durand–Kerner iteration. Adequate for the low
    /// degrees appearing in the catalog; multiple roots come out as clusters
    /// which the caller may merge.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        if n == 0 || self.is_zero() {
            return Vec::new();
        }
        let lead = self.coeffs[n];
        let monic: Vec<Complex64> = self.coeffs.iter().map(|c| c / lead).collect();
        let poly = Poly1 { coeffs: monic };
        // Standard initialization on a circle avoiding symmetry locking.
        let seed = Complex64::from_polar(1.0, 0.4);
        let radius = 1.0
            + poly
                .coeffs
                .iter()
                .take(n)
                .map(|c| c.norm())
                .fold(0.0f64, f64::max);
        let mut xs: Vec<Complex64> = (0..n)
            .map(|k| {
                seed * Complex64::from_polar(
                    radius.min(2.0),
                    2.0 * std::f64::consts::PI * k as f64 / n as f64,
                )
            })
            .collect();
        for _ in 0..200 {
            let mut shift = 0.0f64;
            let prev = xs.clone();
            for i in 0..n {
                let mut denom = Complex64::new(1.0, 0.0);
                for (j, xj) in prev.iter().enumerate() {
                    if j != i {
                        denom *= xs[i] - xj;
                    }
                }
                if denom.norm_sqr() == 0.0 {
                    continue;
                }
                let delta = poly.eval(xs[i]) / denom;
                xs[i] -= delta;
                shift = shift.max(delta.norm());
            }
            if shift < 1e-14 {
                break;
            }
        }
        xs
    }
}
