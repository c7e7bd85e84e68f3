//! Numerical laboratory for S¹-invariant plurisubharmonic functions on the
//! unit ball of ℂ².
//!
//! The crate evaluates the residual Monge–Ampère mass, Lelong numbers and the
//! energy functionals of a catalog of exactly solvable functions, and
//! cross-validates the boundary decomposition of the Monge–Ampère mass
//! against independent volume and toric oracles.
//!
//! Module map:
//! - [`hopf`]: coordinates on ℂ² ∖ {0} (Euclidean, real Hopf, complex Hopf)
//!   and the Fubini–Study area element on ℂP¹.
//! - [`catalog`]: the library of test functions and their exact derivatives.
//! - [`quadrature`]: direction grids on ℂP¹, the sphere Laplacian and
//!   finite differences in t = log r.
//! - [`fiber`]: the boundary-sphere calculus producing I, J, 𝓔, K at fixed t.
//! - [`lelong`]: Lelong-number estimators (ν, M_A, λ).
//! - [`oracle`]: independent Monge–Ampère mass estimators and the
//!   bound-verification report.
//! - [`regularize`]: mollification and the Friedrichs/slope-bound checks.
//! - [`ray`]: traces of the functionals along t and the theorem-level checks.
//! - [`cli`]: command implementations behind the `pshlab` binary.

pub mod catalog;
pub mod cli;
pub mod fiber;
pub mod hopf;
pub mod lelong;
pub mod math;
pub mod oracle;
pub mod quadrature;
pub mod ray;
pub mod regularize;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point is at the origin; Hopf coordinates need r > 0")]
    ZeroPoint,
    #[error("point with |z| = {r} outside the admissible domain {domain}")]
    Domain { r: f64, domain: &'static str },
    #[error("operation requires a C^2 function off the origin; `{name}` is not smooth (kind {kind})")]
    NotSmooth { name: String, kind: &'static str },
    #[error("operation requires the toric flag; `{name}` is not toric")]
    NotToric { name: String },
    #[error("operation requires an S^1-invariant function; `{name}` failed the invariance check (violation {violation:.3e})")]
    NotInvariant { name: String, violation: f64 },
    #[error("grid too small: need at least {min} nodes per direction, got {got}")]
    GridSize { min: usize, got: usize },
    #[error("t-samples must be strictly increasing")]
    Spacing,
    #[error("function appears unbounded above on B_1 (sampled sup {sup})")]
    UnboundedAbove { sup: f64 },
    #[error("holomorphic pair has a common zero in B_1\\{{0}} near |z| = {radius}")]
    CommonZero { radius: f64 },
    #[error("mollification radius {epsilon} leaves the domain at |z| = {r}")]
    MollifierSupport { epsilon: f64, r: f64 },
    #[error("epsilon {epsilon} out of range; the lemma requires epsilon < {limit}")]
    EpsilonRange { epsilon: f64, limit: f64 },
    #[error("shell integral does not settle as r0 -> 0 (last increment {increment:.3e})")]
    ShellDiverging { increment: f64 },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("catalog parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
