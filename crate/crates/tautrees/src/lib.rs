//! Exact calculator for compact-type tautological classes on moduli spaces of
//! stable curves.
//!
//! The crate builds stable-rooted-tree sums of Omega-classes (Chiodo classes),
//! Hodge classes, and double ramification cycles, and verifies vanishing
//! statements, pushforward identities, and localization relations by exact
//! rational arithmetic. The main pieces:
//!
//! - [`exactmath`]: rationals, Bernoulli polynomials, falling factorials,
//!   sparse multivariate polynomials, homogeneous interpolation.
//! - [`treecomb`]: stable rooted trees with frozen legs, degree labels,
//!   admissible level functions and their signed counts, flow assignments.
//! - [`strata`]: the compact-type strata algebra — decorated boundary strata
//!   with psi/kappa decorations, boundary pushforward, restricted products,
//!   forgetful pushforward and pullback.
//! - [`omega`]: Chiodo Omega-classes on compact type via the weighted graph
//!   sum, exact tree-supported Hodge class representatives, and the vertex
//!   decorations used in tree sums.
//! - [`drcycles`]: compact-type double ramification cycles paired with the top
//!   Hodge class, and the DR vertex decorations.
//! - [`assemble`]: the assembled families (Omega/Psi tree sums, level
//!   variants, A-classes, B-coefficients) and the localization residuals.
//! - [`integrate`]: the exact intersection-number oracle (Witten–Kontsevich
//!   recursion, kappa reduction, pairings, vanishing checks).
//! - [`cli`] and [`report`]: the command-line front end and deterministic
//!   JSON verification reports.

pub mod assemble;
pub mod cli;
pub mod drcycles;
pub mod exactmath;
pub mod integrate;
pub mod omega;
pub mod report;
pub mod strata;
pub mod treecomb;

mod guide;

use thiserror::Error as ThisError;

/// Crate-wide error type.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("unstable signature: 2g - 2 + n + m must be positive (g={g}, n={n}, m={m})")]
    UnstableSignature { g: usize, n: usize, m: usize },
    #[error("sample values are not consistent with a homogeneous polynomial of the stated degree")]
    InconsistentSamples,
    #[error("interpolation system is underdetermined: need {needed} independent samples, got {got}")]
    UnderdeterminedSystem { needed: usize, got: usize },
    #[error("vertex class lives on the wrong moduli space: expected {expected} points, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("operand not supported: {0}")]
    UnsupportedOperand(String),
    #[error("modular constraint violated: sum of fields must be (2g-2+n)s mod r")]
    ModularConstraintViolated,
    #[error("vertex flow a(v) must be positive, got {0}")]
    NonpositiveFlow(i64),
    #[error("DR weights must sum to zero, got {0}")]
    NonZeroSum(i64),
    #[error("vertex flow is not balanced")]
    UnbalancedVertex,
    #[error("genus {0} is beyond the supported desk-scale cap")]
    UnsupportedGenus(usize),
    #[error("inexact polynomial division")]
    InexactDivision,
    #[error("degree/dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub use exactmath::{MultiPoly, Rat};
pub use strata::{DecoratedStratum, StrataClass};
pub use treecomb::{DegreeLabeledTree, StableRootedTree};
