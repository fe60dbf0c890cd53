//! Universality analysis for 2-qudit gates.
//!
//! A 2-qudit gate together with all 1-qudit gates generates every n-qudit
//! gate exactly if and only if the gate is imprimitive (it entangles some
//! product state). This crate decides that property by independent routes
//! and produces constructive evidence:
//!
//! - [`primitivity`]: operator-Schmidt rank tests, brute-force coefficient
//!   equations, the diagonal-phase criterion, factorization of primitive
//!   gates into `e^{iθ}(S ⊗ T)` or `e^{iθ}(S ⊗ T)·P`, and entangling
//!   witnesses for imprimitive gates.
//! - [`lie`]: the local-gate Lie algebra, its conjugate, bracket closure,
//!   the four-block decomposition of u(d²), and the normalizer test.
//! - [`variant`]: the determinant-restricted setting where 1-qudit gates
//!   must be special, with root-of-unity analysis of `det V`.
//! - [`synth`]: numerical compilation of target gates into circuits of
//!   parameterized local layers interleaved with a fixed entangler.
//! - [`gates`]: constructors for the named gates and Haar sampling.

pub mod error;
pub mod gate;
pub mod gates;
pub mod lie;
pub mod linalg;
pub mod primitivity;
pub mod synth;
pub mod variant;

pub use error::{Error, Result};
pub use gate::{dist_up_to_phase, embed1, embed2, operator_schmidt, reshuffle, Gate, SchmidtData};
pub use linalg::{CMatrix, CVector};

/// Numeric thresholds used across the crate. Every verdict-producing
/// function reports the tolerances it used.
pub mod tol {
    /// Construction gate: reject matrices with ‖U†U − I‖_max above this.
    pub const UNITARITY: f64 = 1e-8;
    /// Internal algebra checks (anti-hermiticity, reconstruction).
    pub const ALGEBRA: f64 = 1e-10;
    /// Rank cut: singular values count when above `RANK_REL · σ_1`.
    pub const RANK_REL: f64 = 1e-9;
    /// Primitivity threshold on the best-route ratio σ₂/σ₁.
    pub const PRIMITIVITY: f64 = 1e-7;
    /// Verdicts within this factor of the primitivity threshold are
    /// flagged borderline rather than silently classified.
    pub const BORDERLINE_BAND: f64 = 100.0;
    /// Coefficient-equation residual threshold.
    pub const COEFF: f64 = 1e-9;
    /// Lie-closure admission threshold for unit-norm bracket residuals.
    pub const CLOSURE_ADMIT: f64 = 1e-8;
    /// Minimal entanglement entropy (nats) for a valid witness.
    pub const ENTROPY_FLOOR: f64 = 1e-6;
    /// Angular comparisons (diagonal criterion, root-of-unity scan).
    pub const ANGLE: f64 = 1e-9;
    /// Normalizer leak threshold.
    pub const NORMALIZER: f64 = 1e-7;
    /// Factorization reconstruction distance bound.
    pub const RECONSTRUCTION: f64 = 1e-9;
    /// Dense-storage cap on the total dimension d^n.
    pub const MAX_DIM: usize = 4096;
    /// Default bound for the root-of-unity order scan.
    pub const NMAX_DEFAULT: usize = 10_000;
}
