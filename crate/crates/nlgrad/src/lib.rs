//! Numerical toolkit for finite-horizon nonlocal gradients on the flat torus.
//!
//! The central object is the truncated Riesz gradient `D^s_δ`: a vector-valued
//! convolution operator with fractional order `s ∈ [0, 1]` and finite
//! interaction horizon `δ > 0`. For `s < 1` it averages difference quotients of
//! a field against a singular kernel supported in the ball of radius `δ`; at
//! `s = 1` it degenerates to the classical gradient. The crate provides
//!
//! * the kernel calculus behind `D^s_δ` ([`kernel`]): scaling constants, the
//!   radial kernel `Q^s_δ` with `D^s_δ φ = Q^s_δ ∗ ∇φ`, its `L¹` norm and
//!   radial Fourier transform, and the pointwise interaction kernels;
//! * periodic grids, FFT plumbing, `L^p` norms, domain masks with collar
//!   regions, and flat binary I/O ([`grid`]);
//! * spectral realizations of the gradient, divergence, the smoothing
//!   translation `𝒬^s_δ` and its inverse `𝒫^s_δ`, plus independent
//!   singular-quadrature oracles for cross-validation ([`nlops`]);
//! * scripted parameter sweeps that probe localization as `s → 1`, kernel
//!   mass limits, uniform Poincaré constants, and multiplier decay
//!   ([`experiments`]);
//! * variational machinery for energies `u ↦ ∫ f(x, u, D^s_δ u)` with
//!   complementary (collar) conditions: projected descent, convex envelopes,
//!   relaxation, periodic-cell homogenization, and order-continuity sweeps
//!   ([`variational`]).
//!
//! Everything is deterministic given a seed: sweeps re-run bit-identically.

pub mod experiments;
pub mod grid;
pub mod kernel;
pub mod nlops;
pub mod quad;
pub mod special;
pub mod variational;

/// Errors surfaced by constructors, I/O, and solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its documented domain (e.g. `s ∉ [0, 1]`).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Two grid-bound objects do not live on the same grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// A field violates a constraint it was required to satisfy.
    #[error("inadmissible field: {0}")]
    Inadmissible(String),
    /// An iterative solver stopped without reaching its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// Underlying file I/O failed.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// JSON (de)serialization failed.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
