//! Spectral-geometry laboratory for products of Laplace-Beltrami eigenfunctions.
//!
//! The crate builds orthonormal eigenbases on three model analytic manifolds
//! (flat tori, the round sphere and a torus of revolution), expands products
//! of eigenfunctions in those bases, and measures how the resulting Fourier
//! coefficients concentrate: exponential envelopes, truncation sets holding
//! 99% of the mass, lower bounds on product norms, harmonic extensions with
//! the Green boundary identity, and doubling-index/Remez sublevel experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod coefficients;
pub mod error;
pub mod extension;
pub mod manifolds;
pub mod numerics;
pub mod remez;

pub use error::{Error, Result};
pub use manifolds::{build_basis, ManifoldModel, Mode, ModeRep, Resolution, SpectralBasis};
