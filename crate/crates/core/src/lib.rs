//! Spectral Galerkin simulation and statistical verification of abstract
//! stochastic evolution equations
//!
//! ```text
//! dU + (AU + B(U,U) + F(U)) dt = σ(U) dW,    U(0) = U₀,
//! ```
//!
//! posed on a Gelfand triple `V ⊂ H ⊂ V'` diagonalized by the eigenbasis of
//! the principal operator `A`. The crate provides:
//!
//! - [`spectral`]: coefficient vectors, fractional norms `|·|_α`, projections
//!   `P_n`/`Q_n`, and the exact heat flow `e^{-tA}`;
//! - [`model`]: the structural contracts on `(B, F, σ)` as executable
//!   interfaces, the cutoff function `θ`, the admissibility rule
//!   `κ ≤ 1/(64 c₀)`, and statistical verifiers for the contracts;
//! - [`models`]: a synthetic exactly-verifiable model, 2-d periodic
//!   Navier–Stokes, and the primitive equations of the ocean on a periodic
//!   box variant;
//! - [`noise`]: truncated cylindrical Wiener paths, Hilbert–Schmidt columns,
//!   Itô summands, and the auxiliary-space norm used by convergence tests;
//! - [`solver`]: exponential / semi-implicit Euler integration of the cutoff
//!   Galerkin system, paired with the exactly-solved auxiliary linear flow,
//!   stopping-time and blow-up-announcement detection;
//! - [`diagnostics`]: fractional Sobolev norms in time, uniform-moment
//!   ensembles, pairwise convergence-in-probability diagnostics, same-noise
//!   uniqueness checks, and stochastic-integral convergence ladders;
//! - [`io`]: the flat binary state layout, CSV trajectory tables, and
//!   reproducibility manifests.
//!
//! All numerics are generic over the floating-point scalar through
//! [`scalar::Scalar`]; the aliases below pin the common concrete choices.

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod model;
pub mod models;
pub mod noise;
pub mod prng;
pub mod scalar;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` eigenbasis.
pub type Basis64 = spectral::Eigenbasis<f64>;
/// `f64` state vector.
pub type Vector64 = spectral::SpectralVector<f64>;
/// `f64` noise path.
pub type NoisePath64 = noise::NoisePath<f64>;
/// `f64` Hilbert–Schmidt columns.
pub type HsColumns64 = noise::HsColumns<f64>;

/// `f32` eigenbasis.
pub type Basis32 = spectral::Eigenbasis<f32>;
/// `f32` state vector.
pub type Vector32 = spectral::SpectralVector<f32>;
