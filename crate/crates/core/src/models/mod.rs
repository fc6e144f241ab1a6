//! Concrete model instantiations.
//!
//! Three models implement [`AbstractModel`](crate::model::AbstractModel):
//!
//! - [`synthetic`]: a sparse antisymmetric-tensor bilinear term whose
//!   cancellation is exact by construction — the reference model for
//!   solver and ensemble diagnostics;
//! - [`ns2d`]: 2-d incompressible Navier–Stokes on the periodic square,
//!   pseudo-spectral with 2/3-rule dealiasing;
//! - [`pe3d`]: the primitive equations of the ocean on a horizontally
//!   periodic box with a rigid lid — an explicit-eigenbasis variant of the
//!   bounded-domain formulation.
//!
//! [`common`] holds the noise and forcing parameterizations shared by all
//! three, and [`fixtures`] the deliberately broken negative-control model.

pub mod common;
pub mod fixtures;
pub mod ns2d;
pub mod pe3d;
pub mod synthetic;

pub use common::{ForcingSpec, NoiseSpec};
pub use fixtures::BrokenModel;
pub use ns2d::{Ns2dModel, Ns2dSpec};
pub use pe3d::{Pe3dModel, Pe3dSpec};
pub use synthetic::{SyntheticModel, SyntheticSpec};
