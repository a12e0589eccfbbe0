//! Holistic discretisation of the two-dimensional real Ginzburg-Landau
//! equation `u_t = lap u + alpha (u - u^3)`.

pub mod catalogue;
pub mod consistency;
pub mod continuation;
pub mod error;
pub mod export;
pub mod grid;
pub mod models;
pub mod scalar;
pub mod subgrid;
pub mod tables;

pub use error::*;
pub use grid::{field_at, apply_stencil, stencil_of_cube, GridField, MacroGrid, Stencil, StencilId, Symmetry};
pub use scalar::{ArithmeticMode, Scalar};
pub use subgrid::{construct, MacroSymbol, Poly, Series2, SubgridManifold, Truncation};
pub use models::{integrate, subgrid_snapshot, ConstructedModel, ModelKind, ModelSpec, SubgridSnapshot, Trajectory};
