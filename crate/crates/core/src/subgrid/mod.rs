//! Numerical construction of the subgrid slow manifold and extraction of the
//! macroscale model it implies.

pub mod extract;
pub mod lu;
pub mod manifold;
pub mod poly;
pub mod series;
pub mod system;

pub use extract::{CoefficientTable, SlotFit};
pub use manifold::{construct, construct_with, Residuals, SubgridManifold};
pub use poly::{MacroSymbol, Monomial, Poly};
pub use series::{Series2, Truncation};
pub use system::{CorrectionSystem, EdgeNode, NodeLayout, RowKind};
