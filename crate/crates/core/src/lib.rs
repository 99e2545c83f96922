//! Graph limits toolkit: graphons, subgraph densities, density expressions
//! with rooted and decorated graphs, finite forcing checks, W-random graphs
//! and vertex-space diagnostics.

pub mod density;
pub mod error;
pub mod expressions;
pub mod forcing;
pub mod graphon;
pub mod graphs;
pub mod sampling;
pub mod vertexspace;

pub use density::{Budget, Estimate, Method};
pub use error::{Error, Result};
pub use expressions::{Constraint, DensityExpression, Verdict};
pub use graphon::Graphon;
pub use graphs::{DecoratedGraph, Graph, PartitionSpec, RootedGraph};
