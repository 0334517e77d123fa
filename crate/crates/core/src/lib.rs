//! Dynamic-programming optimal control for right-invariant systems on SU(2).
//!
//! The pipeline: triangulate a ball in the Lie algebra ([`mesh`]), discretise
//! the HJB equation with barycentric transition probabilities and iterate the
//! Bellman operator to its fixed point ([`solver`]), then read optimal
//! trajectories off the converged field ([`trajectory`]). [`oracle`] holds an
//! independent brute-force minimum-time search used for validation.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod export;
pub mod lie;
pub mod mesh;
pub mod oracle;
pub mod solver;
pub mod trajectory;

pub use lie::{
    AlgebraVector, ControlSet, ControlValue, GroupElement, LieError, RunningCost, SystemSpec,
};
pub use mesh::{BarycentricLocation, MeshError, SimplicialMesh, VertexFlag};
pub use solver::{
    solve_min_time, value_iteration, BellmanOperator, SolverConfig, SolverError, ValueField,
};
