//! Numerical verification engine for almost-Schur type inequalities.
//!
//! The library discretizes closed Riemannian manifolds two ways (triangle
//! meshes for surfaces, periodic structured grids for flat-torus topologies),
//! computes the curvature quantities appearing in generalized almost-Schur
//! inequalities, solves the associated elliptic problems, and assembles
//! machine-checkable reports of each inequality instance.

pub mod elliptic;
pub mod grid;
pub mod mesh;
pub mod sparse;
pub mod tensor;
pub mod verify;

pub use tensor::{MetricAtPoint, SymEndomorphism, SymTensorSample, TensorError};
