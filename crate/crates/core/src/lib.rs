//! Finite elements for the fractional heat equation with exterior
//! (volume-constraint) data.
//!
//! The crate covers the whole pipeline: conforming triangulations of a
//! computational disk containing the physical domain, assembly of the dense
//! nonlocal stiffness matrix with singular-pair quadrature, backward-Euler
//! time stepping of the Robin-penalized problem and its exact discrete
//! adjoint, exterior source identification by projected L-BFGS, and the
//! validation studies against a closed-form solution.

pub mod error;
pub mod evolve;
pub mod fracform;
pub mod identify;
pub mod linalg;
pub mod mesh;
pub mod optimize;
pub mod quadrature;
pub mod special;
pub mod study;

pub use error::{Error, Result};
pub use evolve::{ControlField, Stepper, TimeGrid, Trajectory};
pub use fracform::{AssembledForms, FracParams, QuadratureConfig};
pub use identify::{IdentifyProblem, PbfgsOptions};
pub use linalg::{Cholesky, CsrMatrix, DenseMatrix};
pub use mesh::{GeometrySpec, Region, Shape, TriMesh};
pub use study::{ExactSolution, RateResult};
