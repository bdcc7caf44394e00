//! Fixtures shared by the criterion benches.

use exofrac_core::mesh::generate_mesh;
use exofrac_core::{AssembledForms, FracParams, GeometrySpec, QuadratureConfig, Result, TriMesh};

/// Disk-in-disk validation mesh at spacing `h`.
pub fn validation_mesh(h: f64) -> Result<TriMesh> {
    generate_mesh(&GeometrySpec::disk_in_disk(h))
}

/// Assembled forms for the validation mesh with default quadrature.
pub fn validation_forms(mesh: &TriMesh, s: f64, n: f64) -> Result<AssembledForms> {
    AssembledForms::assemble(mesh, &FracParams::new(s, n, 1e-8, 1.0)?, &QuadratureConfig::default())
}
