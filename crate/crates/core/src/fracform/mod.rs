//! Assembly of the nonlocal stiffness matrix, the mass matrices and the
//! load vectors for continuous piecewise-linear elements on the mesh.

mod singular;
mod stiffness;
mod tail;

use std::path::Path;

use crate::error::{param_err, Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::mesh::{Region, TriMesh};
use crate::quadrature::quadrature_rule;
use crate::special::c_ns;

pub use singular::{edge as edge_pair, identical as identical_pair, vertex as vertex_pair, SingularRules};
pub use stiffness::{assemble_interactions, assemble_stiffness, assemble_tail};
pub use tail::TailWeight;

/// Physical and penalty parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    s: f64,
    dim: usize,
    c_ns: f64,
    n_penalty: f64,
    xi: f64,
    kappa_value: f64,
}

impl FracParams {
    /// Two-dimensional parameters.
    pub fn new(s: f64, n_penalty: f64, xi: f64, kappa_value: f64) -> Result<Self> {
        Self::with_dim(2, s, n_penalty, xi, kappa_value)
    }

    pub fn with_dim(dim: usize, s: f64, n_penalty: f64, xi: f64, kappa_value: f64) -> Result<Self> {
        let c = c_ns(dim, s)?;
        if !(n_penalty >= 1.0 && n_penalty.is_finite()) {
            return param_err(format!("n must be a finite number >= 1, got {n_penalty}"));
        }
        if !(xi >= 0.0 && xi.is_finite()) {
            return param_err(format!("xi must be finite and >= 0, got {xi}"));
        }
        if !(kappa_value > 0.0 && kappa_value.is_finite()) {
            return param_err(format!("kappa must be finite and > 0, got {kappa_value}"));
        }
        Ok(Self { s, dim, c_ns: c, n_penalty, xi, kappa_value })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c_ns(&self) -> f64 {
        self.c_ns
    }

    pub fn n_penalty(&self) -> f64 {
        self.n_penalty
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn kappa_value(&self) -> f64 {
        self.kappa_value
    }

    /// Same parameters with a different penalty.
    pub fn with_penalty(&self, n_penalty: f64) -> Result<Self> {
        Self::with_dim(self.dim, self.s, n_penalty, self.xi, self.kappa_value)
    }

    pub fn with_xi(&self, xi: f64) -> Result<Self> {
        Self::with_dim(self.dim, self.s, self.n_penalty, xi, self.kappa_value)
    }
}

/// Quadrature settings for stiffness assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Degree of the triangle rule for separated element pairs (4 or 6).
    pub order: usize,
    /// Gauss points per direction for pairs sharing a vertex or more.
    pub singular_points: usize,
    /// Separated pairs whose centroid distance is below `near_factor` times
    /// the larger diameter use the rule refined once on both elements.
    pub near_factor: f64,
    /// Gauss points per boundary edge for the far-field weight.
    pub tail_points: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { order: 4, singular_points: 8, near_factor: 3.0, tail_points: 8 }
    }
}

impl QuadratureConfig {
    pub const MIN_ORDER: usize = 4;
    pub const MIN_SINGULAR_POINTS: usize = 3;

    pub fn validate(&self) -> Result<()> {
        if self.order < Self::MIN_ORDER {
            return param_err(format!(
                "quadrature order {} is below the minimum {}",
                self.order,
                Self::MIN_ORDER
            ));
        }
        quadrature_rule(self.order)?;
        if self.singular_points < Self::MIN_SINGULAR_POINTS || self.singular_points > 64 {
            return param_err(format!(
                "singular_points must lie in [{}, 64], got {}",
                Self::MIN_SINGULAR_POINTS,
                self.singular_points
            ));
        }
        if !(self.near_factor >= 0.0 && self.near_factor.is_finite()) {
            return param_err("near_factor must be finite and >= 0");
        }
        if self.tail_points == 0 || self.tail_points > 64 {
            return param_err("tail_points must lie in [1, 64]");
        }
        Ok(())
    }
}

/// Matrices of the discrete problem. `mass_kappa` carries the factor
/// `kappa_value`; `mass_control` is the unit-weight mass over the control
/// support.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    pub stiffness: DenseMatrix,
    pub mass_omega: CsrMatrix,
    pub mass_kappa: CsrMatrix,
    pub mass_control: CsrMatrix,
    pub ndof: usize,
}

impl AssembledForms {
    pub fn assemble(mesh: &TriMesh, params: &FracParams, quad: &QuadratureConfig) -> Result<Self> {
        let stiffness = assemble_stiffness(mesh, params, quad)?;
        Ok(Self {
            stiffness,
            mass_omega: assemble_mass_interior(mesh),
            mass_kappa: assemble_mass_kappa(mesh, params),
            mass_control: assemble_mass_control(mesh),
            ndof: mesh.num_vertices(),
        })
    }

    /// Writes `stiffness.csv`, `mass_omega.csv`, `mass_kappa.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        self.stiffness.write_csv(&dir.join("stiffness.csv"))?;
        self.mass_omega.write_csv(&dir.join("mass_omega.csv"))?;
        self.mass_kappa.write_csv(&dir.join("mass_kappa.csv"))?;
        Ok(())
    }
}

fn element_mass(mesh: &TriMesh, weight: impl Fn(usize) -> f64) -> CsrMatrix {
    let mut trip = Vec::with_capacity(9 * mesh.num_triangles());
    for (e, tri) in mesh.triangles().iter().enumerate() {
        let w = weight(e);
        if w == 0.0 {
            continue;
        }
        let m = w * mesh.area(e) / 12.0;
        for (a, &i) in tri.iter().enumerate() {
            for (b, &j) in tri.iter().enumerate() {
                trip.push((i, j, if a == b { 2.0 * m } else { m }));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_vertices(), trip)
}

/// `int_Omega phi_i phi_j`.
pub fn assemble_mass_interior(mesh: &TriMesh) -> CsrMatrix {
    element_mass(mesh, |e| if mesh.region(e) == Region::Omega { 1.0 } else { 0.0 })
}

/// `int kappa phi_i phi_j` over the kappa support.
pub fn assemble_mass_kappa(mesh: &TriMesh, params: &FracParams) -> CsrMatrix {
    let kappa = params.kappa_value();
    element_mass(mesh, |e| if mesh.kappa_mask()[e] { kappa } else { 0.0 })
}

/// Unit-weight mass over the control support.
pub fn assemble_mass_control(mesh: &TriMesh) -> CsrMatrix {
    element_mass(mesh, |e| if mesh.control_mask()[e] { 1.0 } else { 0.0 })
}

/// `b_i = n int kappa z_h phi_i`, with `z_h` the interpolant of the full
/// nodal vector `z` (zero away from its support).
pub fn assemble_load_exterior(forms: &AssembledForms, n_penalty: f64, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != forms.ndof {
        return Err(Error::Parameter(format!(
            "exterior data has {} entries, expected {}",
            z.len(),
            forms.ndof
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return param_err("exterior data contains non-finite values");
    }
    let mut b = forms.mass_kappa.matvec(z);
    b.iter_mut().for_each(|v| *v *= n_penalty);
    Ok(b)
}

/// `b_i = int_Omega f phi_i` with the triangle rule of degree `order`.
pub fn assemble_load_interior(
    mesh: &TriMesh,
    order: usize,
    f: impl Fn([f64; 2]) -> f64,
) -> Result<Vec<f64>> {
    let rule = quadrature_rule(order)?;
    let mut b = vec![0.0; mesh.num_vertices()];
    for (e, tri) in mesh.triangles().iter().enumerate() {
        if mesh.region(e) != Region::Omega {
            continue;
        }
        let p = mesh.corners(e);
        let jac = 2.0 * mesh.area(e);
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let lam = [1.0 - q[0] - q[1], q[0], q[1]];
            let x = [
                lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
                lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
            ];
            let fx = f(x) * w * jac;
            for a in 0..3 {
                b[tri[a]] += fx * lam[a];
            }
        }
    }
    Ok(b)
}
