//! Backward-Euler time stepping of the penalized problem
//!
//! ```text
//! M u^k + tau (A + n M_kappa) u^k = tau F^k + tau n M_kappa z^k + M u^(k-1)
//! ```
//!
//! and of its exact discrete adjoint. The system matrix is factored once
//! and reused for every step.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{param_err, Error, Result};
use crate::fracform::AssembledForms;
use crate::linalg::{Cholesky, DenseMatrix};
use crate::mesh::TriMesh;

/// Uniform grid on `[0, T]` with `K` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
    tau: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return param_err(format!("T must be finite and > 0, got {t_final}"));
        }
        if steps == 0 {
            return param_err("K must be >= 1");
        }
        Ok(Self { t_final, steps, tau: t_final / steps as f64 })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }

    /// Index of the time level closest to `t`, clamped to `[1, K]`.
    pub fn nearest_step(&self, t: f64) -> usize {
        ((t / self.tau).round() as usize).clamp(1, self.steps)
    }
}

/// Nodal vectors at the time levels `0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    frames: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(frames: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return param_err("a trajectory needs at least one frame");
        };
        let n = first.len();
        for (k, f) in frames.iter().enumerate() {
            if f.len() != n {
                return param_err(format!("frame {k} has {} entries, expected {n}", f.len()));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Solver(format!("frame {k} contains non-finite values")));
            }
        }
        Ok(Self { frames })
    }

    pub fn zeros(num_frames: usize, ndof: usize) -> Self {
        Self { frames: vec![vec![0.0; ndof]; num_frames] }
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn ndof(&self) -> usize {
        self.frames[0].len()
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        &self.frames[k]
    }

    pub fn frame_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.frames[k]
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    /// Writes frames `1, 1 + stride, ...` as `<prefix>_<k>.csv` in `dir`
    /// and returns the written frame indices.
    pub fn write_frames(&self, mesh: &TriMesh, dir: &Path, prefix: &str, stride: usize) -> Result<Vec<usize>> {
        if stride == 0 {
            return param_err("frame stride must be >= 1");
        }
        let mut written = Vec::new();
        for k in (1..self.frames.len()).step_by(stride) {
            write_field_csv(mesh, &self.frames[k], &dir.join(format!("{prefix}_{k:05}.csv")))?;
            written.push(k);
        }
        Ok(written)
    }
}

/// Shortest decimal that reads back to the same bits; zero is written as
/// `0`.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes `node,x,y,value` rows ordered by node index.
pub fn write_field_csv(mesh: &TriMesh, values: &[f64], path: &Path) -> Result<()> {
    if values.len() != mesh.num_vertices() {
        return param_err(format!(
            "field has {} values but the mesh has {} nodes",
            values.len(),
            mesh.num_vertices()
        ));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "node,x,y,value")?;
    for (i, (p, v)) in mesh.vertices().iter().zip(values).enumerate() {
        writeln!(w, "{i},{},{},{}", format_value(p[0]), format_value(p[1]), format_value(*v))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `node,x,y,value` rows for the listed nodes only.
pub fn write_restricted_csv(mesh: &TriMesh, nodes: &[usize], values: &[f64], path: &Path) -> Result<()> {
    if values.len() != nodes.len() {
        return param_err("restricted field and node list differ in length");
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "node,x,y,value")?;
    for (&i, v) in nodes.iter().zip(values) {
        let p = mesh.vertices()[i];
        writeln!(w, "{i},{},{},{}", format_value(p[0]), format_value(p[1]), format_value(*v))?;
    }
    w.flush()?;
    Ok(())
}

/// Time-dependent exterior source on a fixed set of support nodes; frame
/// `k - 1` holds the values at time level `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    support: Vec<usize>,
    frames: Vec<Vec<f64>>,
}

impl ControlField {
    pub fn new(support: Vec<usize>, frames: Vec<Vec<f64>>) -> Result<Self> {
        for (k, f) in frames.iter().enumerate() {
            if f.len() != support.len() {
                return param_err(format!(
                    "control frame {} has {} entries, expected {}",
                    k + 1,
                    f.len(),
                    support.len()
                ));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return param_err(format!("control frame {} contains non-finite values", k + 1));
            }
        }
        Ok(Self { support, frames })
    }

    pub fn constant(support: Vec<usize>, steps: usize, value: f64) -> Self {
        let m = support.len();
        Self { support, frames: vec![vec![value; m]; steps] }
    }

    pub fn from_flat(support: Vec<usize>, steps: usize, flat: &[f64]) -> Result<Self> {
        let m = support.len();
        if flat.len() != m * steps {
            return param_err(format!("flat control has {} entries, expected {}", flat.len(), m * steps));
        }
        let frames = if m == 0 { vec![Vec::new(); steps] } else { flat.chunks(m).map(<[f64]>::to_vec).collect() };
        Self::new(support, frames)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.frames.concat()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn steps(&self) -> usize {
        self.frames.len()
    }

    /// Values at time level `k` (1-based).
    pub fn at_step(&self, k: usize) -> &[f64] {
        &self.frames[k - 1]
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    /// Values at time level `k` extended by zero to all `ndof` nodes.
    pub fn extended(&self, k: usize, ndof: usize) -> Vec<f64> {
        let mut full = vec![0.0; ndof];
        for (&i, v) in self.support.iter().zip(&self.frames[k - 1]) {
            full[i] = *v;
        }
        full
    }

    /// Entrywise `max(z, 0)`.
    pub fn project(&self) -> Self {
        let frames = self.frames.iter().map(|f| f.iter().map(|v| v.max(0.0)).collect()).collect();
        Self { support: self.support.clone(), frames }
    }

    pub fn min_value(&self) -> f64 {
        self.frames.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `S = M_Omega + tau (A + n M_kappa)`.
pub fn system_matrix(forms: &AssembledForms, n_penalty: f64, grid: &TimeGrid) -> DenseMatrix {
    let tau = grid.tau();
    let mut s = forms.stiffness.clone();
    s.add_scaled_sparse(n_penalty, &forms.mass_kappa);
    s.scale(tau);
    s.add_scaled_sparse(1.0, &forms.mass_omega);
    s
}

fn node_class(forms: &AssembledForms, i: usize) -> &'static str {
    if forms.mass_omega.row_iter(i).next().is_some() {
        "node touching Omega"
    } else if forms.mass_kappa.row_iter(i).next().is_some() {
        "exterior node in the kappa support"
    } else {
        "exterior node outside the kappa support"
    }
}

/// Factored backward-Euler operator for one set of forms, penalty and grid.
pub struct Stepper<'a> {
    forms: &'a AssembledForms,
    grid: TimeGrid,
    n_penalty: f64,
    chol: Cholesky,
}

impl<'a> Stepper<'a> {
    pub fn new(forms: &'a AssembledForms, n_penalty: f64, grid: TimeGrid) -> Result<Self> {
        if !(n_penalty >= 0.0 && n_penalty.is_finite()) {
            return param_err(format!("n must be finite and >= 0, got {n_penalty}"));
        }
        let s = system_matrix(forms, n_penalty, &grid);
        let chol = Cholesky::factor(&s).map_err(|e| match e {
            Error::Solver(msg) => {
                let row = msg
                    .split("row ")
                    .nth(1)
                    .and_then(|r| r.split(|c: char| !c.is_ascii_digit()).next())
                    .and_then(|r| r.parse::<usize>().ok());
                match row {
                    Some(i) => Error::Solver(format!(
                        "system matrix is singular at node {i} ({}): {msg}",
                        node_class(forms, i)
                    )),
                    None => Error::Solver(msg),
                }
            }
            other => other,
        })?;
        Ok(Self { forms, grid, n_penalty, chol })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn forms(&self) -> &AssembledForms {
        self.forms
    }

    pub fn n_penalty(&self) -> f64 {
        self.n_penalty
    }

    /// Number of triangular solves performed with the stored factor.
    pub fn solve_count(&self) -> usize {
        self.chol.solve_count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.chol.solve(b)
    }

    /// Forward solve. `loads[k-1]` is the assembled interior source
    /// `<f^k, phi_i>` and `exterior(k)` the full nodal exterior data at
    /// level `k`; either may be absent.
    pub fn forward_with(
        &self,
        loads: Option<&[Vec<f64>]>,
        exterior: Option<&dyn Fn(usize) -> Vec<f64>>,
        u0: &[f64],
    ) -> Result<Trajectory> {
        let nd = self.forms.ndof;
        let kk = self.grid.steps();
        if u0.len() != nd {
            return param_err(format!("initial datum has {} entries, expected {nd}", u0.len()));
        }
        if let Some(l) = loads {
            if l.len() != kk || l.iter().any(|f| f.len() != nd) {
                return param_err("interior source must have K frames of ndof entries");
            }
        }
        let tau = self.grid.tau();
        let mut frames = Vec::with_capacity(kk + 1);
        frames.push(u0.to_vec());
        let mut rhs = vec![0.0; nd];
        for k in 1..=kk {
            self.forms.mass_omega.matvec_into(&frames[k - 1], &mut rhs);
            if let Some(l) = loads {
                for (r, f) in rhs.iter_mut().zip(&l[k - 1]) {
                    *r += tau * f;
                }
            }
            if let Some(ext) = exterior {
                let z = ext(k);
                if z.len() != nd {
                    return param_err("exterior data frame has the wrong length");
                }
                let mz = self.forms.mass_kappa.matvec(&z);
                let c = tau * self.n_penalty;
                for (r, v) in rhs.iter_mut().zip(&mz) {
                    *r += c * v;
                }
            }
            self.chol.solve_in_place(&mut rhs);
            frames.push(rhs.clone());
        }
        Trajectory::new(frames)
    }

    /// Forward solve with a control on its support nodes.
    pub fn solve_forward(&self, z: Option<&ControlField>, loads: Option<&[Vec<f64>]>, u0: &[f64]) -> Result<Trajectory> {
        match z {
            Some(z) => {
                if z.steps() != self.grid.steps() {
                    return param_err(format!("control has {} frames, expected {}", z.steps(), self.grid.steps()));
                }
                if let Some(&bad) = z.support().iter().find(|&&i| i >= self.forms.ndof) {
                    return param_err(format!("control support node {bad} is out of range"));
                }
                let nd = self.forms.ndof;
                let ext = move |k: usize| z.extended(k, nd);
                self.forward_with(loads, Some(&ext), u0)
            }
            None => self.forward_with(loads, None, u0),
        }
    }

    /// Exact discrete adjoint: `p^K = 0` and
    /// `S p^(k-1) = tau M_Omega r^k + M_Omega p^k` for `k = K..1`, where
    /// `residual[k-1] = r^k`.
    pub fn solve_adjoint(&self, residual: &[Vec<f64>]) -> Result<Trajectory> {
        let nd = self.forms.ndof;
        let kk = self.grid.steps();
        if residual.len() != kk || residual.iter().any(|r| r.len() != nd) {
            return param_err("adjoint residual must have K frames of ndof entries");
        }
        let tau = self.grid.tau();
        let mut frames = vec![vec![0.0; nd]; kk + 1];
        let mut rhs = vec![0.0; nd];
        let mut tmp = vec![0.0; nd];
        for k in (1..=kk).rev() {
            for (t, (r, p)) in tmp.iter_mut().zip(residual[k - 1].iter().zip(&frames[k])) {
                *t = tau * r + p;
            }
            self.forms.mass_omega.matvec_into(&tmp, &mut rhs);
            self.chol.solve_in_place(&mut rhs);
            frames[k - 1].copy_from_slice(&rhs);
        }
        Trajectory::new(frames)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = TimeGrid::new(1.0, 7).unwrap();
        assert!((g.tau() * 7.0 - 1.0).abs() < 1e-14);
        assert_eq!(g.nearest_step(0.43), 3);
        assert_eq!(g.nearest_step(0.0), 1);
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(-1.0, 3).is_err());
    }

    #[test]
    fn control_flat_round_trip_and_projection() {
        let z = ControlField::new(vec![3, 5], vec![vec![1.0, -2.0], vec![-0.5, 4.0]]).unwrap();
        let back = ControlField::from_flat(vec![3, 5], 2, &z.to_flat()).unwrap();
        assert_eq!(z, back);
        let p = z.project();
        assert_eq!(p.frames(), &[vec![1.0, 0.0], vec![0.0, 4.0]]);
        assert_eq!(p.project(), p);
        assert_eq!(z.extended(2, 6), vec![0.0, 0.0, 0.0, -0.5, 0.0, 4.0]);
        assert!(ControlField::new(vec![1], vec![vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(-0.0), "0");
        let v = 0.1 + 0.2;
        assert_eq!(format_value(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}
