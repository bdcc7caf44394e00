//! Validation against the closed-form solution
//! `u(x, t) = 2^(-2s) e^t / Gamma(1+s)^2 (1 - |x|^2)_+^s`, for which
//! `(-Delta)^s u = e^t` in the unit ball, and convergence-rate fits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{param_err, Result};
use crate::evolve::{format_value, Stepper, TimeGrid, Trajectory};
use crate::fracform::{assemble_load_interior, AssembledForms, FracParams, QuadratureConfig};
use crate::linalg::CsrMatrix;
use crate::mesh::TriMesh;
use crate::special::gamma_fn;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    s: f64,
    scale: f64,
}

impl ExactSolution {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return param_err(format!("s must lie in (0,1), got {s}"));
        }
        let g = gamma_fn(1.0 + s)?;
        Ok(Self { s, scale: 2f64.powf(-2.0 * s) / (g * g) })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Spatial profile `2^(-2s)/Gamma(1+s)^2 (1 - |x|^2)_+^s`.
    pub fn profile(&self, x: [f64; 2]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 >= 1.0 {
            0.0
        } else {
            self.scale * (1.0 - r2).powf(self.s)
        }
    }

    pub fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        t.exp() * self.profile(x)
    }

    /// Source `u + e^t`, valid inside the unit ball.
    pub fn source(&self, x: [f64; 2], t: f64) -> f64 {
        t.exp() * (self.profile(x) + 1.0)
    }

    /// Nodal interpolant at time `t`.
    pub fn interpolate(&self, mesh: &TriMesh, t: f64) -> Vec<f64> {
        mesh.vertices().iter().map(|&p| self.eval(p, t)).collect()
    }
}

/// `exact_eval(x, t, s)`.
pub fn exact_eval(x: [f64; 2], t: f64, s: f64) -> Result<f64> {
    Ok(ExactSolution::new(s)?.eval(x, t))
}

/// `sqrt(sum_{k=1..K} tau |u^k - I_h u(k tau)|^2_{M_Omega})`.
pub fn l2qt_error(traj: &Trajectory, exact: &ExactSolution, mesh: &TriMesh, grid: &TimeGrid, mass_omega: &CsrMatrix) -> Result<f64> {
    if traj.num_frames() != grid.steps() + 1 || traj.ndof() != mesh.num_vertices() {
        return param_err("trajectory does not match the mesh and time grid");
    }
    let mut acc = 0.0;
    for k in 1..=grid.steps() {
        let t = grid.time(k);
        let d: Vec<f64> = traj.frame(k).iter().zip(mesh.vertices()).map(|(u, &p)| u - exact.eval(p, t)).collect();
        acc += mass_omega.quad_form(&d);
    }
    Ok((grid.tau() * acc).max(0.0).sqrt())
}

/// Errors against an abscissa with a least-squares log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub abscissae: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    /// Slope between consecutive points; `local_slopes[0]` is undefined and
    /// stored as NaN.
    pub local_slopes: Vec<f64>,
}

impl RateResult {
    /// Sorts the points by abscissa and fits `log e = a + slope log x`.
    pub fn fit(abscissae: &[f64], errors: &[f64]) -> Result<Self> {
        if abscissae.len() != errors.len() || abscissae.len() < 2 {
            return param_err("a rate fit needs at least two (abscissa, error) pairs");
        }
        let mut pts: Vec<(f64, f64)> = abscissae.iter().copied().zip(errors.iter().copied()).collect();
        if pts.iter().any(|(x, e)| !(*x > 0.0 && x.is_finite() && *e > 0.0 && e.is_finite())) {
            return param_err("rate fit needs positive finite abscissae and errors");
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 >= w[1].0) {
            return param_err("rate fit abscissae must be distinct");
        }
        let m = pts.len() as f64;
        let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let le: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let mx = lx.iter().sum::<f64>() / m;
        let me = le.iter().sum::<f64>() / m;
        let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxe: f64 = lx.iter().zip(&le).map(|(x, e)| (x - mx) * (e - me)).sum();
        let mut local = vec![f64::NAN];
        for i in 1..pts.len() {
            local.push((le[i] - le[i - 1]) / (lx[i] - lx[i - 1]));
        }
        Ok(Self {
            abscissae: pts.iter().map(|p| p.0).collect(),
            errors: pts.iter().map(|p| p.1).collect(),
            slope: sxe / sxx,
            local_slopes: local,
        })
    }

    /// Writes `abscissa,error,local_slope` rows and a final
    /// `fitted_slope=<value>` line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "abscissa,error,local_slope")?;
        for i in 0..self.abscissae.len() {
            let ls = if self.local_slopes[i].is_nan() { String::new() } else { format_value(self.local_slopes[i]) };
            writeln!(w, "{},{},{}", format_value(self.abscissae[i]), format_value(self.errors[i]), ls)?;
        }
        writeln!(w, "fitted_slope={}", format_value(self.slope))?;
        w.flush()?;
        Ok(())
    }
}

/// Discrete problem for the closed-form solution on one mesh: exterior data
/// equal to the exact solution on the kappa support, manufactured source
/// and interpolated initial datum.
pub struct ManufacturedProblem<'a> {
    pub mesh: &'a TriMesh,
    pub forms: &'a AssembledForms,
    pub exact: ExactSolution,
    pub grid: TimeGrid,
    profile_load: Vec<f64>,
    profile: Vec<f64>,
}

impl<'a> ManufacturedProblem<'a> {
    pub fn new(mesh: &'a TriMesh, forms: &'a AssembledForms, s: f64, grid: TimeGrid) -> Result<Self> {
        let exact = ExactSolution::new(s)?;
        // the source separates as e^t (profile + 1)
        let profile_load = assemble_load_interior(mesh, 6, |x| exact.profile(x) + 1.0)?;
        let profile = mesh.vertices().iter().map(|&p| exact.profile(p)).collect();
        Ok(Self { mesh, forms, exact, grid, profile_load, profile })
    }

    pub fn solve(&self, n_penalty: f64) -> Result<Trajectory> {
        let stepper = Stepper::new(self.forms, n_penalty, self.grid)?;
        let loads: Vec<Vec<f64>> = (1..=self.grid.steps())
            .map(|k| {
                let e = self.grid.time(k).exp();
                self.profile_load.iter().map(|v| e * v).collect()
            })
            .collect();
        let ext = |k: usize| {
            let e = self.grid.time(k).exp();
            self.profile.iter().map(|v| e * v).collect::<Vec<f64>>()
        };
        let u0 = self.exact.interpolate(self.mesh, 0.0);
        stepper.forward_with(Some(&loads), Some(&ext), &u0)
    }

    pub fn error(&self, n_penalty: f64) -> Result<f64> {
        let u = self.solve(n_penalty)?;
        l2qt_error(&u, &self.exact, self.mesh, &self.grid, &self.forms.mass_omega)
    }
}

/// Errors for a sequence of penalties on one mesh.
pub fn robin_dirichlet_rate(mesh: &TriMesh, forms: &AssembledForms, grid: TimeGrid, s: f64, n_list: &[f64]) -> Result<RateResult> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return param_err("n_list must hold at least two strictly increasing values");
    }
    let problem = ManufacturedProblem::new(mesh, forms, s, grid)?;
    let errors = n_list.iter().map(|&n| problem.error(n)).collect::<Result<Vec<_>>>()?;
    RateResult::fit(n_list, &errors)
}

/// Errors against the number of degrees of freedom on a sequence of
/// meshes, each assembled from scratch.
pub fn spatial_rate(
    meshes: &[TriMesh],
    grid: TimeGrid,
    params: &FracParams,
    quad: &QuadratureConfig,
) -> Result<RateResult> {
    if meshes.len() < 2 {
        return param_err("spatial rate needs at least two meshes");
    }
    let mut dofs = Vec::new();
    let mut errors = Vec::new();
    for mesh in meshes {
        let forms = AssembledForms::assemble(mesh, params, quad)?;
        let problem = ManufacturedProblem::new(mesh, &forms, params.s(), grid)?;
        dofs.push(mesh.num_vertices() as f64);
        errors.push(problem.error(params.n_penalty())?);
    }
    RateResult::fit(&dofs, &errors)
}
