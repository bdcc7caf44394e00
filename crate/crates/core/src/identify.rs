//! Exterior source identification: tracking objective, exact discrete
//! gradient through the adjoint, synthetic data and the projected
//! quasi-Newton driver.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{param_err, Result};
use crate::evolve::{format_value, ControlField, Stepper, Trajectory};
use crate::linalg::{dot, CsrMatrix};
use crate::mesh::TriMesh;
use crate::optimize::{pbfgs_minimize, HistoryEntry, PbfgsResult};

pub use crate::optimize::{PbfgsOptions, PbfgsStatus};

/// Measure of the control regularization term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlNorm {
    /// Plain Lebesgue measure on the control support.
    #[default]
    Lebesgue,
    /// `kappa dx` on the control support.
    Kappa,
}

/// Tracking problem `j(z) = 1/2 sum_k tau |u^k - u_d^k|^2_M + xi/2 sum_k tau z^k.Mhat z^k`.
pub struct IdentifyProblem<'a> {
    stepper: &'a Stepper<'a>,
    support: Vec<usize>,
    data: Trajectory,
    xi: f64,
    u0: Vec<f64>,
    loads: Option<Vec<Vec<f64>>>,
    /// regularization mass on the support nodes (local indices)
    mhat: CsrMatrix,
    /// rows of `M_kappa` on the support nodes, full column range
    mk_rows: Vec<Vec<(usize, f64)>>,
}

impl<'a> IdentifyProblem<'a> {
    /// `data` holds `u_d` at levels `0..=K`; level 0 is not used.
    pub fn new(
        mesh: &TriMesh,
        stepper: &'a Stepper<'a>,
        data: Trajectory,
        xi: f64,
        kappa_value: f64,
        norm: ControlNorm,
    ) -> Result<Self> {
        let forms = stepper.forms();
        let support = mesh.control_nodes();
        if support.is_empty() {
            return param_err("the mesh has no control support");
        }
        if data.num_frames() != stepper.grid().steps() + 1 || data.ndof() != forms.ndof {
            return param_err(format!(
                "observations must have K+1 = {} frames of {} nodes",
                stepper.grid().steps() + 1,
                forms.ndof
            ));
        }
        if !(xi >= 0.0 && xi.is_finite()) {
            return param_err("xi must be finite and >= 0");
        }
        let mut local = vec![usize::MAX; forms.ndof];
        for (l, &i) in support.iter().enumerate() {
            local[i] = l;
        }
        let mut trip = Vec::new();
        for (e, tri) in mesh.triangles().iter().enumerate() {
            if !mesh.control_mask()[e] {
                continue;
            }
            let w = match norm {
                ControlNorm::Lebesgue => 1.0,
                ControlNorm::Kappa if mesh.kappa_mask()[e] => kappa_value,
                ControlNorm::Kappa => 0.0,
            };
            let m = w * mesh.area(e) / 12.0;
            for (a, &i) in tri.iter().enumerate() {
                for (b, &j) in tri.iter().enumerate() {
                    trip.push((local[i], local[j], if a == b { 2.0 * m } else { m }));
                }
            }
        }
        let mhat = CsrMatrix::from_triplets(support.len(), trip);
        let mk_rows = support.iter().map(|&i| forms.mass_kappa.row_iter(i).collect()).collect();
        Ok(Self {
            stepper,
            support,
            data,
            xi,
            u0: vec![0.0; forms.ndof],
            loads: None,
            mhat,
            mk_rows,
        })
    }

    /// Nonzero initial datum and interior source (`loads[k-1]` assembled at
    /// level `k`).
    pub fn with_state_data(mut self, u0: Vec<f64>, loads: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if u0.len() != self.stepper.forms().ndof {
            return param_err("initial datum has the wrong length");
        }
        self.u0 = u0;
        self.loads = loads;
        Ok(self)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn steps(&self) -> usize {
        self.stepper.grid().steps()
    }

    pub fn data(&self) -> &Trajectory {
        &self.data
    }

    /// Number of optimization variables.
    pub fn dim(&self) -> usize {
        self.support.len() * self.steps()
    }

    fn check(&self, z: &ControlField) -> Result<()> {
        if z.support() != self.support.as_slice() || z.steps() != self.steps() {
            return param_err(format!(
                "control must live on the {} support nodes with {} frames",
                self.support.len(),
                self.steps()
            ));
        }
        Ok(())
    }

    pub fn state(&self, z: &ControlField) -> Result<Trajectory> {
        self.check(z)?;
        self.stepper.solve_forward(Some(z), self.loads.as_deref(), &self.u0)
    }

    /// Objective value and the forward state.
    pub fn objective(&self, z: &ControlField) -> Result<(f64, Trajectory)> {
        let u = self.state(z)?;
        let value = self.value_from_state(z, &u);
        Ok((value, u))
    }

    fn value_from_state(&self, z: &ControlField, u: &Trajectory) -> f64 {
        let tau = self.stepper.grid().tau();
        let m = &self.stepper.forms().mass_omega;
        let mut track = 0.0;
        let mut reg = 0.0;
        for k in 1..=self.steps() {
            let r: Vec<f64> = u.frame(k).iter().zip(self.data.frame(k)).map(|(a, b)| a - b).collect();
            track += m.quad_form(&r);
            reg += self.mhat.quad_form(z.at_step(k));
        }
        0.5 * tau * track + 0.5 * self.xi * tau * reg
    }

    /// Objective value and its gradient with respect to the nodal control
    /// values.
    pub fn value_and_gradient(&self, z: &ControlField) -> Result<(f64, ControlField)> {
        let u = self.state(z)?;
        let value = self.value_from_state(z, &u);
        let residual: Vec<Vec<f64>> = (1..=self.steps())
            .map(|k| u.frame(k).iter().zip(self.data.frame(k)).map(|(a, b)| a - b).collect())
            .collect();
        let p = self.stepper.solve_adjoint(&residual)?;
        let tau = self.stepper.grid().tau();
        let n = self.stepper.n_penalty();
        let frames = (1..=self.steps())
            .map(|k| {
                let pk = p.frame(k - 1);
                let reg = self.mhat.matvec(z.at_step(k));
                self.mk_rows
                    .iter()
                    .zip(&reg)
                    .map(|(row, r)| {
                        let mp: f64 = row.iter().map(|(j, v)| v * pk[*j]).sum();
                        tau * (n * mp + self.xi * r)
                    })
                    .collect()
            })
            .collect();
        Ok((value, ControlField::new(self.support.clone(), frames)?))
    }

    pub fn gradient(&self, z: &ControlField) -> Result<ControlField> {
        Ok(self.value_and_gradient(z)?.1)
    }

    /// Projected L-BFGS from `z0`.
    pub fn minimize(&self, z0: &ControlField, opts: &PbfgsOptions) -> Result<(ControlField, PbfgsResult)> {
        self.check(z0)?;
        let steps = self.steps();
        let support = self.support.clone();
        let result = pbfgs_minimize(
            |x| {
                let z = ControlField::from_flat(support.clone(), steps, x)?;
                let (v, g) = self.value_and_gradient(&z)?;
                Ok((v, g.to_flat()))
            },
            &z0.project().to_flat(),
            opts,
        )?;
        let z = ControlField::from_flat(self.support.clone(), steps, &result.x)?;
        Ok((z, result))
    }
}

/// Entrywise `max(z, 0)`.
pub fn project(z: &ControlField) -> ControlField {
    z.project()
}

/// `u_d = u(z_true) + noise` with i.i.d. normal noise of standard deviation
/// `sigma` on the nodes touching the interior domain at levels `1..=K`.
pub fn synthesize_data(
    mesh: &TriMesh,
    stepper: &Stepper,
    z_true: &ControlField,
    u0: &[f64],
    sigma: f64,
    seed: u64,
) -> Result<Trajectory> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return param_err("noise standard deviation must be finite and >= 0");
    }
    let clean = stepper.solve_forward(Some(z_true), None, u0)?;
    if sigma == 0.0 {
        return Ok(clean);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| crate::Error::Parameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = clean.frames().to_vec();
    for frame in frames.iter_mut().skip(1) {
        for (v, inside) in frame.iter_mut().zip(mesh.node_in_omega()) {
            if *inside {
                *v += normal.sample(&mut rng);
            }
        }
    }
    Trajectory::new(frames)
}

/// Writes `iter,objective,proj_grad_norm,step_length`.
pub fn write_history_csv(history: &[HistoryEntry], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "iter,objective,proj_grad_norm,step_length")?;
    for h in history {
        writeln!(
            w,
            "{},{},{},{}",
            h.iter,
            format_value(h.objective),
            format_value(h.proj_grad_norm),
            format_value(h.step_length)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// `sqrt(z^k . Mhat z^k)` for one frame of the control.
pub fn control_l2_norm(mass: &CsrMatrix, values: &[f64]) -> f64 {
    mass.quad_form(values).max(0.0).sqrt()
}

impl IdentifyProblem<'_> {
    /// Regularization mass restricted to the support nodes.
    pub fn control_mass(&self) -> &CsrMatrix {
        &self.mhat
    }

    /// `int z_h^k dx` over the control support.
    pub fn control_integral(&self, z: &ControlField, k: usize) -> f64 {
        let sums = self.stepper.forms().mass_control.row_sums();
        let w: Vec<f64> = self.support.iter().map(|&i| sums[i]).collect();
        dot(&w, z.at_step(k))
    }
}
