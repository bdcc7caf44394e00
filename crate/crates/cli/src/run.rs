//! Executes a configuration and writes its artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use exofrac_core::evolve::{format_value, write_restricted_csv};
use exofrac_core::identify::{control_l2_norm, synthesize_data, write_history_csv};
use exofrac_core::mesh::{generate_mesh, load_mesh, save_mesh};
use exofrac_core::study::{robin_dirichlet_rate, spatial_rate, ManufacturedProblem};
use exofrac_core::{
    AssembledForms, ControlField, FracParams, GeometrySpec, IdentifyProblem, Region, Stepper, TimeGrid, Trajectory,
    TriMesh,
};

use crate::config::{Geometry, Mode, RunConfig, SolveData};
use crate::error::CliError;

/// Outcome of a run: summary lines and the files written, relative to the
/// output directory.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub summary: Vec<String>,
    pub files: Vec<String>,
}

struct Outputs<'a> {
    dir: &'a Path,
    report: RunReport,
}

impl Outputs<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.report.files.push(name.to_string());
        self.dir.join(name)
    }

    fn note(&mut self, line: String) {
        self.report.summary.push(line);
    }
}

/// Runs `config`, writing into `config.out`, and always finishes with a
/// manifest (`manifest.txt`) holding every configuration value, the code
/// version, the wall-clock time and the run status.
pub fn run(config: &RunConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    std::fs::create_dir_all(&config.out)?;
    let mut out = Outputs { dir: &config.out, report: RunReport::default() };
    let result = execute(config, &mut out);
    let status = match &result {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("failed ({e})"),
    };
    write_manifest(config, &out.report, &status, start.elapsed().as_secs_f64(), result.is_err())?;
    out.report.files.push("manifest.txt".into());
    result.map(|()| out.report)
}

fn write_manifest(config: &RunConfig, report: &RunReport, status: &str, seconds: f64, partial: bool) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(config.out.join("manifest.txt"))?);
    writeln!(w, "# exofrac {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# status: {status}")?;
    writeln!(w, "# wall_clock_seconds: {seconds:.3}")?;
    for (k, v) in config.entries() {
        writeln!(w, "{k} = {v}")?;
    }
    for line in &report.summary {
        writeln!(w, "# result: {line}")?;
    }
    let tag = if partial { "partial outputs" } else { "outputs" };
    writeln!(w, "# {tag}: {}", report.files.join(" "))?;
    w.flush()?;
    Ok(())
}

fn build_mesh(config: &RunConfig) -> Result<TriMesh, CliError> {
    if let Some(path) = &config.mesh_file {
        return Ok(load_mesh(path)?);
    }
    let mut spec = match config.geometry {
        Geometry::DiskInDisk => GeometrySpec::disk_in_disk(config.h),
        Geometry::SquareWithControl => GeometrySpec::square_with_control(config.h),
    };
    spec.kappa_support = config.kappa_support;
    Ok(generate_mesh(&spec)?)
}

fn params(config: &RunConfig, n: f64) -> Result<FracParams, CliError> {
    Ok(FracParams::new(config.s, n, config.xi, config.kappa)?)
}

fn write_matrix_summary(forms: &AssembledForms, mesh: &TriMesh, path: &Path) -> Result<(), CliError> {
    let a = &forms.stiffness;
    let trace: f64 = (0..a.dim()).map(|i| a[(i, i)]).sum();
    let omega = (0..mesh.num_triangles()).filter(|&e| mesh.region(e) == Region::Omega).count();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "ndof = {}", forms.ndof)?;
    writeln!(w, "triangles = {}", mesh.num_triangles())?;
    writeln!(w, "omega_triangles = {omega}")?;
    writeln!(w, "stiffness_max_abs = {}", format_value(a.max_abs()))?;
    writeln!(w, "stiffness_trace = {}", format_value(trace))?;
    writeln!(w, "stiffness_asymmetry = {}", format_value(a.asymmetry()))?;
    writeln!(w, "mass_omega_nnz = {}", forms.mass_omega.nnz())?;
    writeln!(w, "mass_kappa_nnz = {}", forms.mass_kappa.nnz())?;
    writeln!(w, "mass_control_nnz = {}", forms.mass_control.nnz())?;
    w.flush()?;
    Ok(())
}

fn execute(config: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let mesh = build_mesh(config)?;
    save_mesh(&mesh, &out.path("mesh.txt"))?;
    out.note(format!("mesh: {} nodes, {} triangles", mesh.num_vertices(), mesh.num_triangles()));
    let grid = TimeGrid::new(config.t_final, config.steps)?;
    match config.mode {
        Mode::Solve => solve(config, &mesh, grid, out),
        Mode::Rate => rate(config, &mesh, grid, out),
        Mode::SpatialRate => spatial(config, mesh, grid, out),
        Mode::Identify => identify(config, &mesh, grid, out),
    }
}

fn required_n(config: &RunConfig) -> Result<f64, CliError> {
    config.n.ok_or_else(|| CliError::Config("missing required key \"n\" (accepted range [1, inf))".into()))
}

fn write_frames(traj: &Trajectory, mesh: &TriMesh, prefix: &str, config: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let frames = traj.write_frames(mesh, out.dir, prefix, config.stride)?;
    for k in &frames {
        out.report.files.push(format!("{prefix}_{k:05}.csv"));
    }
    out.note(format!("{} {prefix} frames written (stride {})", frames.len(), config.stride));
    Ok(())
}

fn solve(config: &RunConfig, mesh: &TriMesh, grid: TimeGrid, out: &mut Outputs) -> Result<(), CliError> {
    let n = required_n(config)?;
    let forms = AssembledForms::assemble(mesh, &params(config, n)?, &config.quadrature)?;
    write_matrix_summary(&forms, mesh, &out.path("matrices.txt"))?;
    let traj = match config.data {
        SolveData::Manufactured => {
            let problem = ManufacturedProblem::new(mesh, &forms, config.s, grid)?;
            let traj = problem.solve(n)?;
            let err = exofrac_core::study::l2qt_error(&traj, &problem.exact, mesh, &grid, &forms.mass_omega)?;
            out.note(format!("l2qt error against the closed-form solution: {}", format_value(err)));
            traj
        }
        SolveData::Zero => Stepper::new(&forms, n, grid)?.solve_forward(None, None, &vec![0.0; forms.ndof])?,
        SolveData::Control => {
            let support = mesh.control_nodes();
            if support.is_empty() {
                return Err(CliError::Config("data = control needs a geometry with a control support".into()));
            }
            let z = ControlField::constant(support, grid.steps(), config.z_true);
            Stepper::new(&forms, n, grid)?.solve_forward(Some(&z), None, &vec![0.0; forms.ndof])?
        }
    };
    write_frames(&traj, mesh, "u", config, out)
}

fn rate(config: &RunConfig, mesh: &TriMesh, grid: TimeGrid, out: &mut Outputs) -> Result<(), CliError> {
    let forms = AssembledForms::assemble(mesh, &params(config, 1.0)?, &config.quadrature)?;
    write_matrix_summary(&forms, mesh, &out.path("matrices.txt"))?;
    let r = robin_dirichlet_rate(mesh, &forms, grid, config.s, &config.n_list)?;
    r.write_csv(&out.path("rate.csv"))?;
    out.note(format!("fitted slope in n: {}", format_value(r.slope)));
    Ok(())
}

fn spatial(config: &RunConfig, coarse: TriMesh, grid: TimeGrid, out: &mut Outputs) -> Result<(), CliError> {
    let n = required_n(config)?;
    let mut meshes = vec![coarse];
    for _ in 0..config.levels {
        let next = meshes.last().expect("at least the coarse mesh").refine_uniform()?;
        meshes.push(next);
    }
    let r = spatial_rate(&meshes, grid, &params(config, n)?, &config.quadrature)?;
    r.write_csv(&out.path("rate.csv"))?;
    out.note(format!("fitted slope in DoFs: {}", format_value(r.slope)));
    Ok(())
}

fn identify(config: &RunConfig, mesh: &TriMesh, grid: TimeGrid, out: &mut Outputs) -> Result<(), CliError> {
    let n = required_n(config)?;
    let support = mesh.control_nodes();
    if support.is_empty() {
        return Err(CliError::Config("identify mode needs a geometry with a control support".into()));
    }
    let forms = AssembledForms::assemble(mesh, &params(config, n)?, &config.quadrature)?;
    write_matrix_summary(&forms, mesh, &out.path("matrices.txt"))?;
    let stepper = Stepper::new(&forms, n, grid)?;
    let z_true = ControlField::constant(support.clone(), grid.steps(), config.z_true);
    let u0 = vec![0.0; forms.ndof];
    let data = synthesize_data(mesh, &stepper, &z_true, &u0, config.noise_sigma, config.seed)?;
    let problem = IdentifyProblem::new(mesh, &stepper, data, config.xi, config.kappa, config.control_norm)?;
    let z0 = ControlField::constant(support.clone(), grid.steps(), 0.0);
    let (z, result) = problem.minimize(&z0, &config.pbfgs)?;
    write_history_csv(&result.history, &out.path("history.csv"))?;
    let mut written = 0;
    for k in (1..=grid.steps()).step_by(config.stride) {
        let name = format!("z_{k:05}.csv");
        write_restricted_csv(mesh, &support, z.at_step(k), &out.path(&name))?;
        written += 1;
    }
    out.note(format!("{written} control frames written (stride {})", config.stride));
    let mut w = BufWriter::new(File::create(out.path("probes.csv"))?);
    writeln!(w, "t,step,mass,l2_norm")?;
    for &t in &config.probe_times {
        let k = grid.nearest_step(t);
        let mass = problem.control_integral(&z, k);
        let norm = control_l2_norm(problem.control_mass(), z.at_step(k));
        writeln!(w, "{},{k},{},{}", format_value(t), format_value(mass), format_value(norm))?;
    }
    w.flush()?;
    out.note(format!(
        "optimizer {:?} after {} iterations, objective {}",
        result.status,
        result.history.len().saturating_sub(1),
        format_value(result.objective)
    ));
    Ok(())
}
