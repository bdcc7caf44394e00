//! Computations shared by the acceptance suite and the ordinary tests.

use exofrac_core::evolve::system_matrix;
use exofrac_core::identify::{synthesize_data, ControlNorm};
use exofrac_core::mesh::generate_mesh;
use exofrac_core::optimize::project_nonneg;
use exofrac_core::{
    AssembledForms, ControlField, DenseMatrix, FracParams, GeometrySpec, IdentifyProblem, PbfgsOptions, QuadratureConfig,
    Stepper, TimeGrid, TriMesh,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Smallest `v.A v / (|v|^2 max|A|)` over random draws.
pub fn min_rayleigh(a: &DenseMatrix, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..draws {
        let v = random_vec(&mut rng, a.dim(), -1.0, 1.0);
        let vv: f64 = v.iter().map(|x| x * x).sum();
        worst = worst.min(a.quad_form(&v) / (vv * a.max_abs()));
    }
    worst
}

/// Identification geometry with noisy data from `z = 1`.
pub struct IdentSetup {
    pub mesh: TriMesh,
    pub forms: AssembledForms,
    pub grid: TimeGrid,
    pub n: f64,
    pub xi: f64,
}

impl IdentSetup {
    pub fn new(h: f64, s: f64, steps: usize, n: f64, xi: f64) -> Self {
        let mesh = generate_mesh(&GeometrySpec::square_with_control(h)).unwrap();
        let params = FracParams::new(s, n, xi, 1.0).unwrap();
        let forms = AssembledForms::assemble(&mesh, &params, &QuadratureConfig::default()).unwrap();
        Self { mesh, forms, grid: TimeGrid::new(1.0, steps).unwrap(), n, xi }
    }

    pub fn stepper(&self) -> Stepper<'_> {
        Stepper::new(&self.forms, self.n, self.grid).unwrap()
    }

    pub fn problem<'a>(&'a self, stepper: &'a Stepper<'a>, sigma: f64, seed: u64) -> IdentifyProblem<'a> {
        let z_true = ControlField::constant(self.mesh.control_nodes(), self.grid.steps(), 1.0);
        let u0 = vec![0.0; self.forms.ndof];
        let data = synthesize_data(&self.mesh, stepper, &z_true, &u0, sigma, seed).unwrap();
        IdentifyProblem::new(&self.mesh, stepper, data, self.xi, 1.0, ControlNorm::Lebesgue).unwrap()
    }
}

/// Worst relative mismatch between `<g, d>` and the best central
/// difference over steps `1e-3 .. 1e-6`, for `directions` random
/// directions at a random positive control.
pub fn fd_gradient_worst(setup: &IdentSetup, directions: usize, seed: u64) -> f64 {
    let stepper = setup.stepper();
    let problem = setup.problem(&stepper, 0.005, seed);
    let support = problem.support().to_vec();
    let k = problem.steps();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = ControlField::from_flat(support.clone(), k, &random_vec(&mut rng, problem.dim(), 0.5, 1.5)).unwrap();
    let (_, g) = problem.value_and_gradient(&z).unwrap();
    let g = g.to_flat();
    let mut worst: f64 = 0.0;
    for _ in 0..directions {
        let d = random_vec(&mut rng, problem.dim(), -1.0, 1.0);
        let exact: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let mut best = f64::INFINITY;
        for h in [1e-3, 1e-4, 1e-5, 1e-6] {
            let shifted = |sign: f64| {
                let x: Vec<f64> = z.to_flat().iter().zip(&d).map(|(a, b)| a + sign * h * b).collect();
                problem.objective(&ControlField::from_flat(support.clone(), k, &x).unwrap()).unwrap().0
            };
            let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * h);
            best = best.min((exact - fd).abs() / fd.abs().max(1e-12));
        }
        worst = worst.max(best);
    }
    worst
}

/// One named structural check.
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Symmetry, semidefiniteness, energy decay, projection idempotence,
/// monotone optimization history and fixed-seed determinism.
pub fn structural_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let setup = IdentSetup::new(0.2, 0.6, 8, 1e4, 1e-6);
    let a = &setup.forms.stiffness;
    let asym = a.asymmetry() / a.max_abs();
    out.push(Check { name: "stiffness symmetry", pass: asym <= 1e-12, detail: format!("{asym:.2e} <= 1e-12") });
    let s = system_matrix(&setup.forms, setup.n, &setup.grid);
    let sasym = s.asymmetry() / s.max_abs();
    out.push(Check { name: "system symmetry", pass: sasym <= 1e-12, detail: format!("{sasym:.2e} <= 1e-12") });
    let ray = min_rayleigh(a, 100, 3);
    out.push(Check { name: "stiffness PSD", pass: ray >= -1e-10, detail: format!("min Rayleigh {ray:.2e} >= -1e-10") });

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let u0 = random_vec(&mut rng, setup.forms.ndof, -1.0, 1.0);
    for tau in [1e-3, 1.0, 10.0] {
        let grid = TimeGrid::new(tau * 10.0, 10).unwrap();
        let st = Stepper::new(&setup.forms, setup.n, grid).unwrap();
        let u = st.solve_forward(None, None, &u0).unwrap();
        let norms: Vec<f64> = u.frames().iter().map(|x| setup.forms.mass_omega.quad_form(x).sqrt()).collect();
        let ok = norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        out.push(Check {
            name: "energy decay",
            pass: ok,
            detail: format!("tau={tau}: |u^0|={:.3e} |u^K|={:.3e}", norms[0], norms[10]),
        });
    }

    let mut x = random_vec(&mut rng, 500, -1.0, 1.0);
    project_nonneg(&mut x);
    let mut y = x.clone();
    project_nonneg(&mut y);
    let idem = x == y && x.iter().all(|v| *v >= 0.0);
    out.push(Check { name: "projection idempotence", pass: idem, detail: "P(P(x)) == P(x)".into() });

    let stepper = setup.stepper();
    let run = || {
        let problem = setup.problem(&stepper, 0.005, 9);
        let z0 = ControlField::constant(problem.support().to_vec(), problem.steps(), 0.0);
        let opts = PbfgsOptions { max_iters: 25, ..PbfgsOptions::default() };
        problem.minimize(&z0, &opts).unwrap()
    };
    let (z1, r1) = run();
    let monotone = r1.history.windows(2).all(|w| w[1].objective <= w[0].objective);
    out.push(Check {
        name: "Armijo monotone history",
        pass: monotone && z1.min_value() >= 0.0 && r1.history.len() > 1,
        detail: format!("{} iterates, min control {:.2e}", r1.history.len(), z1.min_value()),
    });
    let (z2, r2) = run();
    let same = r1.history.len() == r2.history.len()
        && r1.history.iter().zip(&r2.history).all(|(a, b)| {
            a.objective.to_bits() == b.objective.to_bits() && a.proj_grad_norm.to_bits() == b.proj_grad_norm.to_bits()
        })
        && z1.to_flat().iter().zip(z2.to_flat()).all(|(a, b)| a.to_bits() == b.to_bits());
    out.push(Check { name: "fixed-seed determinism", pass: same, detail: "bit-identical history and control".into() });
    out
}
