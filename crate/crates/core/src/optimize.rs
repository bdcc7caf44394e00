//! Projected limited-memory BFGS for `min f(x)` subject to `x >= 0`, with
//! an Armijo backtracking search along the projected path.

use std::collections::VecDeque;

use crate::error::{param_err, Result};
use crate::linalg::{dot, norm2};

/// Settings of the projected L-BFGS iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbfgsOptions {
    pub memory: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    /// Relative stopping tolerance: the iteration stops once the projected
    /// gradient norm is at most `grad_tol * (1 + |f(x0)|)`.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
    /// Carried for reproducibility records; the iteration itself is
    /// deterministic.
    pub seed: u64,
}

impl Default for PbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            armijo_c: 1e-4,
            backtrack: 0.5,
            grad_tol: 1e-8,
            max_iters: 200,
            max_backtracks: 50,
            seed: 0,
        }
    }
}

impl PbfgsOptions {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return param_err("pbfgs memory must be >= 1");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return param_err("armijo_c must lie in (0,1)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return param_err("backtrack must lie in (0,1)");
        }
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return param_err("grad_tol must be finite and > 0");
        }
        if self.max_backtracks == 0 {
            return param_err("max_backtracks must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbfgsStatus {
    Converged,
    MaxIterations,
    /// The line search exhausted its backtracks; the best iterate is returned.
    LineSearchFailed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iter: usize,
    pub objective: f64,
    pub proj_grad_norm: f64,
    pub step_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbfgsResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: PbfgsStatus,
    pub history: Vec<HistoryEntry>,
    pub evaluations: usize,
}

/// Entrywise `max(x, 0)`.
pub fn project_nonneg(x: &mut [f64]) {
    for v in x {
        *v = v.max(0.0);
    }
}

/// `|| P(x - g) - x ||_2`.
pub fn projected_gradient_norm(x: &[f64], g: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .map(|(x, g)| {
            let d = (x - g).max(0.0) - x;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Minimizes `f` over the nonnegative orthant. `eval` returns the value
/// and gradient at a point.
pub fn pbfgs_minimize(
    mut eval: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    x0: &[f64],
    opts: &PbfgsOptions,
) -> Result<PbfgsResult> {
    opts.validate()?;
    let n = x0.len();
    let mut x = x0.to_vec();
    project_nonneg(&mut x);
    let (mut f, mut g) = eval(&x)?;
    let mut evaluations = 1;
    let tol = opts.grad_tol * (1.0 + f.abs());
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut pgn = projected_gradient_norm(&x, &g);
    let mut history = vec![HistoryEntry { iter: 0, objective: f, proj_grad_norm: pgn, step_length: 0.0 }];
    let mut status = PbfgsStatus::MaxIterations;
    let mut d = vec![0.0; n];
    let mut xt = vec![0.0; n];

    for iter in 1..=opts.max_iters + 1 {
        if pgn <= tol {
            status = PbfgsStatus::Converged;
            break;
        }
        if iter > opts.max_iters {
            break;
        }
        // variables held at the bound by the gradient do not move
        let free: Vec<bool> = x.iter().zip(&g).map(|(x, g)| !(*x <= 0.0 && *g > 0.0)).collect();
        two_loop(&pairs, &g, &free, &mut d);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
            slope = dot(&g, &d);
        }
        if !(slope < 0.0) {
            // only bound-blocked components remain
            status = PbfgsStatus::Converged;
            break;
        }
        // without curvature information the first trial step has unit length
        let mut alpha = if pairs.is_empty() { 1.0 / norm2(&d) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            for i in 0..n {
                xt[i] = (x[i] + alpha * d[i]).max(0.0);
            }
            let pred: f64 = g.iter().zip(xt.iter().zip(&x)).map(|(g, (a, b))| g * (a - b)).sum();
            let (ft, gt) = eval(&xt)?;
            evaluations += 1;
            if ft.is_finite() && pred < 0.0 && ft <= f + opts.armijo_c * pred {
                accepted = Some((ft, gt));
                break;
            }
            alpha *= opts.backtrack;
        }
        let Some((ft, gt)) = accepted else {
            status = PbfgsStatus::LineSearchFailed;
            break;
        };
        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let step_length = norm2(&s);
        if sy > 1e-12 * step_length * norm2(&y) {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x.copy_from_slice(&xt);
        f = ft;
        g = gt;
        pgn = projected_gradient_norm(&x, &g);
        history.push(HistoryEntry { iter, objective: f, proj_grad_norm: pgn, step_length });
    }
    Ok(PbfgsResult { x, objective: f, status, history, evaluations })
}

/// `d = -H g` restricted to the free variables.
fn two_loop(pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, g: &[f64], free: &[bool], d: &mut [f64]) {
    let mask = |v: &mut [f64]| {
        for (x, f) in v.iter_mut().zip(free) {
            if !f {
                *x = 0.0;
            }
        }
    };
    d.copy_from_slice(g);
    mask(d);
    let mut alphas = vec![0.0; pairs.len()];
    for (i, (s, y, rho)) in pairs.iter().enumerate().rev() {
        let a = rho * dot(s, d);
        alphas[i] = a;
        for (dv, yv) in d.iter_mut().zip(y) {
            *dv -= a * yv;
        }
        mask(d);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        d.iter_mut().for_each(|v| *v *= gamma);
    }
    for (i, (s, y, rho)) in pairs.iter().enumerate() {
        let b = rho * dot(y, d);
        for (dv, sv) in d.iter_mut().zip(s) {
            *dv += (alphas[i] - b) * sv;
        }
        mask(d);
    }
    d.iter_mut().for_each(|v| *v = -*v);
}
