//! `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Unknown keys are
//! rejected and every value is range-checked. Command-line overrides use the
//! same keys and are applied after the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use exofrac_core::identify::ControlNorm;
use exofrac_core::mesh::KappaSupport;
use exofrac_core::{PbfgsOptions, QuadratureConfig};

use crate::error::CliError;

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One forward solve.
    Solve,
    /// Error against the closed-form solution for a list of penalties.
    Rate,
    /// Error against the closed-form solution under uniform refinement.
    SpatialRate,
    /// Exterior source identification from noisy synthetic data.
    Identify,
}

impl Mode {
    fn parse(v: &str) -> Option<Self> {
        match v {
            "solve" => Some(Mode::Solve),
            "rate" => Some(Mode::Rate),
            "spatial-rate" => Some(Mode::SpatialRate),
            "identify" => Some(Mode::Identify),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Rate => "rate",
            Mode::SpatialRate => "spatial-rate",
            Mode::Identify => "identify",
        }
    }
}

/// Built-in geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// `Omega = B(0, 1/2)` inside `B(0, 3/2)`.
    DiskInDisk,
    /// `Omega = [-0.4, 0.4]^2` inside `B(0, 3/2)` with a square control
    /// patch.
    SquareWithControl,
}

impl Geometry {
    fn as_str(self) -> &'static str {
        match self {
            Geometry::DiskInDisk => "disk-in-disk",
            Geometry::SquareWithControl => "square-with-control",
        }
    }
}

/// Data of a forward solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveData {
    /// Source, exterior data and initial datum of the closed-form solution.
    Manufactured,
    /// Everything zero.
    Zero,
    /// Constant `z_true` on the control support, zero otherwise.
    Control,
}

impl SolveData {
    fn as_str(self) -> &'static str {
        match self {
            SolveData::Manufactured => "manufactured",
            SolveData::Zero => "zero",
            SolveData::Control => "control",
        }
    }
}

/// Accepted keys: name, default (empty when required or mode-dependent)
/// and description. Shown by `--help`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("mode", "", "solve | rate | spatial-rate | identify (required)"),
    ("s", "", "fractional exponent in (0,1) (required)"),
    ("n", "", "Robin penalty >= 1 (required except in rate mode)"),
    ("T", "", "final time > 0 (required)"),
    ("K", "", "number of time steps >= 1 (required)"),
    ("geometry", "by mode", "disk-in-disk | square-with-control; identify uses square-with-control"),
    ("h", "0.075", "target mesh size > 0"),
    ("mesh_file", "", "load this mesh instead of generating one"),
    ("kappa_support", "all-exterior", "all-exterior | control"),
    ("kappa", "1", "Robin weight value > 0"),
    ("xi", "1e-8", "control regularization >= 0"),
    ("quad_order", "4", "triangle rule degree for separated pairs: 4 or 6"),
    ("singular_points", "8", "Gauss points per direction for touching pairs, 3..64"),
    ("near_factor", "3", "refine separated pairs closer than this many diameters, >= 0"),
    ("tail_points", "8", "Gauss points per boundary edge for the far field, 1..64"),
    ("data", "manufactured", "solve mode data: manufactured | zero | control"),
    ("z_true", "1", "control value used for solve data=control and synthetic data, >= 0"),
    ("n_list", "", "rate mode penalties, comma separated, increasing, each >= 1"),
    ("levels", "3", "spatial-rate refinements, 1..6"),
    ("noise_sigma", "0.005", "noise standard deviation >= 0"),
    ("seed", "0", "noise seed (unsigned integer)"),
    ("control_norm", "lebesgue", "regularization measure: lebesgue | kappa"),
    ("memory", "10", "L-BFGS pair history >= 1"),
    ("armijo_c", "1e-4", "sufficient decrease constant in (0,1)"),
    ("backtrack", "0.5", "step shrink factor in (0,1)"),
    ("grad_tol", "1e-8", "relative projected-gradient tolerance > 0"),
    ("max_iters", "200", "iteration limit >= 1"),
    ("probe_times", "0.25,0.3,0.43,0.58", "identify mode report times in (0,T]"),
    ("out", "out", "output directory"),
    ("stride", "1", "write every stride-th frame, >= 1"),
];

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub s: f64,
    pub n: Option<f64>,
    pub t_final: f64,
    pub steps: usize,
    pub geometry: Geometry,
    pub h: f64,
    pub mesh_file: Option<PathBuf>,
    pub kappa_support: KappaSupport,
    pub kappa: f64,
    pub xi: f64,
    pub quadrature: QuadratureConfig,
    pub data: SolveData,
    pub z_true: f64,
    pub n_list: Vec<f64>,
    pub levels: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub control_norm: ControlNorm,
    pub pbfgs: PbfgsOptions,
    pub probe_times: Vec<f64>,
    pub out: PathBuf,
    pub stride: usize,
}

/// Raw `key -> value` pairs with the line each came from.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected key = value, got {line:?}", i + 1)));
            };
            raw.set(k.trim(), v.trim())?;
        }
        Ok(raw)
    }

    /// Sets one key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            return Err(CliError::Config(format!("unknown key \"{key}\"")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `--key=value` override.
    pub fn apply_override(&mut self, arg: &str) -> Result<(), CliError> {
        let body = arg
            .strip_prefix("--")
            .ok_or_else(|| CliError::Config(format!("override {arg:?} must look like --key=value")))?;
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override {arg:?} must look like --key=value")))?;
        self.set(k.trim(), v.trim())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn or_default<'a>(&'a self, key: &str) -> &'a str {
        self.get(key).unwrap_or_else(|| KEYS.iter().find(|(k, _, _)| *k == key).map(|(_, d, _)| *d).unwrap_or(""))
    }
}

fn range_err(key: &str, range: &str, value: &str) -> CliError {
    CliError::Config(format!("{key} must lie in {range}, got \"{value}\""))
}

fn real(raw: &RawConfig, key: &str, range: &str, ok: impl Fn(f64) -> bool) -> Result<f64, CliError> {
    let v = raw.or_default(key);
    if v.is_empty() {
        return Err(CliError::Config(format!("missing required key \"{key}\" (accepted range {range})")));
    }
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() && ok(x) => Ok(x),
        _ => Err(range_err(key, range, v)),
    }
}

fn integer(raw: &RawConfig, key: &str, range: &str, ok: impl Fn(u64) -> bool) -> Result<u64, CliError> {
    let v = raw.or_default(key);
    if v.is_empty() {
        return Err(CliError::Config(format!("missing required key \"{key}\" (accepted range {range})")));
    }
    match v.parse::<u64>() {
        Ok(x) if ok(x) => Ok(x),
        _ => Err(range_err(key, range, v)),
    }
}

fn real_list(raw: &RawConfig, key: &str, range: &str, ok: impl Fn(f64) -> bool) -> Result<Vec<f64>, CliError> {
    let v = raw.or_default(key);
    v.split(',')
        .map(|x| match x.trim().parse::<f64>() {
            Ok(y) if y.is_finite() && ok(y) => Ok(y),
            _ => Err(range_err(key, range, v)),
        })
        .collect()
}

fn choice<T: Copy>(raw: &RawConfig, key: &str, options: &[(&str, T)]) -> Result<T, CliError> {
    let v = raw.or_default(key);
    options.iter().find(|(name, _)| *name == v).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        CliError::Config(format!("{key} must be one of {}, got \"{v}\"", names.join(" | ")))
    })
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let mode_str = raw.get("mode").ok_or_else(|| {
            CliError::Config("missing required key \"mode\" (solve | rate | spatial-rate | identify)".into())
        })?;
        let mode = Mode::parse(mode_str).ok_or_else(|| {
            CliError::Config(format!("mode must be one of solve | rate | spatial-rate | identify, got \"{mode_str}\""))
        })?;
        let s = real(raw, "s", "(0,1)", |x| x > 0.0 && x < 1.0)?;
        let n = if mode == Mode::Rate && raw.get("n").is_none() {
            None
        } else {
            Some(real(raw, "n", "[1, inf)", |x| x >= 1.0)?)
        };
        let t_final = real(raw, "T", "(0, inf)", |x| x > 0.0)?;
        let steps = integer(raw, "K", "[1, 10000000]", |x| (1..=10_000_000).contains(&x))? as usize;
        let geometry = match raw.get("geometry") {
            None if mode == Mode::Identify => Geometry::SquareWithControl,
            None => Geometry::DiskInDisk,
            Some(_) => choice(
                raw,
                "geometry",
                &[("disk-in-disk", Geometry::DiskInDisk), ("square-with-control", Geometry::SquareWithControl)],
            )?,
        };
        let quadrature = QuadratureConfig {
            order: integer(raw, "quad_order", "{4, 6}", |x| x == 4 || x == 6)? as usize,
            singular_points: integer(raw, "singular_points", "[3, 64]", |x| (3..=64).contains(&x))? as usize,
            near_factor: real(raw, "near_factor", "[0, inf)", |x| x >= 0.0)?,
            tail_points: integer(raw, "tail_points", "[1, 64]", |x| (1..=64).contains(&x))? as usize,
        };
        let n_list = if mode == Mode::Rate {
            if raw.get("n_list").is_none() {
                return Err(CliError::Config(
                    "missing required key \"n_list\" (comma separated, increasing, each >= 1)".into(),
                ));
            }
            let l = real_list(raw, "n_list", "[1, inf) as an increasing list", |x| x >= 1.0)?;
            if l.len() < 2 || l.windows(2).any(|w| w[0] >= w[1]) {
                return Err(range_err("n_list", "at least two strictly increasing values", raw.or_default("n_list")));
            }
            l
        } else {
            Vec::new()
        };
        let pbfgs = PbfgsOptions {
            memory: integer(raw, "memory", "[1, 1000]", |x| (1..=1000).contains(&x))? as usize,
            armijo_c: real(raw, "armijo_c", "(0,1)", |x| x > 0.0 && x < 1.0)?,
            backtrack: real(raw, "backtrack", "(0,1)", |x| x > 0.0 && x < 1.0)?,
            grad_tol: real(raw, "grad_tol", "(0, inf)", |x| x > 0.0)?,
            max_iters: integer(raw, "max_iters", "[1, 100000]", |x| (1..=100_000).contains(&x))? as usize,
            seed: integer(raw, "seed", "[0, 2^64)", |_| true)?,
            ..PbfgsOptions::default()
        };
        let probe_times = real_list(raw, "probe_times", "(0, T]", |x| x > 0.0 && x <= t_final)?;
        Ok(RunConfig {
            mode,
            s,
            n,
            t_final,
            steps,
            geometry,
            h: real(raw, "h", "(0, inf)", |x| x > 0.0)?,
            mesh_file: raw.get("mesh_file").filter(|v| !v.is_empty()).map(PathBuf::from),
            kappa_support: choice(
                raw,
                "kappa_support",
                &[("all-exterior", KappaSupport::AllExterior), ("control", KappaSupport::Control)],
            )?,
            kappa: real(raw, "kappa", "(0, inf)", |x| x > 0.0)?,
            xi: real(raw, "xi", "[0, inf)", |x| x >= 0.0)?,
            quadrature,
            data: choice(
                raw,
                "data",
                &[("manufactured", SolveData::Manufactured), ("zero", SolveData::Zero), ("control", SolveData::Control)],
            )?,
            z_true: real(raw, "z_true", "[0, inf)", |x| x >= 0.0)?,
            n_list,
            levels: integer(raw, "levels", "[1, 6]", |x| (1..=6).contains(&x))? as usize,
            noise_sigma: real(raw, "noise_sigma", "[0, inf)", |x| x >= 0.0)?,
            seed: pbfgs.seed,
            control_norm: choice(raw, "control_norm", &[("lebesgue", ControlNorm::Lebesgue), ("kappa", ControlNorm::Kappa)])?,
            pbfgs,
            probe_times,
            out: PathBuf::from(raw.or_default("out")),
            stride: integer(raw, "stride", "[1, inf)", |x| x >= 1)? as usize,
        })
    }

    /// Every key with its effective value, in the order of [`KEYS`]. Parsing
    /// these lines back yields the same configuration.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut out = Vec::new();
        for (key, _, _) in KEYS {
            let value = match *key {
                "mode" => self.mode.as_str().to_string(),
                "s" => format!("{:?}", self.s),
                "n" => match self.n {
                    Some(n) => format!("{n:?}"),
                    None => continue,
                },
                "T" => format!("{:?}", self.t_final),
                "K" => self.steps.to_string(),
                "geometry" => self.geometry.as_str().to_string(),
                "h" => format!("{:?}", self.h),
                "mesh_file" => match &self.mesh_file {
                    Some(p) => p.display().to_string(),
                    None => continue,
                },
                "kappa_support" => match self.kappa_support {
                    KappaSupport::AllExterior => "all-exterior".into(),
                    KappaSupport::Control => "control".into(),
                },
                "kappa" => format!("{:?}", self.kappa),
                "xi" => format!("{:?}", self.xi),
                "quad_order" => self.quadrature.order.to_string(),
                "singular_points" => self.quadrature.singular_points.to_string(),
                "near_factor" => format!("{:?}", self.quadrature.near_factor),
                "tail_points" => self.quadrature.tail_points.to_string(),
                "data" => self.data.as_str().to_string(),
                "z_true" => format!("{:?}", self.z_true),
                "n_list" => {
                    if self.n_list.is_empty() {
                        continue;
                    }
                    list(&self.n_list)
                }
                "levels" => self.levels.to_string(),
                "noise_sigma" => format!("{:?}", self.noise_sigma),
                "seed" => self.seed.to_string(),
                "control_norm" => match self.control_norm {
                    ControlNorm::Lebesgue => "lebesgue".into(),
                    ControlNorm::Kappa => "kappa".into(),
                },
                "memory" => self.pbfgs.memory.to_string(),
                "armijo_c" => format!("{:?}", self.pbfgs.armijo_c),
                "backtrack" => format!("{:?}", self.pbfgs.backtrack),
                "grad_tol" => format!("{:?}", self.pbfgs.grad_tol),
                "max_iters" => self.pbfgs.max_iters.to_string(),
                "probe_times" => list(&self.probe_times),
                "out" => self.out.display().to_string(),
                "stride" => self.stride.to_string(),
                _ => continue,
            };
            out.push((*key, value));
        }
        out
    }
}

/// Reads a configuration file and applies `--key=value` overrides.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut raw = RawConfig::parse_str(&text)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    RunConfig::from_raw(&raw)
}

/// Parses configuration text without overrides.
pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    RunConfig::from_raw(&RawConfig::parse_str(text)?)
}

/// `--help` text listing every key and its default.
pub fn keys_help() -> String {
    let mut s = String::from("Configuration keys (key = value, '#' comments):\n");
    for (k, d, desc) in KEYS {
        let d = if d.is_empty() { String::new() } else { format!(" [default: {d}]") };
        s.push_str(&format!("  {k:<16} {desc}{d}\n"));
    }
    s
}
