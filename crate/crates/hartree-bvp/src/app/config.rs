//! Flat `key = value` run configuration.
//!
//! One pair per line, `#` comments, dotted keys for nesting. Unknown keys
//! are errors (with their line number); all validation problems are
//! aggregated into a single report naming each offending key. The schema
//! reference with defaults lives in the book's configuration chapter.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::domain::{build_grid, ComplexField, Grid};
use crate::error::{Error, Result};
use crate::kernel::{Backend, KernelFamily, KernelSpec};
use crate::lifting::{bump_c3, BoundaryData, BoundaryProfile, Face, HarmonicLift};
use crate::stepper::{SolveInputs, StepperConfig};

/// Initial-condition selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IcKind {
    Zero,
    Gaussian,
    LiftPlusBump,
}

/// Fully validated run configuration, one value per schema key.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub x_n: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub y_n: usize,

    pub kernel_family: KernelFamily,
    pub soften_a: f64,
    pub backend: Backend,
    pub coupling: f64,

    pub amplitude: f64,
    pub t0: f64,
    pub t1: f64,
    pub profile: String,
    pub face: String,
    pub center_frac: f64,
    pub width_frac: f64,

    pub ic_kind: IcKind,
    pub ic_center_x: f64,
    pub ic_center_y: f64,
    pub ic_width: f64,
    pub ic_amplitude: f64,
    pub compat_tol: f64,

    pub dt: f64,
    pub t_final: f64,
    pub picard_tol: f64,
    pub max_iters: usize,

    pub cadence: usize,
    pub out_dir: String,
    pub format: OutputFormat,
    pub seed: u64,
    pub max_halvings: usize,

    pub probe_samples: usize,
    pub probe_t0: f64,
    pub probe_substeps: usize,
    pub probe_ball_radius: f64,
    pub probe_n_iter: usize,
    pub hardy_dim: usize,
    pub hardy_n: usize,
    pub verify_levels: usize,
}

/// Diagnostics output format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 1,
            x_min: 0.0,
            x_max: 1.0,
            x_n: 128,
            y_min: 0.0,
            y_max: 1.0,
            y_n: 128,
            kernel_family: KernelFamily::Softened,
            soften_a: 0.1,
            backend: Backend::Fast,
            coupling: 1.0,
            amplitude: 0.0,
            t0: 0.0,
            t1: 1.0,
            profile: "uniform".into(),
            face: "xmin".into(),
            center_frac: 0.5,
            width_frac: 0.5,
            ic_kind: IcKind::Zero,
            ic_center_x: 0.5,
            ic_center_y: 0.5,
            ic_width: 0.07,
            ic_amplitude: 1.0,
            compat_tol: 1e-10,
            dt: 1e-3,
            t_final: 0.1,
            picard_tol: 1e-10,
            max_iters: 50,
            cadence: 1,
            out_dir: ".".into(),
            format: OutputFormat::Csv,
            seed: 0,
            max_halvings: 3,
            probe_samples: 1000,
            probe_t0: 0.04,
            probe_substeps: 16,
            probe_ball_radius: 8.0,
            probe_n_iter: 8,
            hardy_dim: 3,
            hardy_n: 33,
            verify_levels: 3,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str, problems: &mut Vec<String>) -> Option<T> {
    match raw.parse::<T>() {
        Ok(v) => Some(v),
        Err(_) => {
            problems.push(format!("{key}: cannot parse value '{raw}'"));
            None
        }
    }
}

/// Parse a config from raw text. `required` keys are `grid.dim`, the x-axis
/// grid keys, `stepper.dt` and `stepper.t_final`.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut pairs: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigParse {
                line: lineno + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if let Some((first, _)) = pairs.get(&key) {
            return Err(Error::ConfigParse {
                line: lineno + 1,
                msg: format!("duplicate key '{key}' (first set on line {first})"),
            });
        }
        pairs.insert(key, (lineno + 1, value));
    }

    let mut cfg = RunConfig::default();
    let mut problems: Vec<String> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (key, (line, raw)) in &pairs {
        seen.insert(key.clone());
        let p = &mut problems;
        match key.as_str() {
            "grid.dim" => cfg.dim = parse_value(key, raw, p).unwrap_or(cfg.dim),
            "grid.x.min" => cfg.x_min = parse_value(key, raw, p).unwrap_or(cfg.x_min),
            "grid.x.max" => cfg.x_max = parse_value(key, raw, p).unwrap_or(cfg.x_max),
            "grid.x.n" => cfg.x_n = parse_value(key, raw, p).unwrap_or(cfg.x_n),
            "grid.y.min" => cfg.y_min = parse_value(key, raw, p).unwrap_or(cfg.y_min),
            "grid.y.max" => cfg.y_max = parse_value(key, raw, p).unwrap_or(cfg.y_max),
            "grid.y.n" => cfg.y_n = parse_value(key, raw, p).unwrap_or(cfg.y_n),
            "kernel.family" => match raw.as_str() {
                "coulomb" => cfg.kernel_family = KernelFamily::Coulomb,
                "softened" => cfg.kernel_family = KernelFamily::Softened,
                other => p.push(format!("kernel.family: unknown family '{other}'")),
            },
            "kernel.soften_a" => cfg.soften_a = parse_value(key, raw, p).unwrap_or(cfg.soften_a),
            "kernel.backend" => match raw.as_str() {
                "direct" => cfg.backend = Backend::Direct,
                "fast" => cfg.backend = Backend::Fast,
                other => p.push(format!("kernel.backend: unknown backend '{other}'")),
            },
            "kernel.coupling" => cfg.coupling = parse_value(key, raw, p).unwrap_or(cfg.coupling),
            "boundary.amplitude" => cfg.amplitude = parse_value(key, raw, p).unwrap_or(cfg.amplitude),
            "boundary.t0" => cfg.t0 = parse_value(key, raw, p).unwrap_or(cfg.t0),
            "boundary.t1" => cfg.t1 = parse_value(key, raw, p).unwrap_or(cfg.t1),
            "boundary.profile" => cfg.profile = raw.clone(),
            "boundary.face" => cfg.face = raw.clone(),
            "boundary.center_frac" => {
                cfg.center_frac = parse_value(key, raw, p).unwrap_or(cfg.center_frac)
            }
            "boundary.width_frac" => {
                cfg.width_frac = parse_value(key, raw, p).unwrap_or(cfg.width_frac)
            }
            "ic.kind" => match raw.as_str() {
                "zero" => cfg.ic_kind = IcKind::Zero,
                "gaussian" => cfg.ic_kind = IcKind::Gaussian,
                "lift_plus_bump" => cfg.ic_kind = IcKind::LiftPlusBump,
                other => p.push(format!("ic.kind: unknown kind '{other}'")),
            },
            "ic.center_x" => cfg.ic_center_x = parse_value(key, raw, p).unwrap_or(cfg.ic_center_x),
            "ic.center_y" => cfg.ic_center_y = parse_value(key, raw, p).unwrap_or(cfg.ic_center_y),
            "ic.width" => cfg.ic_width = parse_value(key, raw, p).unwrap_or(cfg.ic_width),
            "ic.amplitude" => cfg.ic_amplitude = parse_value(key, raw, p).unwrap_or(cfg.ic_amplitude),
            "ic.compat_tol" => cfg.compat_tol = parse_value(key, raw, p).unwrap_or(cfg.compat_tol),
            "stepper.dt" => cfg.dt = parse_value(key, raw, p).unwrap_or(cfg.dt),
            "stepper.t_final" => cfg.t_final = parse_value(key, raw, p).unwrap_or(cfg.t_final),
            "stepper.picard_tol" => {
                cfg.picard_tol = parse_value(key, raw, p).unwrap_or(cfg.picard_tol)
            }
            "stepper.max_iters" => cfg.max_iters = parse_value(key, raw, p).unwrap_or(cfg.max_iters),
            "diagnostics.cadence" => cfg.cadence = parse_value(key, raw, p).unwrap_or(cfg.cadence),
            "output.dir" => cfg.out_dir = raw.clone(),
            "output.format" => match raw.as_str() {
                "csv" => cfg.format = OutputFormat::Csv,
                "json" => cfg.format = OutputFormat::Json,
                other => p.push(format!("output.format: unknown format '{other}'")),
            },
            "rng.seed" => cfg.seed = parse_value(key, raw, p).unwrap_or(cfg.seed),
            "retry.max_halvings" => {
                cfg.max_halvings = parse_value(key, raw, p).unwrap_or(cfg.max_halvings)
            }
            "probe.samples" => cfg.probe_samples = parse_value(key, raw, p).unwrap_or(cfg.probe_samples),
            "probe.t0" => cfg.probe_t0 = parse_value(key, raw, p).unwrap_or(cfg.probe_t0),
            "probe.substeps" => {
                cfg.probe_substeps = parse_value(key, raw, p).unwrap_or(cfg.probe_substeps)
            }
            "probe.ball_radius" => {
                cfg.probe_ball_radius = parse_value(key, raw, p).unwrap_or(cfg.probe_ball_radius)
            }
            "probe.n_iter" => cfg.probe_n_iter = parse_value(key, raw, p).unwrap_or(cfg.probe_n_iter),
            "probe.hardy_dim" => cfg.hardy_dim = parse_value(key, raw, p).unwrap_or(cfg.hardy_dim),
            "probe.hardy_n" => cfg.hardy_n = parse_value(key, raw, p).unwrap_or(cfg.hardy_n),
            "verify.levels" => {
                cfg.verify_levels = parse_value(key, raw, p).unwrap_or(cfg.verify_levels)
            }
            other => {
                return Err(Error::ConfigParse {
                    line: *line,
                    msg: format!("unknown key '{other}'"),
                })
            }
        }
    }

    for required in ["grid.dim", "grid.x.min", "grid.x.max", "grid.x.n", "stepper.dt", "stepper.t_final"] {
        if !seen.contains(required) {
            problems.push(format!("{required}: required key missing"));
        }
    }
    cfg.validate_into(&mut problems);
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(problems))
    }
}

/// Parse a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config_str(&text)
}

impl RunConfig {
    fn validate_into(&self, problems: &mut Vec<String>) {
        if self.dim != 1 && self.dim != 2 {
            problems.push(format!("grid.dim: must be 1 or 2, got {}", self.dim));
            return;
        }
        if !(self.x_min < self.x_max) {
            problems.push(format!(
                "grid.x: need min < max, got [{}, {}]",
                self.x_min, self.x_max
            ));
        }
        if self.x_n < 4 {
            problems.push(format!("grid.x.n: need at least 4 nodes, got {}", self.x_n));
        }
        if self.dim == 2 {
            if !(self.y_min < self.y_max) {
                problems.push(format!(
                    "grid.y: need min < max, got [{}, {}]",
                    self.y_min, self.y_max
                ));
            }
            if self.y_n < 4 {
                problems.push(format!("grid.y.n: need at least 4 nodes, got {}", self.y_n));
            }
        }
        if self.kernel_family == KernelFamily::Coulomb && self.dim != 2 {
            problems.push("kernel.family: coulomb requires dim=2".into());
        }
        if self.kernel_family == KernelFamily::Softened && !(self.soften_a > 0.0) {
            problems.push(format!(
                "kernel.soften_a: softened kernel needs a positive softening length, got {}",
                self.soften_a
            ));
        }
        if self.coupling < 0.0 {
            problems.push(format!("kernel.coupling: must be nonnegative, got {}", self.coupling));
        }
        if !(self.t0 < self.t1) {
            problems.push(format!(
                "boundary window: need t0 < t1, got [{}, {}]",
                self.t0, self.t1
            ));
        }
        match self.profile.as_str() {
            "uniform" => {}
            "left" | "right" | "both" if self.dim == 1 => {}
            "left" | "right" | "both" => {
                problems.push(format!("boundary.profile: '{}' requires dim=1", self.profile))
            }
            "face_bump" if self.dim == 2 => {
                if !matches!(self.face.as_str(), "xmin" | "xmax" | "ymin" | "ymax") {
                    problems.push(format!("boundary.face: unknown face '{}'", self.face));
                }
                if !(self.width_frac > 0.0)
                    || self.center_frac - self.width_frac / 2.0 <= 0.0
                    || self.center_frac + self.width_frac / 2.0 >= 1.0
                {
                    problems.push(
                        "boundary.center_frac/width_frac: bump support must lie strictly inside the face"
                            .into(),
                    );
                }
            }
            "face_bump" => problems.push("boundary.profile: face_bump requires dim=2".into()),
            other => problems.push(format!("boundary.profile: unknown profile '{other}'")),
        }
        if !(self.ic_width > 0.0) {
            problems.push(format!("ic.width: must be positive, got {}", self.ic_width));
        }
        if !(self.compat_tol > 0.0) {
            problems.push(format!("ic.compat_tol: must be positive, got {}", self.compat_tol));
        }
        if !(self.dt > 0.0) {
            problems.push(format!("stepper.dt: must be positive, got {}", self.dt));
        }
        if !(self.t_final > 0.0) {
            problems.push(format!(
                "stepper.t_final: must be positive, got {}",
                self.t_final
            ));
        }
        if !(self.picard_tol > 0.0) {
            problems.push(format!(
                "stepper.picard_tol: must be positive, got {}",
                self.picard_tol
            ));
        }
        if self.max_iters < 2 {
            problems.push(format!(
                "stepper.max_iters: must be at least 2, got {}",
                self.max_iters
            ));
        }
        if self.cadence == 0 {
            problems.push("diagnostics.cadence: must be at least 1".into());
        }
        if self.probe_substeps == 0 || self.probe_n_iter == 0 {
            problems.push("probe.substeps and probe.n_iter must be at least 1".into());
        }
        if !(self.probe_t0 > 0.0) {
            problems.push(format!("probe.t0: must be positive, got {}", self.probe_t0));
        }
        if self.hardy_dim != 2 && self.hardy_dim != 3 {
            problems.push(format!("probe.hardy_dim: must be 2 or 3, got {}", self.hardy_dim));
        }
        if self.hardy_n < 4 {
            problems.push(format!("probe.hardy_n: need at least 4 nodes, got {}", self.hardy_n));
        }
        if self.verify_levels < 2 {
            problems.push(format!(
                "verify.levels: need at least 2 levels, got {}",
                self.verify_levels
            ));
        }
    }

    /// Serialize back to the flat key = value format. `parse(emit(c)) = c`
    /// for every valid config: floats print as shortest round-trip decimals.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("grid.dim", self.dim.to_string());
        kv("grid.x.min", self.x_min.to_string());
        kv("grid.x.max", self.x_max.to_string());
        kv("grid.x.n", self.x_n.to_string());
        if self.dim == 2 {
            kv("grid.y.min", self.y_min.to_string());
            kv("grid.y.max", self.y_max.to_string());
            kv("grid.y.n", self.y_n.to_string());
        }
        kv(
            "kernel.family",
            match self.kernel_family {
                KernelFamily::Coulomb => "coulomb".into(),
                KernelFamily::Softened => "softened".into(),
            },
        );
        kv("kernel.soften_a", self.soften_a.to_string());
        kv(
            "kernel.backend",
            match self.backend {
                Backend::Direct => "direct".into(),
                Backend::Fast => "fast".into(),
            },
        );
        kv("kernel.coupling", self.coupling.to_string());
        kv("boundary.amplitude", self.amplitude.to_string());
        kv("boundary.t0", self.t0.to_string());
        kv("boundary.t1", self.t1.to_string());
        kv("boundary.profile", self.profile.clone());
        if self.profile == "face_bump" {
            kv("boundary.face", self.face.clone());
            kv("boundary.center_frac", self.center_frac.to_string());
            kv("boundary.width_frac", self.width_frac.to_string());
        }
        kv(
            "ic.kind",
            match self.ic_kind {
                IcKind::Zero => "zero".into(),
                IcKind::Gaussian => "gaussian".into(),
                IcKind::LiftPlusBump => "lift_plus_bump".into(),
            },
        );
        kv("ic.center_x", self.ic_center_x.to_string());
        kv("ic.center_y", self.ic_center_y.to_string());
        kv("ic.width", self.ic_width.to_string());
        kv("ic.amplitude", self.ic_amplitude.to_string());
        kv("ic.compat_tol", self.compat_tol.to_string());
        kv("stepper.dt", self.dt.to_string());
        kv("stepper.t_final", self.t_final.to_string());
        kv("stepper.picard_tol", self.picard_tol.to_string());
        kv("stepper.max_iters", self.max_iters.to_string());
        kv("diagnostics.cadence", self.cadence.to_string());
        kv("output.dir", self.out_dir.clone());
        kv(
            "output.format",
            match self.format {
                OutputFormat::Csv => "csv".into(),
                OutputFormat::Json => "json".into(),
            },
        );
        kv("rng.seed", self.seed.to_string());
        kv("retry.max_halvings", self.max_halvings.to_string());
        kv("probe.samples", self.probe_samples.to_string());
        kv("probe.t0", self.probe_t0.to_string());
        kv("probe.substeps", self.probe_substeps.to_string());
        kv("probe.ball_radius", self.probe_ball_radius.to_string());
        kv("probe.n_iter", self.probe_n_iter.to_string());
        kv("probe.hardy_dim", self.hardy_dim.to_string());
        kv("probe.hardy_n", self.hardy_n.to_string());
        kv("verify.levels", self.verify_levels.to_string());
        s
    }

    /// Config echo for the JSON summary.
    pub fn as_key_value_map(&self) -> BTreeMap<String, String> {
        self.emit()
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    pub fn grid(&self) -> Result<Grid> {
        if self.dim == 1 {
            build_grid(1, &[(self.x_min, self.x_max)], &[self.x_n])
        } else {
            build_grid(
                2,
                &[(self.x_min, self.x_max), (self.y_min, self.y_max)],
                &[self.x_n, self.y_n],
            )
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec {
            family: self.kernel_family,
            soften_a: self.soften_a,
            backend: self.backend,
            coupling: self.coupling,
        }
    }

    pub fn boundary_data(&self, grid: &Grid) -> Result<BoundaryData> {
        let profile = match self.profile.as_str() {
            "uniform" => BoundaryProfile::Uniform,
            "left" => BoundaryProfile::Left,
            "right" => BoundaryProfile::Right,
            "both" => BoundaryProfile::Both,
            "face_bump" => BoundaryProfile::FaceBump {
                face: match self.face.as_str() {
                    "xmin" => Face::XMin,
                    "xmax" => Face::XMax,
                    "ymin" => Face::YMin,
                    _ => Face::YMax,
                },
                center_frac: self.center_frac,
                width_frac: self.width_frac,
            },
            other => {
                return Err(Error::Config(vec![format!(
                    "boundary.profile: unknown profile '{other}'"
                )]))
            }
        };
        BoundaryData::new(grid, self.amplitude, (self.t0, self.t1), profile)
    }

    /// Build the initial field from the selector.
    pub fn initial_condition(&self, grid: &Grid, bd: &BoundaryData) -> Result<ComplexField> {
        match self.ic_kind {
            IcKind::Zero => Ok(ComplexField::zeros(grid)),
            IcKind::Gaussian => {
                let (cx, cy, w2) = (self.ic_center_x, self.ic_center_y, self.ic_width.powi(2));
                let amp = self.ic_amplitude;
                let dim = grid.dim();
                Ok(ComplexField::from_fn(grid, move |x| {
                    let mut r2 = (x[0] - cx).powi(2);
                    if dim == 2 {
                        r2 += (x[1] - cy).powi(2);
                    }
                    Complex64::new(amp * (-r2 / (2.0 * w2)).exp(), 0.0)
                }))
            }
            IcKind::LiftPlusBump => {
                let lift_op = HarmonicLift::new(grid)?;
                let lifted = lift_op.lift_trace(grid, &bd.trace(grid, 0.0)?)?;
                let ext = grid.extents();
                let amp = self.ic_amplitude;
                let dim = grid.dim();
                let bump = ComplexField::from_fn(grid, move |x| {
                    let mut v = bump_c3((x[0] - ext[0].0) / (ext[0].1 - ext[0].0));
                    if dim == 2 {
                        v *= bump_c3((x[1] - ext[1].0) / (ext[1].1 - ext[1].0));
                    }
                    Complex64::new(amp * v, 0.0)
                });
                Ok(lifted.add(&bump))
            }
        }
    }

    /// Assemble everything `solve` needs.
    pub fn solve_inputs(&self) -> Result<SolveInputs> {
        let grid = self.grid()?;
        let kernel = self.kernel();
        kernel.validate(grid.dim())?;
        let bd = self.boundary_data(&grid)?;
        let phi = self.initial_condition(&grid, &bd)?;
        let mut inputs = SolveInputs::new(
            grid,
            kernel,
            bd,
            phi,
            StepperConfig {
                dt: self.dt,
                picard_tol: self.picard_tol,
                max_iters: self.max_iters,
            },
            self.t_final,
        );
        inputs.cadence = self.cadence;
        inputs.compat_tol = self.compat_tol;
        Ok(inputs)
    }
}
