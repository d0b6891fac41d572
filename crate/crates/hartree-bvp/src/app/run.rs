//! Run orchestration: the dt-halving retry policy, command drivers and the
//! summary report.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::diagnostics::{
    self, apriori_inequality_check, apriori_series, calibrate_apriori, calibrate_gronwall,
    refinement_study, AprioriConstants, DiagnosticsRow, GronwallConstants, RefinementReport,
};
use crate::domain::{build_grid, build_xi_field, ComplexField};
use crate::error::{Error, Result};
use crate::kernel::{
    hardy_max_quotient, hartree_potential, lipschitz_max_ratio, KernelSpec,
};
use crate::stepper::{self, SolveInputs, SolverState, StepperConfig};

use super::config::{OutputFormat, RunConfig};
use super::emit;

/// One recovered Picard failure: the step index and how many halvings the
/// window needed.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RetryEvent {
    pub step: usize,
    pub halvings: usize,
}

/// March outcome; `error` is set when the run stopped early (partial states
/// are still returned so the CSV can be flushed with a truncation marker).
struct March {
    states: Vec<SolverState>,
    retries: Vec<RetryEvent>,
    error: Option<Error>,
}

/// Step from 0 to `t_final`, halving dt on the failing window (up to
/// `max_halvings`) and resuming at the original dt afterwards.
fn march_with_retry(inputs: &SolveInputs, max_halvings: usize) -> Result<March> {
    let grid = &inputs.grid;
    inputs.cfg.validate()?;
    inputs.kernel.validate(grid.dim())?;
    let compat =
        crate::lifting::validate_compatibility(&inputs.phi, &inputs.bd, grid, inputs.compat_tol)?;
    if !compat.pass {
        return Err(Error::Config(vec![format!(
            "initial datum violates the trace compatibility condition: mismatch {:.3e} > {:.3e}",
            compat.max_mismatch, compat.tol
        )]));
    }

    let n_steps = (inputs.t_final / inputs.cfg.dt).round() as usize;
    let mut u0 = inputs.phi.clone();
    let trace0 = inputs.bd.trace(grid, 0.0)?;
    for (slot, &node) in grid.boundary_idx().iter().enumerate() {
        u0.values[node] = trace0.values[slot];
    }
    let mut states = vec![SolverState::initial(u0, 0.0)];
    let mut retries = Vec::new();
    for s in 0..n_steps {
        match stepper::step(&states[s], &inputs.cfg, &inputs.bd, grid, &inputs.kernel) {
            Ok(next) => states.push(next),
            Err(Error::PicardDivergence { .. }) => {
                // re-run the failing window with 2^k substeps of dt / 2^k
                let mut recovered = None;
                'halving: for k in 1..=max_halvings {
                    let sub = StepperConfig {
                        dt: inputs.cfg.dt / (1 << k) as f64,
                        ..inputs.cfg
                    };
                    let mut cursor = states[s].clone();
                    let mut worst_iters = 0usize;
                    for _ in 0..(1 << k) {
                        match stepper::step(&cursor, &sub, &inputs.bd, grid, &inputs.kernel) {
                            Ok(next) => {
                                worst_iters = worst_iters.max(next.picard_iters);
                                cursor = next;
                            }
                            Err(Error::PicardDivergence { .. }) => continue 'halving,
                            Err(other) => return Err(other),
                        }
                    }
                    cursor.t = states[s].t + inputs.cfg.dt; // window end, no drift
                    cursor.picard_iters = worst_iters;
                    retries.push(RetryEvent {
                        step: s + 1,
                        halvings: k,
                    });
                    recovered = Some(cursor);
                    break;
                }
                match recovered {
                    Some(state) => states.push(state),
                    None => {
                        return Ok(March {
                            states,
                            retries,
                            error: Some(Error::PicardDivergence {
                                step: s + 1,
                                iters: inputs.cfg.max_iters,
                                last_ratio: f64::NAN,
                            }),
                        })
                    }
                }
            }
            Err(other) => return Err(other),
        }
    }
    Ok(March {
        states,
        retries,
        error: None,
    })
}

/// Frozen calibration constants and the check verdicts, as emitted in the
/// summary metadata.
#[derive(Clone, Debug, Serialize)]
pub struct AprioriSummary {
    pub constants: AprioriConstants,
    pub gronwall: GronwallConstants,
    pub pass: bool,
    pub worst_margin: f64,
}

/// The JSON summary written next to the diagnostics output.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub config: BTreeMap<String, String>,
    pub steps: usize,
    pub rows: usize,
    pub wall_time_s: f64,
    pub retries: Vec<RetryEvent>,
    pub picard_max_iters: usize,
    pub contraction_est_max: f64,
    pub h1_norm_max: f64,
    pub j_final: f64,
    pub mass_initial: f64,
    pub mass_final: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub apriori: Option<AprioriSummary>,
    pub truncated: Option<String>,
}

/// Output of the `solve` command before it is written to disk.
#[derive(Debug)]
pub struct SolveArtifacts {
    pub rows: Vec<DiagnosticsRow>,
    pub summary: RunSummary,
}

/// Full `solve` pipeline: march (with retries), evaluate diagnostics,
/// self-calibrate the a priori constants and assemble the summary. A solver
/// failure still yields artifacts (flushed with a truncation marker) plus
/// the error.
pub fn run_solve(cfg: &RunConfig) -> std::result::Result<SolveArtifacts, (Error, SolveArtifacts)> {
    let started = Instant::now();
    let inputs = match cfg.solve_inputs() {
        Ok(i) => i,
        Err(e) => {
            return Err((
                e,
                SolveArtifacts {
                    rows: Vec::new(),
                    summary: empty_summary(cfg),
                },
            ))
        }
    };
    let march = match march_with_retry(&inputs, cfg.max_halvings) {
        Ok(m) => m,
        Err(e) => {
            return Err((
                e,
                SolveArtifacts {
                    rows: Vec::new(),
                    summary: empty_summary(cfg),
                },
            ))
        }
    };

    let grid = &inputs.grid;
    let xi = build_xi_field(grid);
    let traj: Vec<(f64, &ComplexField, usize, f64)> = march
        .states
        .iter()
        .map(|s| (s.t, &s.u, s.picard_iters, s.contraction_est))
        .collect();
    let rows = match diagnostics::rows_for_trajectory(&traj, &inputs.bd, grid, &inputs.kernel, &xi, inputs.cadence)
    {
        Ok(r) => r,
        Err(e) => {
            return Err((
                e,
                SolveArtifacts {
                    rows: Vec::new(),
                    summary: empty_summary(cfg),
                },
            ))
        }
    };

    let build = |rows: Vec<DiagnosticsRow>, truncated: Option<String>| -> SolveArtifacts {
        let times: Vec<f64> = march.states.iter().map(|s| s.t).collect();
        let fields: Vec<&ComplexField> = march.states.iter().map(|s| &s.u).collect();
        let apriori = apriori_series(&times, &fields, &inputs.bd, grid, &xi)
            .ok()
            .map(|series| {
                let constants = calibrate_apriori(&series, 2.0);
                let gron = calibrate_gronwall(&series, 2.0);
                let check = apriori_inequality_check(&series, &constants);
                AprioriSummary {
                    constants,
                    gronwall: gron,
                    pass: check.pass,
                    worst_margin: check.worst_margin,
                }
            });
        let first = march.states.first();
        let last = march.states.last();
        let mass_of = |s: Option<&SolverState>| {
            s.and_then(|s| diagnostics::mass(&s.u, grid).ok()).unwrap_or(0.0)
        };
        let energy_of = |s: Option<&SolverState>| {
            s.and_then(|s| diagnostics::energy(&s.u, grid, &inputs.kernel).ok())
                .unwrap_or(0.0)
        };
        let summary = RunSummary {
            config: cfg.as_key_value_map(),
            steps: march.states.len().saturating_sub(1),
            rows: rows.len(),
            wall_time_s: started.elapsed().as_secs_f64(),
            retries: march.retries.clone(),
            picard_max_iters: march.states.iter().map(|s| s.picard_iters).max().unwrap_or(0),
            contraction_est_max: march
                .states
                .iter()
                .map(|s| s.contraction_est)
                .fold(0.0, f64::max),
            h1_norm_max: rows.iter().map(|r| r.h1_norm).fold(0.0, f64::max),
            j_final: rows.last().map(|r| r.j_cum).unwrap_or(0.0),
            mass_initial: mass_of(first),
            mass_final: mass_of(last),
            energy_initial: energy_of(first),
            energy_final: energy_of(last),
            apriori,
            truncated,
        };
        SolveArtifacts { rows, summary }
    };

    match march.error {
        None => Ok(build(rows, None)),
        Some(e) => {
            let artifacts = build(rows, Some(e.to_string()));
            Err((e, artifacts))
        }
    }
}

fn empty_summary(cfg: &RunConfig) -> RunSummary {
    RunSummary {
        config: cfg.as_key_value_map(),
        steps: 0,
        rows: 0,
        wall_time_s: 0.0,
        retries: Vec::new(),
        picard_max_iters: 0,
        contraction_est_max: 0.0,
        h1_norm_max: 0.0,
        j_final: 0.0,
        mass_initial: 0.0,
        mass_final: 0.0,
        energy_initial: 0.0,
        energy_final: 0.0,
        apriori: None,
        truncated: None,
    }
}

/// Write solve artifacts to the output directory.
pub fn write_solve_artifacts(
    artifacts: &SolveArtifacts,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    match format {
        OutputFormat::Csv => emit::write_csv(
            &artifacts.rows,
            &out_dir.join("diagnostics.csv"),
            artifacts.summary.truncated.as_deref(),
        )?,
        OutputFormat::Json => {
            emit::write_json_rows(&artifacts.rows, &out_dir.join("diagnostics.json"))?
        }
    }
    emit::write_json(&artifacts.summary, &out_dir.join("summary.json"))
}

/// Build the refinement level for `verify`: level `l` runs `2^l` times finer
/// in both dx (nested nodes: `n -> 2n - 1`) and dt.
pub fn level_inputs(cfg: &RunConfig, level: usize) -> Result<SolveInputs> {
    let mut scaled = cfg.clone();
    let factor = 1usize << level;
    scaled.x_n = cfg.x_n * factor - (factor - 1);
    if cfg.dim == 2 {
        scaled.y_n = cfg.y_n * factor - (factor - 1);
    }
    scaled.dt = cfg.dt / factor as f64;
    scaled.solve_inputs()
}

/// The `verify` command: a refinement study over `levels` simultaneous
/// (dx, dt) halvings of the configured run.
pub fn run_verify(cfg: &RunConfig, levels: usize) -> Result<RefinementReport> {
    refinement_study(&|level| level_inputs(cfg, level), levels)
}

/// Lipschitz probe report: max ratio at the configured resolution and at the
/// nested refinement (same seed, same continuum fields).
#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub samples: usize,
    pub seed: u64,
    pub coarse_n: usize,
    pub fine_n: usize,
    pub max_ratio: f64,
    pub max_ratio_refined: f64,
    pub relative_shift: f64,
}

pub fn run_probe_lipschitz(cfg: &RunConfig) -> Result<LipschitzReport> {
    let grid = cfg.grid()?;
    let kernel = cfg.kernel();
    let coarse = lipschitz_max_ratio(&grid, &kernel, cfg.probe_samples, cfg.seed)?;
    let fine_n = cfg.x_n * 2 - 1;
    let fine_grid = if cfg.dim == 1 {
        build_grid(1, &[(cfg.x_min, cfg.x_max)], &[fine_n])?
    } else {
        build_grid(
            2,
            &[(cfg.x_min, cfg.x_max), (cfg.y_min, cfg.y_max)],
            &[fine_n, cfg.y_n * 2 - 1],
        )?
    };
    let fine = lipschitz_max_ratio(&fine_grid, &kernel, cfg.probe_samples, cfg.seed)?;
    Ok(LipschitzReport {
        samples: cfg.probe_samples,
        seed: cfg.seed,
        coarse_n: cfg.x_n,
        fine_n,
        max_ratio: coarse,
        max_ratio_refined: fine,
        relative_shift: (fine - coarse).abs() / coarse.max(f64::MIN_POSITIVE),
    })
}

/// Contraction probe report, including the halved-window factor so the
/// linear-in-T0 prediction is visible in the artifact.
#[derive(Clone, Debug, Serialize)]
pub struct ContractionCliReport {
    pub t0: f64,
    pub substeps: usize,
    pub ball_radius: f64,
    pub factor_est: f64,
    pub factors: Vec<f64>,
    pub factor_est_half_window: f64,
    pub halving_ratio: f64,
    pub sup_h1: f64,
}

pub fn run_probe_contraction(cfg: &RunConfig) -> Result<ContractionCliReport> {
    let inputs = cfg.solve_inputs()?;
    let mut psi = inputs.phi.clone();
    for &b in inputs.grid.boundary_idx() {
        psi.values[b] = num_complex::Complex64::new(0.0, 0.0);
    }
    let full = stepper::contraction_probe(
        &psi,
        &inputs.bd,
        &inputs.grid,
        &inputs.kernel,
        cfg.probe_t0,
        cfg.probe_substeps,
        cfg.probe_ball_radius,
        cfg.probe_n_iter,
    )?;
    let half = stepper::contraction_probe(
        &psi,
        &inputs.bd,
        &inputs.grid,
        &inputs.kernel,
        cfg.probe_t0 / 2.0,
        cfg.probe_substeps,
        cfg.probe_ball_radius,
        cfg.probe_n_iter,
    )?;
    Ok(ContractionCliReport {
        t0: cfg.probe_t0,
        substeps: cfg.probe_substeps,
        ball_radius: cfg.probe_ball_radius,
        factor_est: full.factor_est,
        factors: full.factors.clone(),
        factor_est_half_window: half.factor_est,
        halving_ratio: if full.factor_est > 0.0 {
            half.factor_est / full.factor_est
        } else {
            0.0
        },
        sup_h1: full.sup_h1,
    })
}

/// Hardy probe report.
#[derive(Clone, Debug, Serialize)]
pub struct HardyReport {
    pub dim_embed: usize,
    pub nodes_per_axis: usize,
    pub samples: usize,
    pub seed: u64,
    pub max_quotient: f64,
    /// Sharp continuum constant `4/(d-2)^2` for d = 3; infinite for d = 2
    /// where no such inequality holds.
    pub continuum_constant: f64,
}

pub fn run_probe_hardy(cfg: &RunConfig) -> Result<HardyReport> {
    let max_quotient = hardy_max_quotient(cfg.hardy_dim, cfg.hardy_n, cfg.probe_samples, cfg.seed)?;
    Ok(HardyReport {
        dim_embed: cfg.hardy_dim,
        nodes_per_axis: cfg.hardy_n,
        samples: cfg.probe_samples,
        seed: cfg.seed,
        max_quotient,
        continuum_constant: if cfg.hardy_dim == 3 { 4.0 } else { f64::INFINITY },
    })
}

/// Backend agreement and timing report.
#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub nodes: usize,
    pub repeats: usize,
    pub max_rel_disagreement: f64,
    pub direct_seconds: f64,
    pub fast_seconds: f64,
    pub speedup: f64,
}

pub fn run_bench_convolution(cfg: &RunConfig) -> Result<BenchReport> {
    use crate::kernel::sampling::smooth_random_field;
    use rand::SeedableRng;
    let grid = cfg.grid()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let u = smooth_random_field(&grid, &mut rng, 8);
    let direct_spec = KernelSpec {
        backend: crate::kernel::Backend::Direct,
        ..cfg.kernel()
    };
    let fast_spec = KernelSpec {
        backend: crate::kernel::Backend::Fast,
        ..cfg.kernel()
    };

    let fd = hartree_potential(&u, &grid, &direct_spec)?;
    let ff = hartree_potential(&u, &grid, &fast_spec)?;
    let denom = fd.values.iter().cloned().fold(0.0f64, f64::max);
    let max_rel = fd
        .values
        .iter()
        .zip(&ff.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max)
        / denom.max(f64::MIN_POSITIVE);

    let repeats = 5usize;
    let time_of = |spec: &KernelSpec| -> Result<f64> {
        let mut best = f64::INFINITY;
        for _ in 0..repeats {
            let t = Instant::now();
            let _ = hartree_potential(&u, &grid, spec)?;
            best = best.min(t.elapsed().as_secs_f64());
        }
        Ok(best)
    };
    // warm the FFT plan cache so planning is not billed to the first repeat
    let _ = hartree_potential(&u, &grid, &fast_spec)?;
    let direct_seconds = time_of(&direct_spec)?;
    let fast_seconds = time_of(&fast_spec)?;
    Ok(BenchReport {
        nodes: grid.node_count(),
        repeats,
        max_rel_disagreement: max_rel,
        direct_seconds,
        fast_seconds,
        speedup: direct_seconds / fast_seconds,
    })
}
