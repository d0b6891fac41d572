use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hartree_bvp::app::{self, emit, OutputFormat, RunConfig};
use hartree_bvp::Error;

/// Hartree equation solver with Dirichlet forcing and identity diagnostics.
#[derive(Parser)]
#[command(name = "hartree-bvp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the time integration and emit diagnostics plus a summary.
    Solve(CommonArgs),
    /// Refinement study: solve at successively halved (dx, dt) and report
    /// observed convergence orders per identity.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of refinement levels (overrides verify.levels).
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Max Lipschitz ratio of the nonlinearity over seeded random pairs.
    ProbeLipschitz(CommonArgs),
    /// Successive-difference factors of the fixed-point map on one window.
    ProbeContraction(CommonArgs),
    /// Max discrete Hardy quotient over seeded boundary-vanishing fields.
    ProbeHardy(CommonArgs),
    /// DIRECT vs FAST convolution agreement and timings.
    BenchConvolution(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the key = value config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Diagnostics format (overrides output.format).
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Seed for probe sampling (overrides rng.seed).
    #[arg(long)]
    seed: Option<u64>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::ConfigParse { .. } | Error::Kernel(_) => 1,
        Error::Io { .. } => 3,
        _ => 2,
    }
}

fn load_config(args: &CommonArgs) -> Result<(RunConfig, PathBuf), Error> {
    let mut cfg = app::parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(format) = &args.format {
        cfg.format = if format == "json" {
            OutputFormat::Json
        } else {
            OutputFormat::Csv
        };
    }
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    Ok((cfg, out_dir))
}

fn write_report<T: serde::Serialize>(report: &T, out_dir: &PathBuf, name: &str) -> Result<(), Error> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    emit::write_json(report, &out_dir.join(name))
}

fn run() -> Result<(), Error> {
    match Cli::parse().command {
        Command::Solve(args) => {
            let (cfg, out_dir) = load_config(&args)?;
            match app::run_solve(&cfg) {
                Ok(artifacts) => {
                    app::write_solve_artifacts(&artifacts, &out_dir, cfg.format)?;
                    println!(
                        "solve: {} steps, {} rows, J(T) = {:.6e}, max H1 = {:.6e}, retries = {}",
                        artifacts.summary.steps,
                        artifacts.summary.rows,
                        artifacts.summary.j_final,
                        artifacts.summary.h1_norm_max,
                        artifacts.summary.retries.len()
                    );
                    Ok(())
                }
                Err((err, artifacts)) => {
                    // flush whatever completed, marked as truncated
                    app::write_solve_artifacts(&artifacts, &out_dir, cfg.format)?;
                    eprintln!("solve stopped early: {err}");
                    Err(err)
                }
            }
        }
        Command::Verify { common, levels } => {
            let (cfg, out_dir) = load_config(&common)?;
            let levels = levels.unwrap_or(cfg.verify_levels);
            let report = app::run_verify(&cfg, levels)?;
            for level in &report.levels {
                println!(
                    "level {}: h = {:.4e}, dt = {:.4e}, max residuals: mass {:.4e}, energy {:.4e}, virial {:.4e}",
                    level.level, level.h, level.dt, level.mass_res, level.energy_res, level.virial_res
                );
            }
            println!(
                "mean observed orders: mass {:.3}, energy {:.3}, virial {:.3}",
                report.mass_mean_order, report.energy_mean_order, report.virial_mean_order
            );
            write_report(&report, &out_dir, "verify.json")
        }
        Command::ProbeLipschitz(args) => {
            let (cfg, out_dir) = load_config(&args)?;
            let report = app::run_probe_lipschitz(&cfg)?;
            println!(
                "lipschitz: max ratio {:.6} at n = {}, {:.6} at n = {} (shift {:.2}%)",
                report.max_ratio,
                report.coarse_n,
                report.max_ratio_refined,
                report.fine_n,
                100.0 * report.relative_shift
            );
            write_report(&report, &out_dir, "probe_lipschitz.json")
        }
        Command::ProbeContraction(args) => {
            let (cfg, out_dir) = load_config(&args)?;
            let report = app::run_probe_contraction(&cfg)?;
            println!(
                "contraction: factor {:.4} on T0 = {}, {:.4} on T0/2 (ratio {:.3})",
                report.factor_est, report.t0, report.factor_est_half_window, report.halving_ratio
            );
            write_report(&report, &out_dir, "probe_contraction.json")
        }
        Command::ProbeHardy(args) => {
            let (cfg, out_dir) = load_config(&args)?;
            let report = app::run_probe_hardy(&cfg)?;
            println!(
                "hardy: max quotient {:.4} over {} samples on {}^{} nodes",
                report.max_quotient, report.samples, report.nodes_per_axis, report.dim_embed
            );
            write_report(&report, &out_dir, "probe_hardy.json")
        }
        Command::BenchConvolution(args) => {
            let (cfg, out_dir) = load_config(&args)?;
            let report = app::run_bench_convolution(&cfg)?;
            println!(
                "convolution at n = {}: agreement {:.3e}, direct {:.3e}s, fast {:.3e}s, speedup {:.1}x",
                report.nodes,
                report.max_rel_disagreement,
                report.direct_seconds,
                report.fast_seconds,
                report.speedup
            );
            write_report(&report, &out_dir, "bench_convolution.json")
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
