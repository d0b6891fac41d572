//! Configuration, run orchestration and output emission.

pub mod config;
pub mod emit;
pub mod run;

pub use config::{parse_config, parse_config_str, IcKind, OutputFormat, RunConfig};
pub use run::{
    run_bench_convolution, run_probe_contraction, run_probe_hardy, run_probe_lipschitz, run_solve,
    run_verify, write_solve_artifacts, RunSummary, SolveArtifacts,
};
