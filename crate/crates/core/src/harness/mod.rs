//! Experiment orchestration: configurations and presets, simulated and
//! exact rate experiments with bound evaluation, condition diagnostics,
//! appendix fuzzing and merged reports.

mod appendix;
mod config;
mod diagnose;
mod presets;
mod report;
mod run;

pub use appendix::{check_appendix, AppendixReport};
pub use config::{ExperimentConfig, Target};
pub use diagnose::{diagnose_conditions, theta_pairs, DiagnosticsReport, SeriesColumn};
pub use presets::Preset;
pub use report::{merge_reports, read_manifest, MergedReport, MergedRow};
pub use run::{
    bootstrap_seed, ks_pmf_gauss, run, sample_stats, seed_for_n, Failure, ResultRow, RunManifest, SampleStats,
    SeedLog, StageTime, SCHEMA_VERSION,
};
