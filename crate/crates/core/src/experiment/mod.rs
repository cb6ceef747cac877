//! Config-driven experiments: single runs and seed sweeps, fixed-point
//! enumeration, stability suites and rate estimation, each producing
//! self-describing artifacts.
//!
//! Every operation is available both as a pure function returning the
//! artifact contents and as a `cmd_*` function that writes them to an output
//! directory; the command-line runner is a thin shell over the latter.

mod commands;
mod config;

pub use commands::{
    cmd_fixed_points, cmd_rate, cmd_run, cmd_stability, fixed_points_experiment, nearest_fixed_point,
    rate_experiment, read_manifest, run_experiment, stability_experiment, ArtifactMeta, ClusterReport,
    FixedPointsReport, Manifest, RateReport, RunArtifacts, RunSummary, SeedRate, StabilityArtifact,
    EQUIVALENT_AT_LIMIT_KL, MANIFEST_FILE, SCHEMA_FIXED_POINTS, SCHEMA_MANIFEST, SCHEMA_RATE, SCHEMA_SUMMARY,
};
pub use config::{
    parse_config, parse_config_value, AnalysisSpec, BeliefInit, ExperimentConfig, FixedPointSpec, InitSpec,
    RateSpec, SeedSpec, StabilitySpec, StrategyInit, CONFIG_KEYS, DEFAULT_OUTPUT,
};
