//! Experiment plumbing: config files, agent specs, seeded replications,
//! smoothing and CSV/JSON output.

mod config;
mod factory;
mod metrics;
mod output;
mod run;
mod spec;

pub use config::{
    parse_seeds, substitute, ConfigFile, EnvId, EnvSpec, ExperimentConfig, SweepAxis,
};
pub use factory::{build_agent, build_env, Seat, DEFAULT_SMOOTHER_BETA};
pub use metrics::{mean, median, moving_average, reward_series, tail_means};
pub use output::{read_csv, read_csv_from, write_csv, write_csv_to, write_snapshots};
pub use run::{component_rng, run, Replication, RunOutput, RunRecord, Snapshot};
pub use spec::AgentSpec;
