//! Simulated cell, episode runner and reports.

mod config;
mod metrics;
mod report;
mod sim;

pub use config::{
    load_config, BinPlacement, CameraConfig, FaultConfig, LinkConfig, PlacementConfig, RunConfig, SceneConfig,
    TimingConfig,
};
pub use metrics::{aggregate, compute_metrics, failure_labels, parse_log, LatencyStats, MetricsSummary, StageBreakdown};
pub use report::{run_episode, run_episode_full, run_episodes, EpisodeReport, EpisodeRun, RunReport, REPORT_NOTE};
pub use sim::{CellSim, PickRecord, StopReason, INPAINT_BULGE, MERGED_BOXES, MISSED_DETECTION};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error("invalid config value for {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown config key (line {line:?}): {message}")]
    UnknownKey { line: Option<usize>, message: String },
    #[error("config parse error (line {line:?}): {message}")]
    Parse { line: Option<usize>, message: String },
    #[error("io: {0}")]
    Io(String),
    #[error("malformed transition log line {line}: {message}")]
    MalformedLog { line: usize, message: String },
    #[error("scene: {0}")]
    Scene(String),
}
