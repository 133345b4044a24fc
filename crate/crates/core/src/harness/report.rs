use super::config::RunConfig;
use super::metrics::{aggregate, compute_metrics, MetricsSummary};
use super::sim::{CellSim, PickRecord, StopReason, MISSED_DETECTION};
use super::HarnessError;
use crate::bus::message::{PickRequestMsg, HmiEvent};
use crate::bus::{BusDump, Message};
use crate::canonical::to_canonical_string;
use crate::controller::{CellState, TransitionRecord};
use serde::{Deserialize, Serialize};

pub const REPORT_NOTE: &str = "stage compute costs (capture, preprocess, detect, grasp) are emulated clock charges \
taken from the config, not measured inference; all times are simulated";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub note: String,
    pub config_hash: String,
    pub seed: u64,
    pub stop_reason: Option<StopReason>,
    pub final_state: String,
    /// Component fault description, if any.
    pub fault: Option<String>,
    pub metrics: MetricsSummary,
    /// File name of the NDJSON transition log, when one was written.
    pub transition_log: Option<String>,
    pub picks: Vec<PickRecord>,
    pub hmi_events: Vec<HmiEvent>,
    pub simulated_ms: f64,
}

impl EpisodeReport {
    pub fn is_faulted(&self) -> bool {
        self.fault.is_some()
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_string(self).expect("report is serializable")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub note: String,
    pub config_hash: String,
    /// The fully resolved configuration.
    pub config: RunConfig,
    pub summary: MetricsSummary,
    pub episodes: Vec<EpisodeReport>,
}

impl RunReport {
    pub fn is_faulted(&self) -> bool {
        self.episodes.iter().any(|e| e.is_faulted())
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_string(self).expect("report is serializable")
    }
}

/// Everything one episode produced.
#[derive(Debug, Clone)]
pub struct EpisodeRun {
    pub report: EpisodeReport,
    pub log: Vec<TransitionRecord>,
    pub busdump: Option<BusDump>,
}

/// Run one headless episode: fresh bin, one pick request, simulated clock
/// until the cell stops.
pub fn run_episode(cfg: &RunConfig, seed: u64) -> Result<EpisodeReport, HarnessError> {
    Ok(run_episode_full(cfg, seed, false)?.report)
}

pub fn run_episode_full(cfg: &RunConfig, seed: u64, busdump: bool) -> Result<EpisodeRun, HarnessError> {
    let mut sim = CellSim::new(cfg.clone(), seed)?;
    if busdump {
        sim.enable_busdump();
    }
    let items = if cfg.request.is_empty() {
        sim.scene_request()
    } else {
        cfg.request.clone()
    };
    sim.submit_from_hmi(Message::PickRequest(PickRequestMsg {
        request_id: seed as u32,
        items,
    }));
    sim.run_to_end();
    Ok(finish(cfg, seed, sim))
}

fn finish(cfg: &RunConfig, seed: u64, sim: CellSim) -> EpisodeRun {
    let log = sim.log().to_vec();
    let mut fault = None;
    let mut metrics = match compute_metrics(&log, sim.picks()) {
        Ok(m) => m,
        Err(e) => {
            fault = Some(e.to_string());
            MetricsSummary::default()
        }
    };
    metrics
        .failure_counts
        .insert(MISSED_DETECTION.to_string(), sim.missed_detections());
    if let Some(f) = sim.plc().controller.fault() {
        fault = Some(format!("controller fault {f:?}"));
    } else if sim.plc().state() == CellState::Halted {
        fault = Some("cell halted".into());
    } else if sim.encode_faults() > 0 {
        fault = Some(format!("{} frames failed to encode", sim.encode_faults()));
    } else if sim.stop_reason() == Some(StopReason::TimeCap) {
        fault = Some("simulated time cap reached".into());
    }
    let report = EpisodeReport {
        note: REPORT_NOTE.into(),
        config_hash: cfg.hash(),
        seed,
        stop_reason: sim.stop_reason(),
        final_state: sim.plc().state().name().into(),
        fault,
        metrics,
        transition_log: None,
        picks: sim.picks().to_vec(),
        hmi_events: sim.hmi_events().to_vec(),
        simulated_ms: sim.now_us() as f64 / 1000.0,
    };
    EpisodeRun {
        report,
        log,
        busdump: sim.busdump().cloned(),
    }
}

/// Episodes `seed, seed + 1, ...` pooled into one report.
pub fn run_episodes(cfg: &RunConfig, seed: u64, episodes: u32) -> Result<RunReport, HarnessError> {
    let reports = (0..episodes as u64)
        .map(|i| run_episode(cfg, seed.wrapping_add(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunReport {
        note: REPORT_NOTE.into(),
        config_hash: cfg.hash(),
        config: cfg.clone(),
        summary: aggregate(reports.iter().map(|r| &r.metrics)),
        episodes: reports,
    })
}
