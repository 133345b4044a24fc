use super::sim::{PickRecord, INPAINT_BULGE, MERGED_BOXES, MISSED_DETECTION};
use super::HarnessError;
use crate::controller::TransitionRecord;
use crate::scene::FailureReason;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub min_ms: f64,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let pct = |p: f64| s[((p * (s.len() - 1) as f64).round() as usize).min(s.len() - 1)];
        Self {
            count: s.len(),
            min_ms: s[0],
            mean_ms: s.iter().sum::<f64>() / s.len() as f64,
            p50_ms: pct(0.5),
            p95_ms: pct(0.95),
            max_ms: s[s.len() - 1],
        }
    }
}

/// Mean time per pick spent in each perception stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageBreakdown {
    pub capture_ms: f64,
    pub detect_ms: f64,
    pub plan_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub picks_attempted: u64,
    pub picks_succeeded: u64,
    pub success_rate: f64,
    /// Successful grasps that lifted an object of another class than the
    /// selected detection.
    pub wrong_object: u64,
    pub picks_per_hour: f64,
    pub mean_cycle_ms: f64,
    pub cycles_ms: Vec<f64>,
    /// Last camera trigger to the grasp move command, per pick.
    pub latencies_ms: Vec<f64>,
    pub latency: LatencyStats,
    pub failure_counts: BTreeMap<String, u64>,
    pub stages: StageBreakdown,
    /// Per-pick stage times, aligned with `latencies_ms`.
    #[serde(skip)]
    stage_samples: Vec<(f64, f64, f64)>,
}

pub fn failure_labels() -> Vec<&'static str> {
    let mut v: Vec<&str> = FailureReason::ALL.iter().map(|r| r.name()).collect();
    v.extend([MISSED_DETECTION, MERGED_BOXES, INPAINT_BULGE]);
    v
}

fn zeroed_failures() -> BTreeMap<String, u64> {
    failure_labels().into_iter().map(|l| (l.to_string(), 0)).collect()
}

/// Parse an NDJSON transition log.
pub fn parse_log(text: &str) -> Result<Vec<TransitionRecord>, HarnessError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HarnessError::MalformedLog {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn has(r: &TransitionRecord, action: &str) -> bool {
    r.actions.iter().any(|a| a == action)
}

/// Summarize one episode. Cycles run from the request (or the previous
/// cycle end) to each place or empty-gripper verdict.
pub fn compute_metrics(log: &[TransitionRecord], picks: &[PickRecord]) -> Result<MetricsSummary, HarnessError> {
    let mut m = MetricsSummary {
        failure_counts: zeroed_failures(),
        ..Default::default()
    };
    let mut prev_t = f64::NEG_INFINITY;
    let mut cycle_start: Option<f64> = None;
    let (mut trigger, mut frame, mut detected, mut selected, mut planned) = (None, None, None, None, None);
    for (i, r) in log.iter().enumerate() {
        if !r.timestamp_ms.is_finite() || r.timestamp_ms < prev_t {
            return Err(HarnessError::MalformedLog {
                line: i + 1,
                message: format!("timestamp {} goes backwards", r.timestamp_ms),
            });
        }
        prev_t = r.timestamp_ms;
        let t = r.timestamp_ms;
        match r.event.as_str() {
            "RequestReceived" if r.state_from != r.state_to => cycle_start = Some(t),
            "PlaceDone" | "NothingGrasped" if r.state_from != r.state_to => {
                if let Some(s) = cycle_start {
                    m.cycles_ms.push(t - s);
                }
                cycle_start = Some(t);
            }
            "FrameReady" if has(r, "RunDetection") => frame = Some(t),
            "DetectionsReady" if has(r, "SelectObject") => detected = Some(t),
            "ObjectSelected" if has(r, "PlanGrasp") => selected = Some(t),
            "GraspFound" if has(r, "MoveToGrasp") => planned = Some(t),
            _ => {}
        }
        if matches!(r.state_to.as_str(), "Halted" | "Done" | "ReportingUnavailable" | "AwaitRequest") {
            cycle_start = None;
        }
        if has(r, "TriggerCamera") {
            trigger = Some(t);
            (frame, detected, selected, planned) = (None, None, None, None);
        }
        if has(r, "MoveToGrasp") {
            if let Some(t0) = trigger {
                m.latencies_ms.push(t - t0);
                let f = frame.unwrap_or(t0);
                let d = detected.unwrap_or(f);
                let p = planned.unwrap_or(t).max(selected.unwrap_or(d));
                m.stage_samples.push((f - t0, d - f, p - selected.unwrap_or(p)));
            }
        }
    }
    m.picks_attempted = picks.len() as u64;
    m.picks_succeeded = picks.iter().filter(|p| p.success).count() as u64;
    m.wrong_object = picks
        .iter()
        .filter(|p| p.success && p.removed_class.as_deref() != Some(p.target_class.as_str()))
        .count() as u64;
    for p in picks.iter().filter(|p| !p.success) {
        let label = p.failure.clone().ok_or_else(|| HarnessError::MalformedLog {
            line: p.index as usize,
            message: "failed pick without a reason".into(),
        })?;
        *m.failure_counts.entry(label).or_insert(0) += 1;
    }
    finish(&mut m);
    Ok(m)
}

fn finish(m: &mut MetricsSummary) {
    m.success_rate = if m.picks_attempted == 0 {
        0.0
    } else {
        m.picks_succeeded as f64 / m.picks_attempted as f64
    };
    m.mean_cycle_ms = if m.cycles_ms.is_empty() {
        0.0
    } else {
        m.cycles_ms.iter().sum::<f64>() / m.cycles_ms.len() as f64
    };
    m.picks_per_hour = if m.mean_cycle_ms > 0.0 {
        3_600_000.0 / m.mean_cycle_ms
    } else {
        0.0
    };
    m.latency = LatencyStats::from_samples(&m.latencies_ms);
    let n = m.stage_samples.len().max(1) as f64;
    let sum = m
        .stage_samples
        .iter()
        .fold((0.0, 0.0, 0.0), |a, s| (a.0 + s.0, a.1 + s.1, a.2 + s.2));
    m.stages = StageBreakdown {
        capture_ms: sum.0 / n,
        detect_ms: sum.1 / n,
        plan_ms: sum.2 / n,
    };
}

/// Pool several episodes into one summary.
pub fn aggregate<'a>(parts: impl IntoIterator<Item = &'a MetricsSummary>) -> MetricsSummary {
    let mut m = MetricsSummary {
        failure_counts: zeroed_failures(),
        ..Default::default()
    };
    for p in parts {
        m.picks_attempted += p.picks_attempted;
        m.picks_succeeded += p.picks_succeeded;
        m.wrong_object += p.wrong_object;
        m.cycles_ms.extend_from_slice(&p.cycles_ms);
        m.latencies_ms.extend_from_slice(&p.latencies_ms);
        m.stage_samples.extend_from_slice(&p.stage_samples);
        if p.stage_samples.is_empty() && !p.latencies_ms.is_empty() {
            // deserialized summaries carry only the means
            let s = &p.stages;
            m.stage_samples
                .extend(std::iter::repeat_n((s.capture_ms, s.detect_ms, s.plan_ms), p.latencies_ms.len()));
        }
        for (k, v) in &p.failure_counts {
            *m.failure_counts.entry(k.clone()).or_insert(0) += v;
        }
    }
    finish(&mut m);
    m
}
