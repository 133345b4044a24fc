use super::dfa::{dfa_step, Action, CellEvent, CellState, DfaContext};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub scan_ms: u64,
    pub queue_capacity: usize,
    pub n_frames: u32,
    pub max_timeouts: u32,
    pub stage_timeout_ms: u64,
    /// meters
    pub empty_closure: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            scan_ms: 10,
            queue_capacity: 64,
            n_frames: 3,
            max_timeouts: 3,
            stage_timeout_ms: 2000,
            empty_closure: 0.005,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.scan_ms == 0 || self.queue_capacity == 0 || self.n_frames == 0 || self.max_timeouts == 0 {
            return Err("scan_ms, queue_capacity, n_frames and max_timeouts must be positive".into());
        }
        if self.stage_timeout_ms == 0 || !(self.empty_closure > 0.0) {
            return Err("stage_timeout_ms and empty_closure must be positive".into());
        }
        Ok(())
    }

    pub fn dfa_context(&self) -> DfaContext {
        DfaContext {
            n_frames: self.n_frames,
            max_timeouts: self.max_timeouts,
            empty_closure: self.empty_closure,
            ..DfaContext::default()
        }
    }
}

/// One line of the transition log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub timestamp_ms: f64,
    pub state_from: String,
    pub event: String,
    pub state_to: String,
    pub actions: Vec<String>,
}

impl TransitionRecord {
    pub fn to_ndjson_line(&self) -> String {
        let mut s = crate::canonical::to_canonical_string(self).expect("record is serializable");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fault {
    QueueOverflow,
}

/// Cyclic-scan executor around the automaton. Events are queued from any
/// source; [`Controller::scan`] drains them once per cycle. EStop skips the
/// queue.
#[derive(Debug, Clone)]
pub struct Controller {
    pub cfg: ScanConfig,
    pub ctx: DfaContext,
    state: CellState,
    queue: VecDeque<CellEvent>,
    estop: bool,
    fault: Option<Fault>,
    log: Vec<TransitionRecord>,
}

impl Controller {
    pub fn new(cfg: ScanConfig) -> Self {
        Self {
            ctx: cfg.dfa_context(),
            cfg,
            state: CellState::Idle,
            queue: VecDeque::new(),
            estop: false,
            fault: None,
            log: Vec::new(),
        }
    }

    pub fn state(&self) -> CellState {
        self.state
    }

    pub fn fault(&self) -> Option<Fault> {
        self.fault
    }

    pub fn pending(&self) -> usize {
        self.queue.len() + usize::from(self.estop)
    }

    pub fn log(&self) -> &[TransitionRecord] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<TransitionRecord> {
        std::mem::take(&mut self.log)
    }

    /// Queue an event for the next scan. A full queue is a fault: the cell
    /// halts at the next scan.
    pub fn push(&mut self, event: CellEvent) {
        if event == CellEvent::EStop {
            self.estop = true;
            return;
        }
        if self.queue.len() >= self.cfg.queue_capacity {
            self.fault = Some(Fault::QueueOverflow);
            self.estop = true;
            return;
        }
        self.queue.push_back(event);
    }

    /// One scan cycle at simulated time `now_ms`. Returns the actions to
    /// publish at cycle end, in order.
    pub fn scan(&mut self, now_ms: f64) -> Vec<Action> {
        let mut out = Vec::new();
        if self.estop {
            self.estop = false;
            self.apply(CellEvent::EStop, now_ms, &mut out);
        }
        while let Some(ev) = self.queue.pop_front() {
            self.apply(ev, now_ms, &mut out);
        }
        out
    }

    fn apply(&mut self, event: CellEvent, now_ms: f64, out: &mut Vec<Action>) {
        let mut internal = VecDeque::from([event]);
        while let Some(ev) = internal.pop_front() {
            let from = self.state;
            let (to, actions) = dfa_step(from, ev, &mut self.ctx);
            self.state = to;
            self.log.push(TransitionRecord {
                timestamp_ms: now_ms,
                state_from: from.name().into(),
                event: ev.label(),
                state_to: to.name().into(),
                actions: actions.iter().map(Action::label).collect(),
            });
            for a in actions {
                match a {
                    Action::Emit(e) => internal.push_back(e),
                    other => out.push(other),
                }
            }
        }
    }

    /// Let the owner refresh the context flags the automaton reads.
    pub fn set_flags(&mut self, candidates_left: bool, actionable_left: bool) {
        self.ctx.candidates_left = candidates_left;
        self.ctx.actionable_left = actionable_left;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_inbox_is_a_no_op() {
        let mut c = Controller::new(ScanConfig::default());
        assert!(c.scan(0.0).is_empty());
        assert_eq!(c.state(), CellState::Idle);
        assert!(c.log().is_empty());
    }

    #[test]
    fn estop_jumps_the_queue() {
        let mut c = Controller::new(ScanConfig::default());
        c.push(CellEvent::RequestReceived);
        c.scan(0.0);
        c.push(CellEvent::FrameReady);
        c.push(CellEvent::EStop);
        let out = c.scan(10.0);
        assert_eq!(out, vec![Action::StopAll]);
        assert_eq!(c.state(), CellState::Halted);
        // FrameReady was consumed in Halted without effect
        assert_eq!(c.log().last().unwrap().event, "FrameReady");
        assert_eq!(c.log().last().unwrap().state_to, "Halted");
    }

    #[test]
    fn overflow_halts() {
        let cfg = ScanConfig {
            queue_capacity: 4,
            ..Default::default()
        };
        let mut c = Controller::new(cfg);
        for _ in 0..5 {
            c.push(CellEvent::MotionDone);
        }
        assert_eq!(c.fault(), Some(Fault::QueueOverflow));
        c.scan(0.0);
        assert_eq!(c.state(), CellState::Halted);
    }

    #[test]
    fn emitted_events_are_logged_in_the_same_cycle() {
        let mut c = Controller::new(ScanConfig::default());
        let trail = [
            CellEvent::RequestReceived,
            CellEvent::FrameReady,
            CellEvent::DetectionsReady,
            CellEvent::ObjectSelected,
            CellEvent::GraspFound,
            CellEvent::MotionDone,
            CellEvent::MotionDone,
        ];
        for e in trail {
            c.push(e);
        }
        c.scan(0.0);
        assert_eq!(c.state(), CellState::VerifyingGrasp);
        c.push(CellEvent::GripperClosed { width: 0.001 });
        let out = c.scan(10.0);
        assert_eq!(c.state(), CellState::CaptureFrame);
        assert_eq!(out, vec![Action::ReopenGripper, Action::TriggerCamera]);
        let events: Vec<_> = c.log().iter().rev().take(2).map(|r| r.event.clone()).collect();
        assert_eq!(events, vec!["NothingGrasped", "GripperClosed(0.0010)"]);
    }

    #[test]
    fn records_serialize_as_single_lines() {
        let r = TransitionRecord {
            timestamp_ms: 12.5,
            state_from: "Idle".into(),
            event: "RequestReceived".into(),
            state_to: "CaptureFrame".into(),
            actions: vec!["TriggerCamera".into()],
        };
        let line = r.to_ndjson_line();
        assert_eq!(line.matches('\n').count(), 1);
        let back: TransitionRecord = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(back, r);
    }
}
