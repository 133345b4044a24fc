//! The cell automaton: one traversal per depth frame, repeated until the
//! pick list is fulfilled, reported unavailable, or the cell is halted.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CellState {
    Idle,
    AwaitRequest,
    CaptureFrame,
    Detecting,
    SelectingObject,
    PlanningGrasp,
    MovingToGrasp,
    Closing,
    VerifyingGrasp,
    Transporting,
    Placing,
    UpdatingList,
    ReportingUnavailable,
    Done,
    Halted,
}

impl CellState {
    pub const ALL: [CellState; 15] = [
        CellState::Idle,
        CellState::AwaitRequest,
        CellState::CaptureFrame,
        CellState::Detecting,
        CellState::SelectingObject,
        CellState::PlanningGrasp,
        CellState::MovingToGrasp,
        CellState::Closing,
        CellState::VerifyingGrasp,
        CellState::Transporting,
        CellState::Placing,
        CellState::UpdatingList,
        CellState::ReportingUnavailable,
        CellState::Done,
        CellState::Halted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CellState::Idle => "Idle",
            CellState::AwaitRequest => "AwaitRequest",
            CellState::CaptureFrame => "CaptureFrame",
            CellState::Detecting => "Detecting",
            CellState::SelectingObject => "SelectingObject",
            CellState::PlanningGrasp => "PlanningGrasp",
            CellState::MovingToGrasp => "MovingToGrasp",
            CellState::Closing => "Closing",
            CellState::VerifyingGrasp => "VerifyingGrasp",
            CellState::Transporting => "Transporting",
            CellState::Placing => "Placing",
            CellState::UpdatingList => "UpdatingList",
            CellState::ReportingUnavailable => "ReportingUnavailable",
            CellState::Done => "Done",
            CellState::Halted => "Halted",
        }
    }

    pub fn from_name(s: &str) -> Option<CellState> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// States in which a pick request is being worked on.
    pub fn is_active(self) -> bool {
        !matches!(
            self,
            CellState::Idle | CellState::AwaitRequest | CellState::ReportingUnavailable | CellState::Done | CellState::Halted
        )
    }
}

impl fmt::Display for CellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which wait a timeout fired on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Capture,
    Detect,
    Plan,
    Heartbeat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CellEvent {
    RequestReceived,
    FrameReady,
    DetectionsReady,
    NoRequestedObjectDetected,
    ObjectSelected,
    GraspFound,
    NoGraspFound,
    MotionDone,
    GripperClosed { width: f64 },
    ObjectVerified,
    NothingGrasped,
    PlaceDone,
    ListFulfilled,
    ListOpen,
    EStop,
    Reset,
    Timeout(Stage),
}

impl CellEvent {
    /// One representative per variant (two for the width-dependent one).
    pub fn samples() -> Vec<CellEvent> {
        vec![
            CellEvent::RequestReceived,
            CellEvent::FrameReady,
            CellEvent::DetectionsReady,
            CellEvent::NoRequestedObjectDetected,
            CellEvent::ObjectSelected,
            CellEvent::GraspFound,
            CellEvent::NoGraspFound,
            CellEvent::MotionDone,
            CellEvent::GripperClosed { width: 0.0 },
            CellEvent::GripperClosed { width: 0.04 },
            CellEvent::ObjectVerified,
            CellEvent::NothingGrasped,
            CellEvent::PlaceDone,
            CellEvent::ListFulfilled,
            CellEvent::ListOpen,
            CellEvent::EStop,
            CellEvent::Reset,
            CellEvent::Timeout(Stage::Capture),
            CellEvent::Timeout(Stage::Detect),
            CellEvent::Timeout(Stage::Plan),
            CellEvent::Timeout(Stage::Heartbeat),
        ]
    }

    pub fn label(&self) -> String {
        match self {
            CellEvent::GripperClosed { width } => format!("GripperClosed({:.4})", width),
            CellEvent::Timeout(s) => format!("Timeout({:?})", s),
            other => format!("{:?}", other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Action {
    TriggerCamera,
    RunDetection,
    SelectObject,
    PlanGrasp,
    MoveToGrasp,
    CloseGripper,
    ReadGripper,
    ReopenGripper,
    MoveToPlace,
    OpenGripper,
    UpdateList,
    NotifyHmi,
    StopAll,
    ClearFault,
    LogIgnored,
    /// Internal event, handled before the rest of the inbox.
    Emit(CellEvent),
}

impl Action {
    pub fn label(&self) -> String {
        match self {
            Action::Emit(e) => format!("Emit({})", e.label()),
            other => format!("{:?}", other),
        }
    }
}

/// Counters and flags the automaton reads and updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfaContext {
    /// Consecutive frames without a requested detection before giving up.
    pub n_frames: u32,
    pub miss_streak: u32,
    pub max_timeouts: u32,
    pub timeout_streak: u32,
    /// Jaw separation below which a closed gripper holds nothing.
    pub empty_closure: f64,
    /// Untried candidates remain in the current frame.
    pub candidates_left: bool,
    /// Some requested class is still neither picked nor reported unavailable.
    pub actionable_left: bool,
}

impl Default for DfaContext {
    fn default() -> Self {
        Self {
            n_frames: 3,
            miss_streak: 0,
            max_timeouts: 3,
            timeout_streak: 0,
            empty_closure: 0.005,
            candidates_left: false,
            actionable_left: true,
        }
    }
}

fn go(state: CellState, actions: &[Action]) -> (CellState, Vec<Action>) {
    (state, actions.to_vec())
}

/// Transition function. Total over every (state, event) pair; pairs with no
/// transition leave the state unchanged and log the event as ignored.
pub fn dfa_step(state: CellState, event: CellEvent, ctx: &mut DfaContext) -> (CellState, Vec<Action>) {
    use Action as A;
    use CellEvent as E;
    use CellState as S;

    if state == S::Halted {
        return match event {
            E::Reset => {
                *ctx = DfaContext {
                    miss_streak: 0,
                    timeout_streak: 0,
                    ..*ctx
                };
                go(S::AwaitRequest, &[A::ClearFault])
            }
            _ => (S::Halted, vec![]),
        };
    }
    if event == E::EStop {
        return go(S::Halted, &[A::StopAll]);
    }
    if let E::Timeout(_) = event {
        if !state.is_active() {
            return go(state, &[A::LogIgnored]);
        }
        ctx.timeout_streak += 1;
        if ctx.timeout_streak >= ctx.max_timeouts {
            return go(S::Halted, &[A::StopAll]);
        }
        return go(S::CaptureFrame, &[A::TriggerCamera]);
    }

    match (state, event) {
        (S::Idle | S::AwaitRequest | S::Done | S::ReportingUnavailable, E::RequestReceived) => {
            ctx.miss_streak = 0;
            ctx.timeout_streak = 0;
            go(S::CaptureFrame, &[A::TriggerCamera])
        }
        (S::Done | S::ReportingUnavailable, E::Reset) => go(S::AwaitRequest, &[]),

        (S::CaptureFrame, E::FrameReady) => go(S::Detecting, &[A::RunDetection]),

        (S::Detecting, E::DetectionsReady) => {
            ctx.miss_streak = 0;
            ctx.timeout_streak = 0;
            go(S::SelectingObject, &[A::SelectObject])
        }
        (S::Detecting, E::NoRequestedObjectDetected) => {
            ctx.miss_streak += 1;
            ctx.timeout_streak = 0;
            if ctx.miss_streak >= ctx.n_frames || !ctx.actionable_left {
                go(S::ReportingUnavailable, &[A::NotifyHmi])
            } else {
                go(S::CaptureFrame, &[A::TriggerCamera])
            }
        }

        (S::SelectingObject, E::ObjectSelected) => go(S::PlanningGrasp, &[A::PlanGrasp]),
        // every candidate of this frame has been tried
        (S::SelectingObject, E::NoGraspFound) => go(S::CaptureFrame, &[A::TriggerCamera]),

        (S::PlanningGrasp, E::GraspFound) => go(S::MovingToGrasp, &[A::MoveToGrasp]),
        (S::PlanningGrasp, E::NoGraspFound) => {
            if ctx.candidates_left {
                go(S::SelectingObject, &[A::SelectObject])
            } else {
                go(S::CaptureFrame, &[A::TriggerCamera])
            }
        }

        (S::MovingToGrasp, E::MotionDone) => go(S::Closing, &[A::CloseGripper]),
        (S::Closing, E::MotionDone) => go(S::VerifyingGrasp, &[A::ReadGripper]),

        (S::VerifyingGrasp, E::GripperClosed { width }) => {
            if width < ctx.empty_closure {
                go(S::VerifyingGrasp, &[A::Emit(E::NothingGrasped)])
            } else {
                go(S::VerifyingGrasp, &[A::Emit(E::ObjectVerified)])
            }
        }
        (S::VerifyingGrasp, E::NothingGrasped) => go(S::CaptureFrame, &[A::ReopenGripper, A::TriggerCamera]),
        (S::VerifyingGrasp, E::ObjectVerified) => go(S::Transporting, &[A::MoveToPlace]),

        (S::Transporting, E::MotionDone) => go(S::Placing, &[A::OpenGripper]),
        (S::Placing, E::PlaceDone) => go(S::UpdatingList, &[A::UpdateList]),

        (S::UpdatingList, E::ListFulfilled) => go(S::Done, &[A::NotifyHmi]),
        (S::UpdatingList, E::ListOpen) => {
            if ctx.actionable_left {
                go(S::CaptureFrame, &[A::TriggerCamera])
            } else {
                go(S::ReportingUnavailable, &[A::NotifyHmi])
            }
        }

        (s, _) => go(s, &[A::LogIgnored]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_starts_a_frame() {
        let mut ctx = DfaContext::default();
        assert_eq!(
            dfa_step(CellState::Idle, CellEvent::RequestReceived, &mut ctx),
            (CellState::CaptureFrame, vec![Action::TriggerCamera])
        );
    }

    #[test]
    fn estop_from_every_state() {
        for s in CellState::ALL {
            let mut ctx = DfaContext::default();
            let (next, actions) = dfa_step(s, CellEvent::EStop, &mut ctx);
            assert_eq!(next, CellState::Halted);
            if s != CellState::Halted {
                assert_eq!(actions, vec![Action::StopAll]);
            } else {
                assert!(actions.is_empty());
            }
        }
    }

    #[test]
    fn empty_closure_retries_from_a_new_frame() {
        let mut ctx = DfaContext::default();
        let (s, a) = dfa_step(CellState::VerifyingGrasp, CellEvent::GripperClosed { width: 0.003 }, &mut ctx);
        assert_eq!((s, a), (CellState::VerifyingGrasp, vec![Action::Emit(CellEvent::NothingGrasped)]));
        let (s, a) = dfa_step(s, CellEvent::NothingGrasped, &mut ctx);
        assert_eq!(s, CellState::CaptureFrame);
        assert_eq!(a[0], Action::ReopenGripper);
    }

    #[test]
    fn held_object_is_transported() {
        let mut ctx = DfaContext::default();
        let (s, a) = dfa_step(CellState::VerifyingGrasp, CellEvent::GripperClosed { width: 0.04 }, &mut ctx);
        assert_eq!(a, vec![Action::Emit(CellEvent::ObjectVerified)]);
        assert_eq!(dfa_step(s, CellEvent::ObjectVerified, &mut ctx).0, CellState::Transporting);
    }

    #[test]
    fn misses_report_after_n_frames() {
        let mut ctx = DfaContext::default();
        let mut s = CellState::Detecting;
        for i in 1..=3 {
            let (next, _) = dfa_step(s, CellEvent::NoRequestedObjectDetected, &mut ctx);
            if i < 3 {
                assert_eq!(next, CellState::CaptureFrame);
                s = dfa_step(next, CellEvent::FrameReady, &mut ctx).0;
            } else {
                assert_eq!(next, CellState::ReportingUnavailable);
            }
        }
    }

    #[test]
    fn no_grasp_tries_the_next_candidate() {
        let mut ctx = DfaContext {
            candidates_left: true,
            ..Default::default()
        };
        assert_eq!(
            dfa_step(CellState::PlanningGrasp, CellEvent::NoGraspFound, &mut ctx).0,
            CellState::SelectingObject
        );
        ctx.candidates_left = false;
        assert_eq!(
            dfa_step(CellState::PlanningGrasp, CellEvent::NoGraspFound, &mut ctx).0,
            CellState::CaptureFrame
        );
    }

    #[test]
    fn third_timeout_halts() {
        let mut ctx = DfaContext::default();
        let mut s = CellState::Detecting;
        for _ in 0..2 {
            s = dfa_step(s, CellEvent::Timeout(Stage::Detect), &mut ctx).0;
            assert_eq!(s, CellState::CaptureFrame);
            s = dfa_step(s, CellEvent::FrameReady, &mut ctx).0;
        }
        assert_eq!(dfa_step(s, CellEvent::Timeout(Stage::Detect), &mut ctx).0, CellState::Halted);
    }

    #[test]
    fn halted_waits_for_reset() {
        let mut ctx = DfaContext::default();
        for e in CellEvent::samples() {
            let (s, a) = dfa_step(CellState::Halted, e, &mut ctx);
            if e == CellEvent::Reset {
                assert_eq!((s, a), (CellState::AwaitRequest, vec![Action::ClearFault]));
            } else {
                assert_eq!((s, a.len()), (CellState::Halted, 0));
            }
        }
    }

    #[test]
    fn unexpected_pairs_are_logged() {
        let mut ctx = DfaContext::default();
        assert_eq!(
            dfa_step(CellState::Idle, CellEvent::MotionDone, &mut ctx),
            (CellState::Idle, vec![Action::LogIgnored])
        );
    }

    #[test]
    fn state_names_round_trip() {
        for s in CellState::ALL {
            assert_eq!(CellState::from_name(s.name()), Some(s));
        }
    }
}
