//! Bus-facing side of the controller: turns incoming messages into automaton
//! events and automaton actions into outgoing messages.

use super::dfa::{Action, CellEvent, CellState, Stage};
use super::request::{update_request, ListStatus, PickRequest, RequestUpdate};
use super::scan::{Controller, ScanConfig, TransitionRecord};
use super::transform::{grasp_to_robot, Extrinsics, RobotGrasp};
use crate::bbox::BoundingBox;
use crate::bus::message::*;
use crate::bus::{HeartbeatMonitor, Message};
use crate::camera::CameraIntrinsics;
use crate::perception::{rank_candidates, Detection};
use nalgebra::Vector3;
use std::collections::BTreeMap;

/// Bus participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Hmi,
    Plc,
    Camera,
    Npu,
    Robot,
    Gripper,
}

impl Node {
    pub const ALL: [Node; 6] = [Node::Hmi, Node::Plc, Node::Camera, Node::Npu, Node::Robot, Node::Gripper];

    pub fn name(self) -> &'static str {
        match self {
            Node::Hmi => "hmi",
            Node::Plc => "plc",
            Node::Camera => "camera",
            Node::Npu => "npu",
            Node::Robot => "robot",
            Node::Gripper => "gripper",
        }
    }

    pub fn from_name(s: &str) -> Option<Node> {
        Self::ALL.into_iter().find(|n| n.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GripPurpose {
    Close,
    Read,
    Place,
    Reopen,
}

/// Fixed cell poses in the robot frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellLayout {
    pub place: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct Plc {
    pub controller: Controller,
    cam: CameraIntrinsics,
    extrinsics: Extrinsics,
    layout: CellLayout,
    request: PickRequest,
    class_miss: BTreeMap<String, u32>,
    frame_id: u32,
    detections: Vec<Detection>,
    ranking: Vec<usize>,
    cursor: usize,
    selected: Option<usize>,
    grasp: Option<RobotGrasp>,
    move_id: u32,
    awaiting_move: Option<u32>,
    cmd_id: u32,
    grip: BTreeMap<u32, GripPurpose>,
    timer: Option<(Stage, u64)>,
    heartbeats: HeartbeatMonitor,
    hmi_note: Option<HmiEvent>,
    pending_reset: bool,
}

impl Plc {
    /// `heartbeat_period` in microseconds.
    pub fn new(cfg: ScanConfig, cam: CameraIntrinsics, extrinsics: Extrinsics, layout: CellLayout, heartbeat_period: u64) -> Self {
        Self {
            controller: Controller::new(cfg),
            cam,
            extrinsics,
            layout,
            request: PickRequest::default(),
            class_miss: BTreeMap::new(),
            frame_id: 0,
            detections: Vec::new(),
            ranking: Vec::new(),
            cursor: 0,
            selected: None,
            grasp: None,
            move_id: 0,
            awaiting_move: None,
            cmd_id: 0,
            grip: BTreeMap::new(),
            timer: None,
            heartbeats: HeartbeatMonitor::new(heartbeat_period),
            hmi_note: None,
            pending_reset: false,
        }
    }

    pub fn state(&self) -> CellState {
        self.controller.state()
    }

    pub fn request(&self) -> &PickRequest {
        &self.request
    }

    pub fn frame_id(&self) -> u32 {
        self.frame_id
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn selected(&self) -> Option<&Detection> {
        self.selected.and_then(|i| self.detections.get(i))
    }

    pub fn selected_index(&self) -> Option<usize> {
        self.selected
    }

    pub fn last_grasp(&self) -> Option<RobotGrasp> {
        self.grasp
    }

    pub fn log(&self) -> &[TransitionRecord] {
        self.controller.log()
    }

    /// Deadline of the armed stage timer, if any.
    pub fn timer_deadline(&self) -> Option<u64> {
        self.timer.map(|t| t.1)
    }

    pub fn heartbeat_deadline(&self) -> Option<u64> {
        self.heartbeats.next_deadline()
    }

    /// Handle the clock reaching `now`: expired timers and silent
    /// components become timeout events.
    pub fn on_time(&mut self, now: u64) {
        if let Some((stage, at)) = self.timer {
            if now >= at {
                self.timer = None;
                self.controller.push(CellEvent::Timeout(stage));
            }
        }
        if !self.heartbeats.check(now).is_empty() {
            self.controller.push(CellEvent::Timeout(Stage::Heartbeat));
        }
    }

    fn refresh_flags(&mut self) {
        let actionable = !self.request.actionable().is_empty();
        self.controller.set_flags(self.cursor < self.ranking.len(), actionable);
    }

    pub fn on_message(&mut self, from: Node, msg: &Message, now: u64) {
        match msg {
            Message::Heartbeat(h) => self.heartbeats.beat(&h.component, now),
            Message::EStop(_) => self.controller.push(CellEvent::EStop),
            Message::HmiEvent(e) if from == Node::Hmi && e.kind == "Reset" => {
                self.pending_reset = true;
                self.controller.push(CellEvent::Reset);
            }
            Message::PickRequest(r) => {
                if self.state().is_active() || self.state() == CellState::Halted {
                    return;
                }
                self.request = PickRequest::new(r.items.clone());
                self.class_miss.clear();
                self.refresh_flags();
                self.controller.push(CellEvent::RequestReceived);
            }
            Message::FrameReady(f) if f.frame_id == self.frame_id => {
                self.disarm(Stage::Capture);
                self.controller.push(CellEvent::FrameReady);
            }
            Message::DetectionResult(d) if d.frame_id == self.frame_id => {
                self.disarm(Stage::Detect);
                self.on_detections(&d.detections);
            }
            Message::GraspResult(g) if g.frame_id == self.frame_id => {
                self.disarm(Stage::Plan);
                let found = g
                    .grasp
                    .filter(|w| w.quality > 0.0 && Some(g.detection as usize) == self.selected)
                    .and_then(|w| {
                        grasp_to_robot(w.u as f64, w.v as f64, w.z as f64, w.theta as f64, &self.cam, &self.extrinsics).ok()
                    });
                self.grasp = found;
                self.refresh_flags();
                self.controller.push(if found.is_some() {
                    CellEvent::GraspFound
                } else {
                    CellEvent::NoGraspFound
                });
            }
            Message::RobotStatus(s) if s.done && Some(s.move_id) == self.awaiting_move => {
                self.awaiting_move = None;
                self.controller.push(CellEvent::MotionDone);
            }
            Message::GripperStatus(s) => match self.grip.remove(&s.cmd_id) {
                Some(GripPurpose::Close) => self.controller.push(CellEvent::MotionDone),
                Some(GripPurpose::Read) => self.controller.push(CellEvent::GripperClosed { width: s.width as f64 }),
                Some(GripPurpose::Place) => self.controller.push(CellEvent::PlaceDone),
                Some(GripPurpose::Reopen) | None => {}
            },
            _ => {}
        }
    }

    fn on_detections(&mut self, wire: &[WireDetection]) {
        self.detections = wire
            .iter()
            .map(|w| Detection {
                bbox: BoundingBox::new(w.u_min as f64, w.v_min as f64, w.u_max as f64, w.v_max as f64),
                class_label: w.class_label.clone(),
                confidence: w.confidence as f64,
                sources: w.sources.clone(),
            })
            .collect();
        // per-class absence bookkeeping
        let n_frames = self.controller.cfg.n_frames;
        for class in self.request.actionable().into_keys() {
            let seen = self.detections.iter().any(|d| d.class_label == class);
            let streak = self.class_miss.entry(class.clone()).or_insert(0);
            *streak = if seen { 0 } else { *streak + 1 };
            if *streak >= n_frames {
                let (_, newly) = update_request(&mut self.request, &RequestUpdate::Unavailable(class.clone()));
                if newly {
                    self.hmi_note = Some(HmiEvent {
                        kind: "Unavailable".into(),
                        state: self.state().name().into(),
                        classes: vec![class],
                    });
                }
            }
        }
        self.ranking = rank_candidates(&self.detections, &self.request.actionable());
        self.cursor = 0;
        self.selected = None;
        self.refresh_flags();
        self.controller.push(if self.ranking.is_empty() {
            CellEvent::NoRequestedObjectDetected
        } else {
            CellEvent::DetectionsReady
        });
    }

    fn disarm(&mut self, stage: Stage) {
        if self.timer.is_some_and(|t| t.0 == stage) {
            self.timer = None;
        }
    }

    fn arm(&mut self, stage: Stage, now: u64) {
        self.timer = Some((stage, now + self.controller.cfg.stage_timeout_ms * 1000));
    }

    /// Run one scan cycle and return the messages to send, in order.
    pub fn scan(&mut self, now: u64) -> Vec<(Node, Message)> {
        let actions = self.controller.scan(now as f64 / 1000.0);
        let mut out = Vec::new();
        if let Some(note) = self.hmi_note.take() {
            out.push((Node::Hmi, Message::HmiEvent(note)));
        }
        for a in actions {
            self.execute(a, now, &mut out);
        }
        if self.pending_reset && self.state() == CellState::AwaitRequest {
            self.pending_reset = false;
            self.request = PickRequest::default();
        }
        out
    }

    fn gripper(&mut self, command: GripperCommand, purpose: GripPurpose, out: &mut Vec<(Node, Message)>) {
        self.cmd_id += 1;
        self.grip.insert(self.cmd_id, purpose);
        out.push((
            Node::Gripper,
            Message::GripperCmd(GripperCmd {
                cmd_id: self.cmd_id,
                command,
            }),
        ));
    }

    fn robot(&mut self, target: MoveTarget, p: (f64, f64, f64, f64), out: &mut Vec<(Node, Message)>) {
        self.move_id += 1;
        self.awaiting_move = Some(self.move_id);
        out.push((
            Node::Robot,
            Message::RobotMove(RobotMove {
                move_id: self.move_id,
                target,
                x: p.0 as f32,
                y: p.1 as f32,
                z: p.2 as f32,
                yaw: p.3 as f32,
            }),
        ));
    }

    fn execute(&mut self, action: Action, now: u64, out: &mut Vec<(Node, Message)>) {
        match action {
            Action::TriggerCamera => {
                self.frame_id += 1;
                self.selected = None;
                self.arm(Stage::Capture, now);
                out.push((
                    Node::Camera,
                    Message::TriggerFrame(TriggerFrame {
                        frame_id: self.frame_id,
                        stage: FrameStage::Capture,
                        detection: None,
                    }),
                ));
            }
            Action::RunDetection => {
                self.arm(Stage::Detect, now);
                out.push((
                    Node::Npu,
                    Message::TriggerFrame(TriggerFrame {
                        frame_id: self.frame_id,
                        stage: FrameStage::Detect,
                        detection: None,
                    }),
                ));
            }
            Action::SelectObject => {
                if self.cursor < self.ranking.len() {
                    self.selected = Some(self.ranking[self.cursor]);
                    self.cursor += 1;
                    self.refresh_flags();
                    self.controller.push(CellEvent::ObjectSelected);
                } else {
                    self.selected = None;
                    self.controller.push(CellEvent::NoGraspFound);
                }
            }
            Action::PlanGrasp => {
                self.arm(Stage::Plan, now);
                out.push((
                    Node::Npu,
                    Message::TriggerFrame(TriggerFrame {
                        frame_id: self.frame_id,
                        stage: FrameStage::Plan,
                        detection: self.selected.map(|i| i as u32),
                    }),
                ));
            }
            Action::MoveToGrasp => {
                let g = self.grasp.expect("GraspFound carries a grasp");
                self.robot(MoveTarget::Grasp, (g.x, g.y, g.z, g.yaw), out);
            }
            Action::MoveToPlace => {
                let p = self.layout.place;
                self.robot(MoveTarget::Place, (p.x, p.y, p.z, 0.0), out);
            }
            Action::CloseGripper => self.gripper(GripperCommand::Close, GripPurpose::Close, out),
            Action::ReadGripper => self.gripper(GripperCommand::Read, GripPurpose::Read, out),
            Action::ReopenGripper => self.gripper(GripperCommand::Open, GripPurpose::Reopen, out),
            Action::OpenGripper => self.gripper(GripperCommand::Open, GripPurpose::Place, out),
            Action::UpdateList => {
                let class = self.selected().map(|d| d.class_label.clone()).unwrap_or_default();
                let (status, _) = update_request(&mut self.request, &RequestUpdate::Verified(class));
                self.refresh_flags();
                self.controller.push(match status {
                    ListStatus::ListFulfilled => CellEvent::ListFulfilled,
                    ListStatus::ListOpen => CellEvent::ListOpen,
                });
            }
            Action::NotifyHmi => {
                let state = self.state();
                let kind = if state == CellState::ReportingUnavailable {
                    "Unavailable"
                } else {
                    state.name()
                };
                out.push((
                    Node::Hmi,
                    Message::HmiEvent(HmiEvent {
                        kind: kind.into(),
                        state: state.name().into(),
                        classes: self.request.unavailable.iter().cloned().collect(),
                    }),
                ));
            }
            Action::StopAll => {
                self.timer = None;
                self.awaiting_move = None;
                self.grip.clear();
                out.push((Node::Robot, Message::EStop(EStop {})));
                out.push((Node::Gripper, Message::EStop(EStop {})));
            }
            Action::ClearFault => {
                self.timer = None;
            }
            Action::LogIgnored | Action::Emit(_) => {}
        }
    }
}
