//! Discrete-event cell: the PLC plus simulated camera, perception module,
//! robot and gripper, all talking through encoded frames on FIFO links.
//! Time is simulated microseconds; nothing reads the wall clock.

use super::config::RunConfig;
use super::HarnessError;
use crate::bus::message::*;
use crate::bus::{decode_frame, encode_frame, BusDump, Link, LinkParams, Message};
use crate::controller::{CellLayout, CellState, Node, Plc, TransitionRecord};
use crate::depth::DepthFrame;
use crate::perception::{render_overlay, Detection, OverlayStyle, Perception, PerceptionService, PipelineOutput, Plan};
use crate::rng::{mix, stream_rng, STREAM_SLIP};
use crate::scene::{
    apply_grasp, generate_bin, render_depth, render_ground_truth, FailureReason, GroundTruth, NoiseParams, Scene,
    WorldGrasp,
};
use nalgebra::Vector3;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Failure labels beyond the adjudicator's own.
pub const MERGED_BOXES: &str = "MergedBoxes";
pub const INPAINT_BULGE: &str = "InpaintBulge";
pub const MISSED_DETECTION: &str = "MissedDetection";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickRecord {
    pub index: u32,
    pub t_ms: f64,
    pub frame_id: u32,
    /// Class of the detection the controller chose.
    pub target_class: String,
    pub removed_object: Option<u32>,
    pub removed_class: Option<String>,
    pub success: bool,
    /// Exactly one label for every failed pick.
    pub failure: Option<String>,
    /// The adjudicator's verdict before provenance flags were applied.
    pub adjudicated: Option<String>,
    pub merged_detection: bool,
    pub center_was_hole: bool,
    pub quality: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Done,
    ReportingUnavailable,
    Halted,
    PickCap,
    FrameCap,
    TimeCap,
}

#[derive(Debug, Clone)]
enum Job {
    Captured { frame_id: u32 },
    NpuDone { reply: Message },
    RobotArrived { move_id: u32, epoch: u64, to: Vector3<f64> },
    GripperDone { cmd: GripperCmd, epoch: u64 },
}

#[derive(Debug, Clone)]
enum SimEvent {
    Deliver { from: Node, to: Node, bytes: Vec<u8> },
    Scan,
    Timer,
    Heartbeat(Node),
    Device(Job),
}

/// The frame the perception module works on.
#[derive(Debug, Clone)]
struct Captured {
    frame_id: u32,
    seed: u64,
    raw: DepthFrame,
    gt: Vec<GroundTruth>,
    prepared: Option<PipelineOutput>,
    detections: Vec<Detection>,
}

#[derive(Debug, Clone)]
pub struct CellSim {
    pub cfg: RunConfig,
    pub seed: u64,
    now: u64,
    order: u64,
    events: BTreeMap<(u64, u64), SimEvent>,
    scans: BTreeSet<u64>,
    timers: BTreeSet<u64>,
    last_scan: Option<u64>,
    links: BTreeMap<(Node, Node), Link>,
    seq: BTreeMap<Node, u32>,
    dump: Option<BusDump>,
    plc: Plc,
    scene: Scene,
    perception: Perception,
    npu_busy: bool,
    npu_slot: PerceptionService<TriggerFrame>,
    frame: Option<Captured>,
    last_plan: Option<(u32, Plan)>,
    robot_pos: Vector3<f64>,
    robot_at_grasp: Option<WorldGrasp>,
    robot_epoch: u64,
    gripper_width: f64,
    gripper_epoch: u64,
    holding: Option<u32>,
    slip_rng: ChaCha8Rng,
    picks: Vec<PickRecord>,
    missed: u64,
    frames: u32,
    requested_total: u32,
    hmi_events: Vec<HmiEvent>,
    stop: Option<StopReason>,
    encode_faults: u32,
    picks_at_request: usize,
    labels: BTreeMap<u32, String>,
}

/// Planned depth this far off the true surface counts as an inpainting artifact.
const BULGE_TOL: f64 = 0.008;

const MAX_SIM_US: u64 = 24 * 3600 * 1_000_000;

fn us(ms: f64) -> u64 {
    (ms * 1000.0).round() as u64
}

impl CellSim {
    /// Build the cell and its bin for episode `seed`.
    pub fn new(cfg: RunConfig, seed: u64) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let templates = cfg.templates()?;
        let scene = generate_bin(
            seed.wrapping_add(cfg.scene.seed_offset),
            &templates,
            cfg.scene.count,
            cfg.scene.packing,
        )
        .map_err(|e| HarnessError::Scene(e.to_string()))?;
        Ok(Self::with_scene(cfg, seed, scene))
    }

    pub fn with_scene(cfg: RunConfig, seed: u64, scene: Scene) -> Self {
        let bin = scene.bin_dims;
        let center = Vector3::new(bin.length / 2.0, bin.width / 2.0, 0.0);
        let layout = CellLayout {
            place: center + Vector3::new(cfg.placement.distance(), 0.0, cfg.placement.place_height),
        };
        let hb = us(cfg.timing.heartbeat_ms);
        let plc = Plc::new(cfg.controller, cfg.camera.intrinsics, cfg.extrinsics(), layout, hb);
        let l = cfg.timing.links;
        let mut links = BTreeMap::new();
        let pairs: [(Node, Node, LinkParams); 6] = [
            (Node::Hmi, Node::Plc, l.hmi),
            (Node::Plc, Node::Camera, l.camera),
            (Node::Plc, Node::Npu, l.npu),
            (Node::Plc, Node::Robot, l.robot),
            (Node::Plc, Node::Gripper, l.gripper),
            (Node::Camera, Node::Npu, l.control),
        ];
        for (i, (a, b, p)) in pairs.into_iter().enumerate() {
            links.insert((a, b), Link::new(p, seed, 2 * i as u64));
            links.insert((b, a), Link::new(p, seed, 2 * i as u64 + 1));
        }
        let perception = Perception::new(cfg.perception.clone(), cfg.detector.clone(), cfg.gripper);
        let mut sim = Self {
            now: 0,
            order: 0,
            events: BTreeMap::new(),
            scans: BTreeSet::new(),
            timers: BTreeSet::new(),
            last_scan: None,
            links,
            seq: BTreeMap::new(),
            dump: None,
            plc,
            perception,
            npu_busy: false,
            npu_slot: PerceptionService::default(),
            frame: None,
            last_plan: None,
            robot_pos: center + Vector3::new(0.0, 0.0, 0.3),
            robot_at_grasp: None,
            robot_epoch: 0,
            gripper_width: cfg.gripper.max_opening,
            gripper_epoch: 0,
            holding: None,
            slip_rng: stream_rng(seed, STREAM_SLIP),
            picks: Vec::new(),
            missed: 0,
            frames: 0,
            requested_total: 0,
            hmi_events: Vec::new(),
            stop: None,
            encode_faults: 0,
            picks_at_request: 0,
            labels: scene.objects.iter().map(|o| (o.id, o.class_label.clone())).collect(),
            scene,
            cfg,
            seed,
        };
        for (i, node) in [Node::Camera, Node::Npu, Node::Robot, Node::Gripper].into_iter().enumerate() {
            // stagger so beats never coincide
            sim.schedule(hb + i as u64 * 1000, SimEvent::Heartbeat(node));
        }
        sim
    }

    pub fn enable_busdump(&mut self) {
        self.dump = Some(BusDump::new());
    }

    pub fn busdump(&self) -> Option<&BusDump> {
        self.dump.as_ref()
    }

    pub fn now_us(&self) -> u64 {
        self.now
    }

    pub fn plc(&self) -> &Plc {
        &self.plc
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    /// Grasp planned on the latest frame, in raw-frame pixels.
    pub fn last_plan(&self) -> Option<&Plan> {
        self.last_plan
            .as_ref()
            .filter(|(id, _)| self.frame.as_ref().is_some_and(|f| f.frame_id == *id))
            .map(|(_, p)| p)
    }

    /// Detections on the latest frame, in preprocessed pixels.
    pub fn latest_detections(&self) -> Option<(u32, &[Detection])> {
        let f = self.frame.as_ref()?;
        f.prepared.as_ref().map(|_| (f.frame_id, f.detections.as_slice()))
    }

    pub fn picks(&self) -> &[PickRecord] {
        &self.picks
    }

    pub fn missed_detections(&self) -> u64 {
        self.missed
    }

    pub fn log(&self) -> &[TransitionRecord] {
        self.plc.log()
    }

    pub fn hmi_events(&self) -> &[HmiEvent] {
        &self.hmi_events
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    pub fn encode_faults(&self) -> u32 {
        self.encode_faults
    }

    /// Total requested objects of the active request.
    pub fn requested_total(&self) -> u32 {
        self.requested_total
    }

    /// Every object currently in the bin, by class.
    pub fn scene_request(&self) -> BTreeMap<String, u32> {
        let mut m = BTreeMap::new();
        for o in &self.scene.objects {
            *m.entry(o.class_label.clone()).or_insert(0) += 1;
        }
        m
    }

    /// Clear the stop flag so a live cell can keep running after a request
    /// finishes.
    pub fn resume(&mut self) {
        self.stop = None;
    }

    fn schedule(&mut self, at: u64, ev: SimEvent) {
        self.order += 1;
        self.events.insert((at, self.order), ev);
    }

    fn schedule_scan(&mut self, t: u64) {
        let period = self.cfg.controller.scan_ms * 1000;
        let mut tick = t.div_ceil(period) * period;
        if self.last_scan.is_some_and(|l| tick <= l) {
            tick = self.last_scan.unwrap() + period;
        }
        if self.scans.insert(tick) {
            self.schedule(tick, SimEvent::Scan);
        }
    }

    fn schedule_timers(&mut self) {
        for at in [self.plc.timer_deadline(), self.plc.heartbeat_deadline()].into_iter().flatten() {
            if at > self.now && self.timers.insert(at) {
                self.schedule(at, SimEvent::Timer);
            }
        }
    }

    /// Encode and put a message on the `from -> to` link.
    pub fn send(&mut self, from: Node, to: Node, msg: &Message) {
        let seq = self.seq.entry(from).or_insert(0);
        let bytes = match encode_frame(*seq, msg) {
            Ok(b) => b,
            Err(e) => {
                log::error!("{} -> {}: {e}", from.name(), to.name());
                self.encode_faults += 1;
                return;
            }
        };
        *seq = seq.wrapping_add(1);
        let at = match self.links.get_mut(&(from, to)) {
            Some(link) => link.deliver(self.now, msg.is_estop()),
            None => self.now,
        };
        if let Some(d) = self.dump.as_mut() {
            d.record(self.now / 1000, &bytes);
        }
        self.schedule(at, SimEvent::Deliver { from, to, bytes });
    }

    /// Operator input from the HMI side.
    pub fn submit_from_hmi(&mut self, msg: Message) {
        if let Message::PickRequest(r) = &msg {
            if !self.plc.state().is_active() && self.plc.state() != CellState::Halted {
                self.requested_total = r.items.values().sum();
                self.frames = 0;
                self.picks_at_request = self.picks.len();
            }
        }
        self.send(Node::Hmi, Node::Plc, &msg);
    }

    pub fn next_event_time(&self) -> Option<u64> {
        self.events.keys().next().map(|k| k.0)
    }

    /// Process one event. Returns false when nothing is left.
    pub fn step(&mut self) -> bool {
        let Some(((t, _), ev)) = self.events.pop_first() else {
            return false;
        };
        self.now = t;
        match ev {
            SimEvent::Deliver { from, to, bytes } => self.deliver(from, to, &bytes),
            SimEvent::Scan => self.scan(),
            SimEvent::Timer => {
                self.timers.remove(&t);
                self.plc.on_time(t);
                if self.plc.controller.pending() > 0 {
                    self.schedule_scan(t);
                }
                self.schedule_timers();
            }
            SimEvent::Heartbeat(node) => {
                let hb = Message::Heartbeat(Heartbeat {
                    component: node.name().into(),
                    schema: SCHEMA_VERSION,
                });
                self.send(node, Node::Plc, &hb);
                let next = t + us(self.cfg.timing.heartbeat_ms);
                self.schedule(next, SimEvent::Heartbeat(node));
            }
            SimEvent::Device(job) => self.device(job),
        }
        if self.now > MAX_SIM_US && self.stop.is_none() {
            self.stop = Some(StopReason::TimeCap);
        }
        true
    }

    /// Step until the episode stops or the clock would pass `until`.
    pub fn run_until(&mut self, until: u64) {
        while self.stop.is_none() {
            match self.next_event_time() {
                Some(t) if t <= until => {
                    self.step();
                }
                _ => break,
            }
        }
        self.now = self.now.max(until.min(self.next_event_time().unwrap_or(until)));
    }

    /// Process every event up to `until` regardless of episode stop
    /// conditions; the live cell keeps running between requests.
    pub fn run_live_until(&mut self, until: u64) {
        while self.next_event_time().is_some_and(|t| t <= until) {
            self.step();
        }
        self.now = self.now.max(until);
    }

    /// Step until the episode stops.
    pub fn run_to_end(&mut self) {
        while self.stop.is_none() && self.step() {}
        // frames already on the wire to the operator still arrive
        let in_flight: Vec<_> = self
            .events
            .iter()
            .filter(|(_, e)| matches!(e, SimEvent::Deliver { to: Node::Hmi, .. }))
            .map(|(k, _)| *k)
            .collect();
        for k in in_flight {
            if let Some(SimEvent::Deliver { from, to, bytes }) = self.events.remove(&k) {
                self.now = k.0;
                self.deliver(from, to, &bytes);
            }
        }
    }

    fn deliver(&mut self, from: Node, to: Node, bytes: &[u8]) {
        let msg = match decode_frame(bytes) {
            Ok((f, _)) => f.msg,
            Err(e) => {
                log::error!("{} -> {}: {e}", from.name(), to.name());
                return;
            }
        };
        match to {
            Node::Plc => {
                self.plc.on_message(from, &msg, self.now);
                if !matches!(msg, Message::Heartbeat(_)) || self.plc.controller.pending() > 0 {
                    self.schedule_scan(self.now);
                }
                self.schedule_timers();
            }
            Node::Camera => {
                if let Message::TriggerFrame(tf) = msg {
                    if tf.stage == FrameStage::Capture {
                        let at = self.now + us(self.cfg.timing.capture_ms);
                        self.schedule(at, SimEvent::Device(Job::Captured { frame_id: tf.frame_id }));
                    }
                }
            }
            Node::Npu => {
                if let Message::TriggerFrame(tf) = msg {
                    if self.npu_busy {
                        self.npu_slot.submit(tf);
                    } else {
                        self.npu_start(tf);
                    }
                }
            }
            Node::Robot => match msg {
                Message::RobotMove(m) => {
                    let to = Vector3::new(m.x as f64, m.y as f64, m.z as f64);
                    let dt = self.cfg.motion.move_time(&self.robot_pos, &to);
                    self.robot_at_grasp = None;
                    let at = self.now + us(dt * 1000.0);
                    let epoch = self.robot_epoch;
                    self.schedule(
                        at,
                        SimEvent::Device(Job::RobotArrived {
                            move_id: m.move_id,
                            epoch,
                            to,
                        }),
                    );
                    if m.target == MoveTarget::Grasp {
                        self.robot_at_grasp = Some(WorldGrasp {
                            x: m.x as f64,
                            y: m.y as f64,
                            z: m.z as f64,
                            yaw: m.yaw as f64,
                        });
                    }
                }
                Message::EStop(_) => self.robot_epoch += 1,
                _ => {}
            },
            Node::Gripper => match msg {
                Message::GripperCmd(cmd) => {
                    let ms = match cmd.command {
                        GripperCommand::Close => self.cfg.motion.grip_close_s * 1000.0,
                        GripperCommand::Open => self.cfg.motion.grip_open_s * 1000.0,
                        GripperCommand::Read => self.cfg.timing.gripper_read_ms,
                    };
                    let epoch = self.gripper_epoch;
                    self.schedule(self.now + us(ms), SimEvent::Device(Job::GripperDone { cmd, epoch }));
                }
                Message::EStop(_) => self.gripper_epoch += 1,
                _ => {}
            },
            Node::Hmi => {
                if let Message::HmiEvent(e) = msg {
                    self.hmi_events.push(e);
                }
            }
        }
    }

    fn frame_seed(&self, frame_id: u32) -> u64 {
        mix(self.seed ^ mix(0xF4A3_u64 << 32 | frame_id as u64))
    }

    fn npu_start(&mut self, tf: TriggerFrame) {
        self.npu_busy = true;
        let t = &self.cfg.timing;
        let (cost_ms, reply) = match tf.stage {
            FrameStage::Detect => (t.preprocess_ms + t.detect_ms, self.npu_detect(tf.frame_id)),
            FrameStage::Plan => (t.grasp_ms, self.npu_plan(tf.frame_id, tf.detection)),
            FrameStage::Capture => (0.0, None),
        };
        match reply {
            Some(reply) if !self.cfg.faults.stall_npu => {
                self.schedule(self.now + us(cost_ms), SimEvent::Device(Job::NpuDone { reply }));
            }
            _ => {
                self.npu_busy = false;
                if let Some(next) = self.npu_slot.take() {
                    self.npu_start(next);
                }
            }
        }
    }

    fn npu_detect(&mut self, frame_id: u32) -> Option<Message> {
        let f = self.frame.as_mut().filter(|f| f.frame_id == frame_id)?;
        let detections = match self.perception.prepare(&f.raw) {
            Ok(p) => {
                let d = self.perception.detect(&p, &f.gt, f.seed);
                f.prepared = Some(p);
                d
            }
            Err(e) => {
                log::warn!("frame {frame_id}: {e}");
                Vec::new()
            }
        };
        let requested = self.plc.request().actionable();
        let seen: BTreeSet<u32> = detections.iter().flat_map(|d| d.sources.iter().copied()).collect();
        self.missed += f
            .gt
            .iter()
            .filter(|g| requested.contains_key(&g.class_label) && !seen.contains(&g.object_id))
            .count() as u64;
        f.detections = detections;
        let wire = f
            .detections
            .iter()
            .map(|d| WireDetection {
                class_label: d.class_label.clone(),
                confidence: d.confidence as f32,
                u_min: d.bbox.u_min as f32,
                v_min: d.bbox.v_min as f32,
                u_max: d.bbox.u_max as f32,
                v_max: d.bbox.v_max as f32,
                sources: d.sources.clone(),
            })
            .collect();
        Some(Message::DetectionResult(DetectionResult {
            frame_id,
            detections: wire,
        }))
    }

    fn npu_plan(&mut self, frame_id: u32, detection: Option<u32>) -> Option<Message> {
        let f = self.frame.as_ref().filter(|f| f.frame_id == frame_id)?;
        let idx = detection?;
        let plan = f
            .prepared
            .as_ref()
            .zip(f.detections.get(idx as usize))
            .and_then(|(p, d)| self.perception.plan(p, d).ok());
        let grasp = plan.as_ref().map(|p| WireGrasp {
            u: p.u as f32,
            v: p.v as f32,
            theta: p.theta as f32,
            z: p.z as f32,
            quality: p.quality as f32,
        });
        self.last_plan = plan.map(|p| (frame_id, p));
        Some(Message::GraspResult(GraspResult {
            frame_id,
            detection: idx,
            grasp,
        }))
    }

    fn device(&mut self, job: Job) {
        match job {
            Job::Captured { frame_id } => {
                let cam = self.cfg.camera;
                let seed = self.frame_seed(frame_id);
                let raw = render_depth(&self.scene, &cam.intrinsics, &cam.pose, &self.cfg.noise, seed);
                let gt = render_ground_truth(&self.scene, &cam.intrinsics, &cam.pose);
                let (Ok(raw), Ok(gt)) = (raw, gt) else {
                    log::error!("camera cannot see the bin");
                    return;
                };
                self.frames += 1;
                let ready = FrameReady {
                    frame_id,
                    width: raw.width as u32,
                    height: raw.height as u32,
                    holes: raw.hole_count() as u32,
                };
                self.frame = Some(Captured {
                    frame_id,
                    seed,
                    raw,
                    gt,
                    prepared: None,
                    detections: Vec::new(),
                });
                self.send(Node::Camera, Node::Plc, &Message::FrameReady(ready));
            }
            Job::NpuDone { reply } => {
                self.send(Node::Npu, Node::Plc, &reply);
                self.npu_busy = false;
                if let Some(next) = self.npu_slot.take() {
                    self.npu_start(next);
                }
            }
            Job::RobotArrived { move_id, epoch, to } => {
                if epoch != self.robot_epoch {
                    return;
                }
                self.robot_pos = to;
                let st = RobotStatus {
                    move_id,
                    done: true,
                    x: to.x as f32,
                    y: to.y as f32,
                    z: to.z as f32,
                };
                self.send(Node::Robot, Node::Plc, &Message::RobotStatus(st));
            }
            Job::GripperDone { cmd, epoch } => {
                if epoch != self.gripper_epoch {
                    return;
                }
                match cmd.command {
                    GripperCommand::Close => self.close_gripper(),
                    GripperCommand::Open => {
                        self.gripper_width = self.cfg.gripper.max_opening;
                        self.holding = None;
                    }
                    GripperCommand::Read => {}
                }
                let st = GripperStatus {
                    cmd_id: cmd.cmd_id,
                    command: cmd.command,
                    width: self.gripper_width as f32,
                };
                self.send(Node::Gripper, Node::Plc, &Message::GripperStatus(st));
            }
        }
    }

    fn close_gripper(&mut self) {
        let Some(grasp) = self.robot_at_grasp else {
            self.gripper_width = 0.0;
            return;
        };
        let plan = self
            .last_plan
            .as_ref()
            .filter(|(fid, _)| *fid == self.plc.frame_id())
            .map(|(_, p)| p.clone());
        let merged = self.plc.selected().is_some_and(|d| d.is_merged());
        let target_class = self.plc.selected().map(|d| d.class_label.clone()).unwrap_or_default();
        // judged before the scene changes
        let bulge = plan.as_ref().is_some_and(|p| p.center_was_hole && self.is_bulge(p));
        let outcome = apply_grasp(
            &mut self.scene,
            &grasp,
            &self.cfg.gripper,
            &self.cfg.adjudication,
            self.cfg.slip_rate,
            &mut self.slip_rng,
        );
        let (success, removed, reason, width) = match outcome {
            Ok(o) => (o.success, o.removed_object_id, o.failure_reason, if o.success { o.closed_width } else { 0.0 }),
            Err(_) => (false, None, Some(FailureReason::EmptyClosure), 0.0),
        };
        self.gripper_width = width;
        self.holding = removed;
        let removed_class = removed.and_then(|id| self.removed_class(id));
        let failure = if success {
            None
        } else if merged {
            Some(MERGED_BOXES.to_string())
        } else if bulge {
            Some(INPAINT_BULGE.to_string())
        } else {
            reason.map(|r| r.name().to_string())
        };
        self.picks.push(PickRecord {
            index: self.picks.len() as u32,
            t_ms: self.now as f64 / 1000.0,
            frame_id: self.plc.frame_id(),
            target_class,
            removed_object: removed,
            removed_class,
            success,
            failure,
            adjudicated: reason.map(|r| r.name().to_string()),
            merged_detection: merged,
            center_was_hole: plan.as_ref().is_some_and(|p| p.center_was_hole),
            quality: plan.as_ref().map_or(0.0, |p| p.quality),
            x: grasp.x,
            y: grasp.y,
            z: grasp.z,
            yaw: grasp.yaw,
        });
    }

    fn removed_class(&self, id: u32) -> Option<String> {
        self.labels.get(&id).cloned()
    }

    /// The planned depth sits on a surface that is not really there.
    fn is_bulge(&self, plan: &Plan) -> bool {
        let cam = self.cfg.camera;
        let Ok(clean) = render_depth(&self.scene, &cam.intrinsics, &cam.pose, &NoiseParams::zero(), 0) else {
            return false;
        };
        clean
            .sample(plan.u, plan.v)
            .is_some_and(|d| (d - plan.z).abs() > BULGE_TOL)
    }

    fn scan(&mut self) {
        self.scans.remove(&self.now);
        self.last_scan = Some(self.now);
        let out = self.plc.scan(self.now);
        for (to, msg) in out {
            self.send(Node::Plc, to, &msg);
        }
        if self.plc.controller.pending() > 0 {
            self.schedule_scan(self.now);
        }
        self.schedule_timers();
        self.check_stop();
    }

    fn check_stop(&mut self) {
        let state = self.plc.state();
        self.stop = match state {
            CellState::Done => Some(StopReason::Done),
            CellState::ReportingUnavailable => Some(StopReason::ReportingUnavailable),
            CellState::Halted => Some(StopReason::Halted),
            _ => None,
        };
        if self.stop.is_some() || state != CellState::CaptureFrame {
            return;
        }
        let total = self.requested_total.max(1);
        let attempts = (self.picks.len() - self.picks_at_request) as u32;
        if attempts >= self.cfg.pick_cap_factor * total {
            self.stop = Some(StopReason::PickCap);
        } else if self.frames >= 20 * total + 20 {
            self.stop = Some(StopReason::FrameCap);
        }
    }

    /// Depth colormap with boxes and the grasp axis of the latest frame.
    pub fn overlay_png(&self) -> Option<Vec<u8>> {
        let f = self.frame.as_ref()?;
        let prepared = f.prepared.as_ref();
        let depth = prepared.map_or(&f.raw, |p| &p.frame);
        let grasp = self.last_plan.as_ref().filter(|(id, _)| *id == f.frame_id).map(|(_, p)| {
            let (u, v) = prepared.map_or((p.u, p.v), |pp| pp.transform.forward(p.u, p.v));
            (u, v, p.theta, p.opening_px)
        });
        Some(render_overlay(
            depth,
            &f.detections,
            self.plc.selected_index(),
            grasp,
            &OverlayStyle::default(),
        ))
    }
}
