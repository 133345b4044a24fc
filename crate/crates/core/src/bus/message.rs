//! Typed payloads. Every float on the wire is an `f32` so that the
//! shortest decimal form round-trips exactly.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameStage {
    Capture,
    Detect,
    Plan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveTarget {
    Grasp,
    Place,
    Home,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GripperCommand {
    Close,
    Open,
    Read,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireDetection {
    pub class_label: String,
    pub confidence: f32,
    pub u_min: f32,
    pub v_min: f32,
    pub u_max: f32,
    pub v_max: f32,
    pub sources: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireGrasp {
    pub u: f32,
    pub v: f32,
    pub theta: f32,
    pub z: f32,
    pub quality: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PickRequestMsg {
    pub request_id: u32,
    pub items: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerFrame {
    pub frame_id: u32,
    pub stage: FrameStage,
    /// Detection index to plan for; only with `stage = Plan`.
    pub detection: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameReady {
    pub frame_id: u32,
    pub width: u32,
    pub height: u32,
    pub holes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionResult {
    pub frame_id: u32,
    pub detections: Vec<WireDetection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspResult {
    pub frame_id: u32,
    pub detection: u32,
    pub grasp: Option<WireGrasp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotMove {
    pub move_id: u32,
    pub target: MoveTarget,
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub yaw: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotStatus {
    pub move_id: u32,
    pub done: bool,
    pub x: f32,
    pub y: f32,
    pub z: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperCmd {
    pub cmd_id: u32,
    pub command: GripperCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperStatus {
    pub cmd_id: u32,
    pub command: GripperCommand,
    /// Jaw separation, meters.
    pub width: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EStop {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heartbeat {
    pub component: String,
    pub schema: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmiEvent {
    pub kind: String,
    pub state: String,
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    PickRequest(PickRequestMsg),
    TriggerFrame(TriggerFrame),
    FrameReady(FrameReady),
    DetectionResult(DetectionResult),
    GraspResult(GraspResult),
    RobotMove(RobotMove),
    RobotStatus(RobotStatus),
    GripperCmd(GripperCmd),
    GripperStatus(GripperStatus),
    EStop(EStop),
    Heartbeat(Heartbeat),
    HmiEvent(HmiEvent),
}

/// Payload schema revision carried by heartbeats.
pub const SCHEMA_VERSION: u32 = 1;

impl Message {
    pub fn type_code(&self) -> u8 {
        match self {
            Message::PickRequest(_) => 0x01,
            Message::TriggerFrame(_) => 0x02,
            Message::FrameReady(_) => 0x03,
            Message::DetectionResult(_) => 0x04,
            Message::GraspResult(_) => 0x05,
            Message::RobotMove(_) => 0x06,
            Message::RobotStatus(_) => 0x07,
            Message::GripperCmd(_) => 0x08,
            Message::GripperStatus(_) => 0x09,
            Message::EStop(_) => 0x0A,
            Message::Heartbeat(_) => 0x0B,
            Message::HmiEvent(_) => 0x0C,
        }
    }

    pub fn type_name(code: u8) -> Option<&'static str> {
        Some(match code {
            0x01 => "PickRequest",
            0x02 => "TriggerFrame",
            0x03 => "FrameReady",
            0x04 => "DetectionResult",
            0x05 => "GraspResult",
            0x06 => "RobotMove",
            0x07 => "RobotStatus",
            0x08 => "GripperCmd",
            0x09 => "GripperStatus",
            0x0A => "EStop",
            0x0B => "Heartbeat",
            0x0C => "HmiEvent",
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        Self::type_name(self.type_code()).expect("every variant has a name")
    }

    pub fn is_estop(&self) -> bool {
        matches!(self, Message::EStop(_))
    }

    pub fn payload_value(&self) -> Result<serde_json::Value, serde_json::Error> {
        match self {
            Message::PickRequest(m) => serde_json::to_value(m),
            Message::TriggerFrame(m) => serde_json::to_value(m),
            Message::FrameReady(m) => serde_json::to_value(m),
            Message::DetectionResult(m) => serde_json::to_value(m),
            Message::GraspResult(m) => serde_json::to_value(m),
            Message::RobotMove(m) => serde_json::to_value(m),
            Message::RobotStatus(m) => serde_json::to_value(m),
            Message::GripperCmd(m) => serde_json::to_value(m),
            Message::GripperStatus(m) => serde_json::to_value(m),
            Message::EStop(m) => serde_json::to_value(m),
            Message::Heartbeat(m) => serde_json::to_value(m),
            Message::HmiEvent(m) => serde_json::to_value(m),
        }
    }

    pub(crate) fn from_payload(code: u8, payload: &[u8]) -> Result<Message, String> {
        fn p<T: for<'de> Deserialize<'de>>(b: &[u8]) -> Result<T, String> {
            serde_json::from_slice(b).map_err(|e| e.to_string())
        }
        Ok(match code {
            0x01 => Message::PickRequest(p(payload)?),
            0x02 => Message::TriggerFrame(p(payload)?),
            0x03 => Message::FrameReady(p(payload)?),
            0x04 => Message::DetectionResult(p(payload)?),
            0x05 => Message::GraspResult(p(payload)?),
            0x06 => Message::RobotMove(p(payload)?),
            0x07 => Message::RobotStatus(p(payload)?),
            0x08 => Message::GripperCmd(p(payload)?),
            0x09 => Message::GripperStatus(p(payload)?),
            0x0A => Message::EStop(p(payload)?),
            0x0B => Message::Heartbeat(p(payload)?),
            0x0C => Message::HmiEvent(p(payload)?),
            other => return Err(format!("unknown message type 0x{other:02X}")),
        })
    }
}
