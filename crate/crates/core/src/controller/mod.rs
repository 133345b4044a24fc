//! The PLC analog: automaton, scan executor, request bookkeeping, frame
//! transforms and motion timing.

mod dfa;
mod motion;
mod plc;
mod request;
mod scan;
mod transform;

pub use dfa::{dfa_step, Action, CellEvent, CellState, DfaContext, Stage};
pub use motion::{motion_time, travel_time, MotionProfile};
pub use plc::{CellLayout, Node, Plc};
pub use request::{update_request, ListStatus, PickRequest, RequestUpdate};
pub use scan::{Controller, Fault, ScanConfig, TransitionRecord};
pub use transform::{deproject, grasp_to_robot, to_robot_frame, yaw_to_robot, Extrinsics, RobotGrasp};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ControllerError {
    #[error("depth {0} is not positive")]
    BadDepth(f64),
}
