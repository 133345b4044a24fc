//! The image path: preprocessing, inpainting, detection emulation,
//! least-overlap selection, cropping and dense grasp-quality planning.

mod crop;
mod detect;
mod inpaint;
mod overlay;
mod pipeline;
mod plan;
mod preprocess;
mod quality;
mod select;

pub use crate::gripper::GripperParams;
pub use crop::{crop_to_box, Crop};
pub use detect::{detect, Detection, DetectorParams};
pub use inpaint::inpaint;
pub use overlay::{render_overlay, OverlayStyle};
pub use pipeline::{Perception, PerceptionParams, PerceptionService, PipelineOutput, Plan};
pub use plan::{plan_grasp, GraspCandidate, GraspMap};
pub use preprocess::{preprocess_depth, Roi};
pub use quality::{evaluate_grasp, grasp_quality, GraspEval, QualityParams};
pub use select::{pairwise_overlap_score, rank_candidates, select_object};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("region of interest {0:?} is empty or leaves the frame")]
    BadRoi(Roi),
    #[error("frame has no valid pixel")]
    AllHoles,
    #[error("box ({}, {}, {}, {}) is degenerate or leaves the frame", .0.u_min, .0.v_min, .0.u_max, .0.v_max)]
    BadBox(crate::bbox::BoundingBox),
    #[error("no grasp with positive quality inside the box")]
    NoFeasibleGrasp,
    #[error("invalid parameters: {0}")]
    Params(String),
}
