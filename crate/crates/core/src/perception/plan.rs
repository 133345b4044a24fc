use super::quality::{evaluate_grasp, QualityParams};
use super::PerceptionError;
use crate::bbox::BoundingBox;
use crate::camera::CameraIntrinsics;
use crate::depth::DepthFrame;
use crate::gripper::GripperParams;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspCandidate {
    pub u: f64,
    pub v: f64,
    pub theta: f64,
    pub z: f64,
    pub quality: f64,
}

/// Dense quality tensor, row-major over (row, column, angle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspMap {
    pub stride: usize,
    pub angular_bins: usize,
    pub grid_w: usize,
    pub grid_h: usize,
    pub q: Vec<f64>,
    pub best: GraspCandidate,
}

impl GraspMap {
    pub fn at(&self, col: usize, row: usize, k: usize) -> f64 {
        self.q[(row * self.grid_w + col) * self.angular_bins + k]
    }

    /// Pixel center of grid cell (col, row).
    pub fn center(&self, col: usize, row: usize) -> (f64, f64) {
        cell_center(self.stride, col, row)
    }

    pub fn to_json(&self) -> String {
        crate::canonical::to_canonical_string(self).expect("grasp map serializes")
    }
}

fn cell_center(stride: usize, col: usize, row: usize) -> (f64, f64) {
    ((col * stride) as f64 + 0.5, (row * stride) as f64 + 0.5)
}

/// Evaluate every (u, v, theta) on the grid and pick the best grasp whose
/// center lies inside `bbox` (crop pixels). Ties go to the lower linear
/// index.
pub fn plan_grasp(
    crop: &DepthFrame,
    bbox: &BoundingBox,
    g: &GripperParams,
    cam: &CameraIntrinsics,
    stride: usize,
    k: usize,
    qp: &QualityParams,
) -> Result<GraspMap, PerceptionError> {
    if stride == 0 || k == 0 {
        return Err(PerceptionError::Params("stride and angular bins must be at least 1".into()));
    }
    let grid_w = crop.width.div_ceil(stride);
    let grid_h = crop.height.div_ceil(stride);
    let mut q = vec![0.0; grid_w * grid_h * k];
    let mut best: Option<GraspCandidate> = None;
    for row in 0..grid_h {
        for col in 0..grid_w {
            let (u, v) = cell_center(stride, col, row);
            let inside = bbox.contains(u, v);
            for a in 0..k {
                let theta = a as f64 * PI / k as f64;
                let e = evaluate_grasp(crop, u, v, theta, g, cam, qp);
                q[(row * grid_w + col) * k + a] = e.quality;
                if inside && e.quality > best.map_or(0.0, |b| b.quality) {
                    best = Some(GraspCandidate {
                        u,
                        v,
                        theta,
                        z: e.z,
                        quality: e.quality,
                    });
                }
            }
        }
    }
    let best = best.ok_or(PerceptionError::NoFeasibleGrasp)?;
    Ok(GraspMap {
        stride,
        angular_bins: k,
        grid_w,
        grid_h,
        q,
        best,
    })
}
