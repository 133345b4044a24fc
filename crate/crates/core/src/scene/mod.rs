//! Synthetic bins: generation, depth rendering, ground-truth annotation and
//! grasp adjudication against the noiseless world.
//!
//! The bin frame has its origin at a floor corner, x along the bin length,
//! y along its width and z up. Objects are top-view heightmap patches that
//! rest on whatever lies beneath them; later objects in [`Scene::objects`]
//! sit on top of earlier ones.

mod adjudicate;
pub mod catalog;
mod generate;
mod noise;
mod raster;
mod render;

pub use adjudicate::{
    apply_grasp, find_feasible_grasp, grasp_geometry, AdjudicationParams, FailureReason, GraspFit, GraspOutcome, WorldGrasp,
};
pub use catalog::{default_catalog, ObjectTemplate};
pub use generate::{generate_bin, generate_bin_with, Packing, PlacementFailure};
pub use noise::{sample_gp_noise, NoiseParams};
pub use raster::HeightField;
pub use render::{render_depth, render_ground_truth, GroundTruth};

use crate::canonical;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("grasp at ({x:.4}, {y:.4}) is outside the bin")]
    OutOfBounds { x: f64, y: f64 },
    #[error("camera must look down at the bin")]
    CameraNotOverhead,
    #[error("invalid scene: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinDims {
    pub length: f64,
    pub width: f64,
    pub depth: f64,
}

impl Default for BinDims {
    fn default() -> Self {
        Self {
            length: 0.45,
            width: 0.25,
            depth: 0.08,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Heightmap patch: `rows x cols` cells of `cell_size` meters, row-major,
/// heights above the surface the object rests on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub cols: usize,
    pub rows: usize,
    pub cell_size: f64,
    pub heights: Vec<f64>,
}

impl Footprint {
    pub fn length(&self) -> f64 {
        self.cols as f64 * self.cell_size
    }

    pub fn width(&self) -> f64 {
        self.rows as f64 * self.cell_size
    }

    /// Height at a local-frame point, 0 outside the patch.
    pub fn height_at(&self, lx: f64, ly: f64) -> f64 {
        let c = (lx + self.length() / 2.0) / self.cell_size;
        let r = (ly + self.width() / 2.0) / self.cell_size;
        if c < 0.0 || r < 0.0 {
            return 0.0;
        }
        let (c, r) = (c as usize, r as usize);
        if c >= self.cols || r >= self.rows {
            return 0.0;
        }
        self.heights[r * self.cols + c]
    }

    pub fn max_height(&self) -> f64 {
        self.heights.iter().cloned().fold(0.0, f64::max)
    }

    /// Local-frame centers of occupied cells.
    pub fn occupied_cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (half_l, half_w) = (self.length() / 2.0, self.width() / 2.0);
        (0..self.rows).flat_map(move |r| {
            (0..self.cols)
                .filter(move |c| self.heights[r * self.cols + c] > 0.0)
                .map(move |c| {
                    (
                        (c as f64 + 0.5) * self.cell_size - half_l,
                        (r as f64 + 0.5) * self.cell_size - half_w,
                    )
                })
        })
    }

    /// Minimum caliper width of the occupied cells in millimeters, over
    /// directions sampled every degree.
    pub fn min_width_mm(&self) -> f64 {
        let cells: Vec<(f64, f64)> = self.occupied_cells().collect();
        if cells.is_empty() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for deg in 0..180 {
            let (s, c) = (deg as f64).to_radians().sin_cos();
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (x, y) in &cells {
                let p = x * c + y * s;
                lo = lo.min(p);
                hi = hi.max(p);
            }
            best = best.min(hi - lo + self.cell_size);
        }
        best * 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    pub class_label: String,
    pub pose: Pose2,
    pub footprint: Footprint,
    pub graspable_width_mm: f64,
}

impl SceneObject {
    pub fn from_template(id: u32, template: &ObjectTemplate, pose: Pose2) -> Self {
        let graspable_width_mm = (template.footprint.min_width_mm() * 1e3).round() / 1e3;
        Self {
            id,
            class_label: template.class_label.clone(),
            pose,
            footprint: template.footprint.clone(),
            graspable_width_mm,
        }
    }

    /// Bin-frame point to object-local coordinates.
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.pose.yaw.sin_cos();
        let (dx, dy) = (x - self.pose.x, y - self.pose.y);
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Axis-aligned bin-frame bounds of the rotated patch.
    pub fn world_bounds(&self) -> (f64, f64, f64, f64) {
        let (s, c) = self.pose.yaw.sin_cos();
        let (hl, hw) = (self.footprint.length() / 2.0, self.footprint.width() / 2.0);
        let ex = (c * hl).abs() + (s * hw).abs();
        let ey = (s * hl).abs() + (c * hw).abs();
        (self.pose.x - ex, self.pose.y - ey, self.pose.x + ex, self.pose.y + ey)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub bin_dims: BinDims,
    pub objects: Vec<SceneObject>,
    pub rng_seed: u64,
}

impl Scene {
    pub fn empty(bin_dims: BinDims, rng_seed: u64) -> Self {
        Self {
            bin_dims,
            objects: Vec::new(),
            rng_seed,
        }
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn contains_class(&self, label: &str) -> bool {
        self.objects.iter().any(|o| o.class_label == label)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let mut ids: Vec<u32> = self.objects.iter().map(|o| o.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(SceneError::Invalid("duplicate object id".into()));
        }
        for o in &self.objects {
            if o.footprint.heights.iter().any(|h| !(*h >= 0.0)) {
                return Err(SceneError::Invalid(format!("object {} has negative height", o.id)));
            }
            if o.footprint.heights.len() != o.footprint.rows * o.footprint.cols {
                return Err(SceneError::Invalid(format!("object {} footprint shape", o.id)));
            }
            let (x0, y0, x1, y1) = o.world_bounds();
            let eps = 1e-9;
            if x0 < -eps || y0 < -eps || x1 > self.bin_dims.length + eps || y1 > self.bin_dims.width + eps {
                return Err(SceneError::Invalid(format!("object {} leaves the bin", o.id)));
            }
        }
        Ok(())
    }

    /// Canonical JSON (sorted keys, six-decimal floats).
    pub fn to_canonical_json(&self) -> String {
        canonical::to_canonical_string(self).expect("scene is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_min_width() {
        let b = catalog::block();
        assert!((b.footprint.min_width_mm() - 40.0).abs() < 1e-9);
    }

    #[test]
    fn local_frame_round_trip() {
        let o = SceneObject::from_template(
            1,
            &catalog::block(),
            Pose2 {
                x: 0.2,
                y: 0.1,
                yaw: 0.5,
            },
        );
        let (lx, ly) = o.to_local(0.2, 0.1);
        assert!(lx.abs() < 1e-15 && ly.abs() < 1e-15);
        let (s, c) = 0.5f64.sin_cos();
        let (lx, ly) = o.to_local(0.2 + 0.01 * c, 0.1 + 0.01 * s);
        assert!((lx - 0.01).abs() < 1e-12 && ly.abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_escaping_object() {
        let mut s = Scene::empty(BinDims::default(), 1);
        s.objects.push(SceneObject::from_template(
            0,
            &catalog::block(),
            Pose2 {
                x: 0.01,
                y: 0.1,
                yaw: 0.0,
            },
        ));
        assert!(s.validate().is_err());
    }
}
