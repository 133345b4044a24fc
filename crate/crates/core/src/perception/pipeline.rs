use super::crop::{crop_to_box, Crop};
use super::detect::{detect, Detection, DetectorParams};
use super::inpaint::inpaint;
use super::plan::{plan_grasp, GraspMap};
use super::preprocess::{preprocess_depth, Roi};
use super::quality::QualityParams;
use super::PerceptionError;
use crate::bbox::BoundingBox;
use crate::depth::{DepthFrame, PixelTransform};
use crate::gripper::GripperParams;
use crate::scene::GroundTruth;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionParams {
    /// Region of the raw frame kept by preprocessing; whole frame if unset.
    pub roi: Option<Roi>,
    /// Preprocessed size; the roi size if unset.
    pub out_dims: Option<(usize, usize)>,
    pub crop_size: usize,
    pub crop_pad: f64,
    pub stride: usize,
    pub angular_bins: usize,
    pub quality: QualityParams,
}

impl Default for PerceptionParams {
    fn default() -> Self {
        Self {
            roi: None,
            out_dims: None,
            crop_size: 96,
            crop_pad: 10.0,
            stride: 4,
            angular_bins: 16,
            quality: QualityParams::default(),
        }
    }
}

impl PerceptionParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.crop_size == 0 || self.stride == 0 || self.angular_bins == 0 {
            return Err("crop_size, stride and angular_bins must be positive".into());
        }
        if !(self.crop_pad >= 0.0) {
            return Err("crop_pad must be non-negative".into());
        }
        let q = &self.quality;
        if !(q.edge_delta > 0.0) || !(0.0..1.0).contains(&q.margin) {
            return Err("edge_delta must be positive and margin in [0, 1)".into());
        }
        Ok(())
    }
}

/// A preprocessed, inpainted frame ready for detection and planning.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub frame: DepthFrame,
    /// Raw to preprocessed pixels.
    pub transform: PixelTransform,
    /// Hole mask of the preprocessed frame before inpainting.
    pub holes: Vec<bool>,
}

/// Planned grasp mapped back to raw-frame pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub crop: Crop,
    pub map: GraspMap,
    pub u: f64,
    pub v: f64,
    pub theta: f64,
    pub z: f64,
    pub quality: f64,
    /// Opening in raw-frame pixels at depth `z`, for drawing.
    pub opening_px: f64,
    /// The grasp center was filled in by inpainting.
    pub center_was_hole: bool,
}

#[derive(Debug, Clone)]
pub struct Perception {
    pub params: PerceptionParams,
    pub detector: DetectorParams,
    pub gripper: GripperParams,
}

impl Perception {
    pub fn new(params: PerceptionParams, detector: DetectorParams, gripper: GripperParams) -> Self {
        Self {
            params,
            detector,
            gripper,
        }
    }

    /// Preprocess then inpaint.
    pub fn prepare(&self, raw: &DepthFrame) -> Result<PipelineOutput, PerceptionError> {
        let roi = self.params.roi.unwrap_or(Roi::full(raw));
        let (w, h) = self.params.out_dims.unwrap_or((roi.w, roi.h));
        let pre = preprocess_depth(raw, roi, w, h)?;
        let holes = pre.valid.iter().map(|v| !v).collect();
        let frame = inpaint(&pre)?;
        Ok(PipelineOutput {
            frame,
            transform: roi.transform(w, h),
            holes,
        })
    }

    /// Emulated detection on raw-frame annotations, reported in
    /// preprocessed pixels.
    pub fn detect(&self, prepared: &PipelineOutput, gt: &[GroundTruth], frame_seed: u64) -> Vec<Detection> {
        let t = &prepared.transform;
        let mapped: Vec<GroundTruth> = gt
            .iter()
            .map(|g| {
                let (a, b) = t.forward(g.bbox.u_min, g.bbox.v_min);
                let (c, d) = t.forward(g.bbox.u_max, g.bbox.v_max);
                GroundTruth {
                    bbox: BoundingBox::new(a, b, c, d),
                    ..g.clone()
                }
            })
            .collect();
        detect(&mapped, &self.detector, frame_seed, prepared.frame.width, prepared.frame.height)
    }

    /// Crop around a detection and plan the best grasp inside its box.
    pub fn plan(&self, prepared: &PipelineOutput, det: &Detection) -> Result<Plan, PerceptionError> {
        let p = &self.params;
        let crop = crop_to_box(&prepared.frame, &det.bbox, p.crop_size, p.crop_size, p.crop_pad)?;
        let map = plan_grasp(
            &crop.frame,
            &crop.bbox,
            &self.gripper,
            &crop.frame.intrinsics,
            p.stride,
            p.angular_bins,
            &p.quality,
        )?;
        let b = map.best;
        let full = crop.transform.after(&prepared.transform);
        let (u, v) = full.backward(b.u, b.v);
        // direction through the (possibly anisotropic) inverse scaling
        let (dx, dy) = (b.theta.cos() / full.scale_u, b.theta.sin() / full.scale_v);
        let theta = dy.atan2(dx).rem_euclid(std::f64::consts::PI);
        let (pu, pv) = crop.to_full(b.u, b.v);
        let center_was_hole = prepared
            .frame
            .sample(pu, pv)
            .is_some_and(|_| prepared.holes[prepared.frame.index(pu as usize, pv as usize)]);
        let opening_px = self.gripper.max_opening * crop.frame.intrinsics.fx / b.z / full.scale_u;
        Ok(Plan {
            crop,
            map,
            u,
            v,
            theta,
            z: b.z,
            quality: b.quality,
            opening_px,
            center_was_hole,
        })
    }
}

/// Single-slot job queue: a newer submission replaces a pending one, as
/// the perception module works on one frame at a time.
#[derive(Debug, Clone)]
pub struct PerceptionService<T> {
    pending: Option<T>,
    pub replaced: u64,
}

impl<T> Default for PerceptionService<T> {
    fn default() -> Self {
        Self {
            pending: None,
            replaced: 0,
        }
    }
}

impl<T> PerceptionService<T> {
    pub fn submit(&mut self, job: T) {
        if self.pending.replace(job).is_some() {
            self.replaced += 1;
        }
    }

    pub fn take(&mut self) -> Option<T> {
        self.pending.take()
    }

    pub fn is_busy(&self) -> bool {
        self.pending.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{overhead_pose, CameraIntrinsics};
    use crate::scene::{catalog, render_depth, render_ground_truth, BinDims, NoiseParams, Pose2, Scene, SceneObject};

    #[test]
    fn plans_on_rendered_block() {
        let cam = CameraIntrinsics::default();
        let pose = overhead_pose(0.225, 0.125, 0.65);
        let mut s = Scene::empty(BinDims::default(), 0);
        s.objects.push(SceneObject::from_template(0, &catalog::block(), Pose2 { x: 0.2, y: 0.1, yaw: 0.2 }));
        let raw = render_depth(&s, &cam, &pose, &NoiseParams::default(), 3).unwrap();
        let gt = render_ground_truth(&s, &cam, &pose).unwrap();
        let p = Perception::new(
            PerceptionParams::default(),
            DetectorParams {
                miss_curve: vec![(0.0, 0.0), (1.0, 1.0)],
                ..Default::default()
            },
            GripperParams::default(),
        );
        let prepared = p.prepare(&raw).unwrap();
        assert_eq!(prepared.frame.hole_count(), 0);
        let dets = p.detect(&prepared, &gt, 0);
        assert_eq!(dets.len(), 1);
        let plan = p.plan(&prepared, &dets[0]).unwrap();
        assert!(plan.quality > 0.5);
        assert!(gt[0].bbox.contains(plan.u, plan.v));
        assert!((plan.z - 0.615).abs() < 0.005, "z {}", plan.z);
    }

    #[test]
    fn newest_job_wins() {
        let mut s = PerceptionService::default();
        s.submit(1);
        s.submit(2);
        assert_eq!(s.take(), Some(2));
        assert_eq!(s.replaced, 1);
        assert!(!s.is_busy());
    }
}
