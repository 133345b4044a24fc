use crate::bbox::BoundingBox;
use crate::rng::{stream_rng2, STREAM_DETECT};
use crate::scene::GroundTruth;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub class_label: String,
    pub confidence: f64,
    /// Ground-truth objects behind this detection. Emulation provenance for
    /// failure accounting; the controller never looks at it.
    #[serde(default)]
    pub sources: Vec<u32>,
}

impl Detection {
    pub fn is_merged(&self) -> bool {
        self.sources.len() > 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    /// (occlusion, miss probability) knots, linearly interpolated.
    pub miss_curve: Vec<(f64, f64)>,
    pub jitter_sigma: f64,
    pub merge_iou_threshold: f64,
    /// Score of an unoccluded, unjittered object.
    pub confidence_base: f64,
    /// Score lost per unit occlusion.
    pub confidence_occlusion: f64,
    /// Score lost per pixel of mean corner displacement.
    pub confidence_jitter: f64,
    pub seed: u64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            miss_curve: vec![(0.0, 0.02), (0.5, 0.3), (1.0, 1.0)],
            jitter_sigma: 2.0,
            merge_iou_threshold: 0.5,
            confidence_base: 0.95,
            confidence_occlusion: 0.5,
            confidence_jitter: 0.02,
            seed: 0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), String> {
        let c = &self.miss_curve;
        if c.is_empty() {
            return Err("miss_curve is empty".into());
        }
        if c.windows(2).any(|w| !(w[0].0 < w[1].0) || w[1].1 < w[0].1) {
            return Err("miss_curve must be increasing in occlusion and non-decreasing in probability".into());
        }
        if c.iter().any(|(o, p)| !(0.0..=1.0).contains(o) || !(0.0..=1.0).contains(p)) {
            return Err("miss_curve entries must lie in [0, 1]".into());
        }
        if self.miss_probability(1.0) != 1.0 {
            return Err("miss probability must be 1 at full occlusion".into());
        }
        if !(self.jitter_sigma >= 0.0) || !(0.0..=1.0).contains(&self.merge_iou_threshold) {
            return Err("jitter_sigma must be >= 0 and merge_iou_threshold in [0, 1]".into());
        }
        Ok(())
    }

    pub fn miss_probability(&self, occlusion: f64) -> f64 {
        let c = &self.miss_curve;
        if occlusion >= 1.0 {
            // fully covered objects are never seen, whatever the table says
            return 1.0;
        }
        if occlusion <= c[0].0 {
            return c[0].1;
        }
        for w in c.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if occlusion <= x1 {
                return y0 + (y1 - y0) * (occlusion - x0) / (x1 - x0);
            }
        }
        c[c.len() - 1].1
    }
}

/// Emulated detector: per-object miss draw, Gaussian corner jitter, then
/// same-class merging of boxes overlapping above the IoU threshold.
/// `width x height` is the frame the boxes are clamped to.
pub fn detect(
    gt: &[GroundTruth],
    params: &DetectorParams,
    frame_seed: u64,
    width: usize,
    height: usize,
) -> Vec<Detection> {
    let mut rng = stream_rng2(params.seed, STREAM_DETECT, frame_seed);
    let jitter = Normal::new(0.0, params.jitter_sigma.max(0.0)).expect("finite sigma");
    let mut dets = Vec::new();
    for g in gt {
        // fixed number of draws per object keeps the stream aligned
        let miss: f64 = rng.random();
        let d: [f64; 4] = std::array::from_fn(|_| jitter.sample(&mut rng));
        if g.degenerate || miss < params.miss_probability(g.occlusion) {
            continue;
        }
        let b = &g.bbox;
        let (mut u0, mut v0, mut u1, mut v1) = (b.u_min + d[0], b.v_min + d[1], b.u_max + d[2], b.v_max + d[3]);
        if u1 - u0 < 1.0 {
            let c = 0.5 * (u0 + u1);
            (u0, u1) = (c - 0.5, c + 0.5);
        }
        if v1 - v0 < 1.0 {
            let c = 0.5 * (v0 + v1);
            (v0, v1) = (c - 0.5, c + 0.5);
        }
        let bbox = BoundingBox::new(u0, v0, u1, v1).clamp_to(width, height);
        if !bbox.is_proper() {
            continue;
        }
        let mean_jitter = d.iter().map(|x| x.abs()).sum::<f64>() / 4.0;
        let confidence = (params.confidence_base
            - params.confidence_occlusion * g.occlusion
            - params.confidence_jitter * mean_jitter)
            .clamp(0.05, 1.0);
        dets.push(Detection {
            bbox,
            class_label: g.class_label.clone(),
            confidence,
            sources: vec![g.object_id],
        });
    }
    merge_same_class(dets, params.merge_iou_threshold)
}

/// Repeatedly fuse the first same-class pair above `threshold` until none
/// is left; the survivor keeps the earlier slot.
fn merge_same_class(mut dets: Vec<Detection>, threshold: f64) -> Vec<Detection> {
    'outer: loop {
        for i in 0..dets.len() {
            for j in i + 1..dets.len() {
                if dets[i].class_label == dets[j].class_label && dets[i].bbox.iou(&dets[j].bbox) > threshold {
                    let other = dets.remove(j);
                    let keep = &mut dets[i];
                    keep.bbox = keep.bbox.union(&other.bbox);
                    keep.confidence = keep.confidence.max(other.confidence);
                    keep.sources.extend(other.sources);
                    continue 'outer;
                }
            }
        }
        return dets;
    }
}
