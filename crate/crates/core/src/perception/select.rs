use super::Detection;
use crate::bbox::BoundingBox;
use std::collections::BTreeMap;

/// Total area of `boxes[i]` shared with every other box, as a fraction of
/// its own area.
pub fn pairwise_overlap_score(boxes: &[BoundingBox], i: usize) -> f64 {
    let own = boxes[i].area();
    if own <= 0.0 {
        return 0.0;
    }
    let shared: f64 = boxes
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, b)| boxes[i].intersection_area(b))
        .sum();
    shared / own
}

/// Detections of still-requested classes, best first: least overlap with
/// all detections, then higher confidence, then lower index.
pub fn rank_candidates(detections: &[Detection], remaining: &BTreeMap<String, u32>) -> Vec<usize> {
    let boxes: Vec<BoundingBox> = detections.iter().map(|d| d.bbox).collect();
    let mut ranked: Vec<(f64, usize)> = detections
        .iter()
        .enumerate()
        .filter(|(_, d)| remaining.get(&d.class_label).is_some_and(|n| *n > 0))
        .map(|(i, _)| (pairwise_overlap_score(&boxes, i), i))
        .collect();
    ranked.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(detections[b.1].confidence.total_cmp(&detections[a.1].confidence))
            .then(a.1.cmp(&b.1))
    });
    ranked.into_iter().map(|(_, i)| i).collect()
}

pub fn select_object(detections: &[Detection], remaining: &BTreeMap<String, u32>) -> Option<usize> {
    rank_candidates(detections, remaining).first().copied()
}
