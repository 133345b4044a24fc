use crate::camera::CameraIntrinsics;
use crate::depth::DepthFrame;
use crate::gripper::GripperParams;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityParams {
    /// Depth rise (meters) that marks an object edge.
    pub edge_delta: f64,
    /// Edge separation must stay below `(1 - margin)` of the opening.
    pub margin: f64,
}

impl Default for QualityParams {
    fn default() -> Self {
        Self {
            edge_delta: 0.008,
            margin: 0.05,
        }
    }
}

/// Factors of one evaluated grasp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspEval {
    pub quality: f64,
    pub z: f64,
    pub w_fit: f64,
    pub w_align: f64,
    pub w_clear: f64,
    /// Edge distances from the center in pixels, (left, right).
    pub edges: Option<(f64, f64)>,
}

impl GraspEval {
    fn zero(z: f64) -> Self {
        Self {
            quality: 0.0,
            z,
            w_fit: 0.0,
            w_align: 0.0,
            w_clear: 0.0,
            edges: None,
        }
    }
}

const STEP: f64 = 0.5;
const PAD_STEP: f64 = 2.0;

/// Undirected axis angle in [0, pi), snapped so that theta and theta + pi
/// give the same sampling direction.
fn canonical_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    let t = (t * 1e12).round() / 1e12;
    if t >= PI - 1e-12 {
        0.0
    } else {
        t
    }
}

/// Depth gradient by Sobel at the pixel containing (u, v), border-clamped.
fn gradient(depth: &DepthFrame, u: f64, v: f64) -> (f64, f64) {
    let clamp = |x: isize, n: usize| x.clamp(0, n as isize - 1) as usize;
    let (i, j) = (u.floor() as isize, v.floor() as isize);
    let d = |di: isize, dj: isize| depth.at(clamp(i + di, depth.width), clamp(j + dj, depth.height));
    let gx = (d(1, -1) + 2.0 * d(1, 0) + d(1, 1)) - (d(-1, -1) + 2.0 * d(-1, 0) + d(-1, 1));
    let gy = (d(-1, 1) + 2.0 * d(0, 1) + d(1, 1)) - (d(-1, -1) + 2.0 * d(0, -1) + d(1, -1));
    (gx, gy)
}

/// First distance along `dir` where depth exceeds `z + delta`, up to `reach`.
fn find_edge(depth: &DepthFrame, u: f64, v: f64, dir: (f64, f64), z: f64, delta: f64, reach: f64) -> Option<f64> {
    let mut t = STEP;
    while t <= reach + 1e-9 {
        let d = depth.sample(u + t * dir.0, v + t * dir.1)?;
        if d - z > delta {
            return Some(t);
        }
        t += STEP;
    }
    None
}

/// Analytic antipodal quality of a top-down grasp centered at continuous
/// pixel (u, v) with closing axis at `theta`, on an inpainted frame.
pub fn grasp_quality(
    depth: &DepthFrame,
    u: f64,
    v: f64,
    theta: f64,
    g: &GripperParams,
    cam: &CameraIntrinsics,
    qp: &QualityParams,
) -> f64 {
    evaluate_grasp(depth, u, v, theta, g, cam, qp).quality
}

pub fn evaluate_grasp(
    depth: &DepthFrame,
    u: f64,
    v: f64,
    theta: f64,
    g: &GripperParams,
    cam: &CameraIntrinsics,
    qp: &QualityParams,
) -> GraspEval {
    let z = match depth.sample(u, v) {
        Some(z) if z.is_finite() && z > 0.0 => z,
        _ => return GraspEval::zero(0.0),
    };
    let px_per_m = cam.fx / z;
    let open = g.max_opening * px_per_m;
    let (s, c) = canonical_angle(theta).sin_cos();
    let right = (c, s);
    let left = (-c, -s);

    let (Some(er), Some(el)) = (
        find_edge(depth, u, v, right, z, qp.edge_delta, open / 2.0),
        find_edge(depth, u, v, left, z, qp.edge_delta, open / 2.0),
    ) else {
        return GraspEval::zero(z);
    };
    // contacts sit between the last sample on the object and the first off it
    let (cr, cl) = (er - STEP / 2.0, el - STEP / 2.0);
    let mut eval = GraspEval {
        edges: Some((cl, cr)),
        ..GraspEval::zero(z)
    };
    if cr + cl > open * (1.0 - qp.margin) {
        return eval;
    }
    eval.w_fit = 1.0;

    // antipodality over each jaw pad: the mean, across the pad width, of
    // the edge normal's alignment with the closing direction (zero where
    // the pad finds no edge or the normal leaves the friction cone)
    let cone = g.friction_cos();
    let flat = 2.0 * qp.edge_delta;
    let half_pad = g.jaw_width / 2.0 * px_per_m;
    let (nu, nv) = (-s, c);
    let pad = |contact: f64, d: (f64, f64)| {
        let n = (2.0 * half_pad / PAD_STEP).floor().max(0.0) as usize + 1;
        let mut sum = 0.0;
        for i in 0..n {
            let w = -half_pad + i as f64 * PAD_STEP;
            let mut best: Option<(f64, f64, f64)> = None;
            for shift in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                let t = contact + shift;
                let (pu, pv) = (u + t * d.0 + w * nu, v + t * d.1 + w * nv);
                if depth.sample(pu, pv).is_none() {
                    continue;
                }
                let (gx, gy) = gradient(depth, pu, pv);
                let m = (gx * gx + gy * gy).sqrt();
                if best.is_none_or(|b| m > b.2) {
                    best = Some((gx, gy, m));
                }
            }
            if let Some((gx, gy, m)) = best {
                if m >= flat {
                    let a = (gx * d.0 + gy * d.1) / m;
                    if a >= cone {
                        sum += a;
                    }
                }
            }
        }
        sum / n as f64
    };
    eval.w_align = pad(cr, right) * pad(cl, left);
    if eval.w_align == 0.0 {
        return eval;
    }

    // the jaws sweep in from full opening: nothing may stand above their
    // tips between the contact edge and the outer jaw face
    let tip = z + g.insertion_depth;
    let outer = open / 2.0 + (g.jaw_thickness + g.clearance) * px_per_m;
    let half = (g.jaw_width / 2.0 + g.clearance) * px_per_m;
    for (edge, dir) in [(er, right), (el, left)] {
        let mut t = edge + 1.0;
        while t <= outer {
            let mut w = -half;
            while w <= half {
                let (pu, pv) = (u + t * dir.0 + w * nu, v + t * dir.1 + w * nv);
                if let Some(d) = depth.sample(pu, pv) {
                    if d < tip {
                        return eval;
                    }
                }
                w += 1.0;
            }
            t += 1.0;
        }
    }
    eval.w_clear = 1.0;
    eval.quality = (eval.w_fit * eval.w_align * eval.w_clear).clamp(0.0, 1.0);
    eval
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam(w: usize, h: usize) -> CameraIntrinsics {
        CameraIntrinsics {
            width: w,
            height: h,
            cx: w as f64 / 2.0,
            cy: h as f64 / 2.0,
            ..Default::default()
        }
    }

    /// Floor at 0.65 m with axis-aligned blocks (u0, v0, u1, v1, height).
    fn scene(w: usize, h: usize, blocks: &[(usize, usize, usize, usize, f64)]) -> DepthFrame {
        let mut f = DepthFrame::filled(cam(w, h), 0.65);
        for &(u0, v0, u1, v1, ht) in blocks {
            for v in v0..v1 {
                for u in u0..u1 {
                    f.set(u, v, 0.65 - ht);
                }
            }
        }
        f
    }

    #[test]
    fn flat_floor_scores_zero() {
        let f = scene(96, 96, &[]);
        let g = GripperParams::default();
        assert_eq!(grasp_quality(&f, 48.5, 48.5, 0.3, &g, &f.intrinsics, &QualityParams::default()), 0.0);
    }

    #[test]
    fn block_across_minor_axis() {
        // 40 mm at 0.61 m and fx 500 is about 33 px
        let f = scene(160, 120, &[(50, 44, 100, 77, 0.04)]);
        let g = GripperParams::default();
        let e = evaluate_grasp(&f, 75.5, 60.5, PI / 2.0, &g, &f.intrinsics, &QualityParams::default());
        assert!(e.quality >= 0.7, "{e:?}");
        assert!((e.z - 0.61).abs() < 1e-12);
        // the long axis is too wide
        let e = evaluate_grasp(&f, 75.5, 60.5, 0.0, &g, &f.intrinsics, &QualityParams::default());
        assert_eq!(e.w_fit, 1.0);
        let wide = scene(240, 200, &[(70, 50, 170, 150, 0.04)]);
        for k in 0..16 {
            let q = grasp_quality(&wide, 120.5, 100.5, k as f64 * PI / 16.0, &g, &wide.intrinsics, &QualityParams::default());
            assert_eq!(q, 0.0);
        }
    }

    #[test]
    fn obstacle_in_jaw_sweep_blocks() {
        let free = scene(160, 120, &[(50, 44, 100, 77, 0.04)]);
        let walled = scene(160, 120, &[(50, 44, 100, 77, 0.04), (60, 20, 90, 30, 0.05)]);
        let g = GripperParams::default();
        let q = QualityParams::default();
        assert!(grasp_quality(&free, 75.5, 60.5, PI / 2.0, &g, &free.intrinsics, &q) > 0.0);
        assert_eq!(grasp_quality(&walled, 75.5, 60.5, PI / 2.0, &g, &walled.intrinsics, &q), 0.0);
        // a lower neighbor below the jaw tips does not matter
        let low = scene(160, 120, &[(50, 44, 100, 77, 0.04), (60, 20, 90, 30, 0.01)]);
        assert!(grasp_quality(&low, 75.5, 60.5, PI / 2.0, &g, &low.intrinsics, &q) > 0.0);
    }

    #[test]
    fn slanted_axis_is_outside_friction_cone() {
        let f = scene(160, 120, &[(50, 44, 100, 77, 0.04)]);
        let g = GripperParams::default();
        let q = QualityParams::default();
        // 0.6 rad off the side normals: fits, but cos(0.6) < cos(atan 0.5)
        let e = evaluate_grasp(&f, 75.5, 60.5, PI / 2.0 + 0.6, &g, &f.intrinsics, &q);
        assert_eq!(e.w_fit, 1.0);
        assert_eq!(e.quality, 0.0);
        // 0.3 rad off stays inside the cone
        let e = evaluate_grasp(&f, 75.5, 60.5, PI / 2.0 + 0.3, &g, &f.intrinsics, &q);
        assert!(e.w_align > 0.8);
    }

    #[test]
    fn axis_is_undirected() {
        let f = scene(160, 120, &[(50, 44, 100, 77, 0.04)]);
        let g = GripperParams::default();
        let q = QualityParams::default();
        for th in [0.1, 0.7, PI / 2.0, 2.5] {
            let a = grasp_quality(&f, 70.5, 58.5, th, &g, &f.intrinsics, &q);
            let b = grasp_quality(&f, 70.5, 58.5, th + PI, &g, &f.intrinsics, &q);
            assert_eq!(a, b);
        }
    }
}
