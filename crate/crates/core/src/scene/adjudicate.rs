//! Ground-truth grasp adjudication on the noiseless height raster.

use super::raster::{HeightField, NO_OBJECT};
use super::{Scene, SceneError};
use crate::gripper::GripperParams;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Top-down grasp in the bin frame: jaw contact height `z` above the floor,
/// closing axis at angle `yaw` from +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldGrasp {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureReason {
    WidthExceeded,
    PoorAlignment,
    CollisionWithNeighbor,
    RandomSlip,
    EmptyClosure,
}

impl FailureReason {
    pub const ALL: [FailureReason; 5] = [
        FailureReason::WidthExceeded,
        FailureReason::PoorAlignment,
        FailureReason::CollisionWithNeighbor,
        FailureReason::RandomSlip,
        FailureReason::EmptyClosure,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FailureReason::WidthExceeded => "WidthExceeded",
            FailureReason::PoorAlignment => "PoorAlignment",
            FailureReason::CollisionWithNeighbor => "CollisionWithNeighbor",
            FailureReason::RandomSlip => "RandomSlip",
            FailureReason::EmptyClosure => "EmptyClosure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspOutcome {
    pub success: bool,
    pub removed_object_id: Option<u32>,
    pub failure_reason: Option<FailureReason>,
    /// Final jaw separation in meters; near zero when the jaws met.
    pub closed_width: f64,
}

impl GraspOutcome {
    fn failed(reason: FailureReason, closed_width: f64) -> Self {
        Self {
            success: false,
            removed_object_id: None,
            failure_reason: Some(reason),
            closed_width,
        }
    }
}

/// Margins used when judging a grasp against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdjudicationParams {
    /// Object width must not exceed `max_opening - width_margin`.
    pub width_margin: f64,
    /// Minimum depth the jaw tips must reach below the highest point of the
    /// object between the jaws.
    pub min_engagement: f64,
    /// Commanded contact height may sit at most this far below the surface.
    pub max_overshoot: f64,
}

impl Default for AdjudicationParams {
    fn default() -> Self {
        Self {
            width_margin: 0.004,
            min_engagement: 0.002,
            max_overshoot: 0.020,
        }
    }
}

/// Successful geometric check: which object the jaws close on and how far
/// apart they stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspFit {
    pub object_id: u32,
    pub width: f64,
}

/// Geometric part of adjudication (everything except the random slip).
pub fn grasp_geometry(
    hf: &HeightField,
    grasp: &WorldGrasp,
    gripper: &GripperParams,
    adj: &AdjudicationParams,
) -> Result<GraspFit, FailureReason> {
    let Some(target) = hf.top_at(grasp.x, grasp.y) else {
        return Err(FailureReason::EmptyClosure);
    };
    let surface = hf.height_at(grasp.x, grasp.y);
    let tip = grasp.z - gripper.insertion_depth;
    if grasp.z < surface - adj.max_overshoot {
        return Err(FailureReason::PoorAlignment);
    }

    let res = hf.res;
    let (sin, cos) = grasp.yaw.sin_cos();
    let reach = gripper.max_opening / 2.0 + gripper.jaw_thickness + gripper.clearance;
    let half_jaw = gripper.jaw_width / 2.0;
    let half_strip = half_jaw + gripper.clearance;
    let nt = (reach / res).ceil() as isize;
    let ns = (half_strip / res).ceil() as isize;

    // target extent along the axis within the jaw strip, above the jaw tips
    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    let mut blocked = false;
    let mut strip: Vec<(f64, f64, f64)> = Vec::new();
    let mut peak = f64::NEG_INFINITY;
    for a in -nt..=nt {
        let t = a as f64 * res;
        for b in -ns..=ns {
            let s = b as f64 * res;
            let (x, y) = (grasp.x + t * cos - s * sin, grasp.y + t * sin + s * cos);
            let Some(k) = hf.cell(x, y) else { continue };
            if hf.height[k] <= tip {
                continue;
            }
            let id = hf.top[k];
            if id == target {
                if s.abs() <= half_jaw {
                    peak = peak.max(hf.height[k]);
                    t_min = t_min.min(t);
                    t_max = t_max.max(t);
                    strip.push((t, x, y));
                }
            } else if id != NO_OBJECT {
                blocked = true;
            }
        }
    }
    // the jaw tips must reach below the target's highest point between them
    let width = t_max - t_min + res;
    if !width.is_finite() || peak < tip + adj.min_engagement {
        return Err(FailureReason::PoorAlignment);
    }
    if width > gripper.max_opening - adj.width_margin {
        return Err(FailureReason::WidthExceeded);
    }

    // each jaw touches the cells within one raster step of the extreme;
    // their mean outward normal must lie inside the friction cone
    let cone = gripper.friction_cos();
    let face_ok = |extreme: f64, sign: f64| {
        let (mut nx, mut ny) = (0.0, 0.0);
        for (t, x, y) in &strip {
            if (t - extreme).abs() <= res + 1e-12 {
                if let Some((a, b)) = hf.outward_normal(*x, *y) {
                    nx += a;
                    ny += b;
                }
            }
        }
        let n = (nx * nx + ny * ny).sqrt();
        n > 1e-12 && sign * (nx * cos + ny * sin) / n >= cone
    };
    if !face_ok(t_max, 1.0) || !face_ok(t_min, -1.0) {
        return Err(FailureReason::PoorAlignment);
    }

    // jaws sweep from full opening to contact; anything else above the tips
    // in that band (plus clearance) is hit
    if blocked {
        return Err(FailureReason::CollisionWithNeighbor);
    }
    Ok(GraspFit {
        object_id: target,
        width,
    })
}

/// Execute a grasp against the noiseless scene. On success the grasped
/// object is removed; on failure the scene is untouched.
pub fn apply_grasp<R: Rng>(
    scene: &mut Scene,
    grasp: &WorldGrasp,
    gripper: &GripperParams,
    adj: &AdjudicationParams,
    slip_rate: f64,
    rng: &mut R,
) -> Result<GraspOutcome, SceneError> {
    let inside = |v: f64, max: f64| v.is_finite() && (0.0..=max).contains(&v);
    if !inside(grasp.x, scene.bin_dims.length) || !inside(grasp.y, scene.bin_dims.width) {
        return Err(SceneError::OutOfBounds {
            x: grasp.x,
            y: grasp.y,
        });
    }
    let hf = HeightField::build(scene);
    let fit = match grasp_geometry(&hf, grasp, gripper, adj) {
        Ok(fit) => fit,
        Err(FailureReason::EmptyClosure) => return Ok(GraspOutcome::failed(FailureReason::EmptyClosure, 0.0)),
        Err(reason) => return Ok(GraspOutcome::failed(reason, 0.0)),
    };
    // the draw happens on every geometrically valid grasp so the stream
    // position does not depend on slip_rate
    let slipped = rng.random::<f64>() < slip_rate;
    if slipped {
        return Ok(GraspOutcome::failed(FailureReason::RandomSlip, 0.0));
    }
    scene.objects.retain(|o| o.id != fit.object_id);
    Ok(GraspOutcome {
        success: true,
        removed_object_id: Some(fit.object_id),
        failure_reason: None,
        closed_width: fit.width,
    })
}

/// Exhaustive feasibility oracle: scan grasp centers on a 4 mm lattice over
/// the object's visible cells (nearest to its visible centroid first) and 16
/// yaw angles, with the contact height at the surface. Returns the first
/// grasp that passes every geometric check.
pub fn find_feasible_grasp(
    hf: &HeightField,
    object_id: u32,
    gripper: &GripperParams,
    adj: &AdjudicationParams,
) -> Option<WorldGrasp> {
    const STEP: usize = 4;
    const YAWS: usize = 16;
    let cells: Vec<usize> = (0..hf.top.len()).filter(|k| hf.top[*k] == object_id).collect();
    if cells.is_empty() {
        return None;
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for k in &cells {
        let (x, y) = hf.cell_center(*k);
        cx += x;
        cy += y;
    }
    cx /= cells.len() as f64;
    cy /= cells.len() as f64;
    let mut centers: Vec<(f64, usize)> = cells
        .iter()
        .filter(|k| (*k % hf.nx).is_multiple_of(STEP) && (*k / hf.nx).is_multiple_of(STEP))
        .map(|k| {
            let (x, y) = hf.cell_center(*k);
            ((x - cx).powi(2) + (y - cy).powi(2), *k)
        })
        .collect();
    centers.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, k) in centers {
        let (x, y) = hf.cell_center(k);
        for i in 0..YAWS {
            let g = WorldGrasp {
                x,
                y,
                z: hf.height[k],
                yaw: i as f64 * std::f64::consts::PI / YAWS as f64,
            };
            if grasp_geometry(hf, &g, gripper, adj).is_ok() {
                return Some(g);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::catalog::ObjectTemplate;
    use crate::scene::{BinDims, Pose2, SceneObject};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scene_with(objs: &[(ObjectTemplate, f64, f64, f64)]) -> Scene {
        let mut s = Scene::empty(BinDims::default(), 0);
        for (i, (t, x, y, yaw)) in objs.iter().enumerate() {
            s.objects.push(SceneObject::from_template(i as u32, t, Pose2 { x: *x, y: *y, yaw: *yaw }));
        }
        s
    }

    fn run(s: &mut Scene, g: WorldGrasp) -> GraspOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        apply_grasp(s, &g, &GripperParams::default(), &AdjudicationParams::default(), 0.0, &mut rng).unwrap()
    }

    #[test]
    fn empty_floor_is_empty_closure() {
        let mut s = scene_with(&[]);
        let o = run(&mut s, WorldGrasp { x: 0.2, y: 0.1, z: 0.01, yaw: 0.0 });
        assert_eq!(o.failure_reason, Some(FailureReason::EmptyClosure));
        assert!(!o.success);
    }

    #[test]
    fn block_across_minor_axis_succeeds() {
        let block = ObjectTemplate::block("block", 0.060, 0.040, 0.030);
        let mut s = scene_with(&[(block, 0.2, 0.12, 0.0)]);
        // minor axis is along y
        let o = run(&mut s, WorldGrasp { x: 0.2, y: 0.12, z: 0.030, yaw: std::f64::consts::FRAC_PI_2 });
        assert!(o.success, "{o:?}");
        assert_eq!(o.removed_object_id, Some(0));
        assert!((o.closed_width - 0.040).abs() <= 0.001 + 1e-9);
        assert!(s.objects.is_empty());
    }

    #[test]
    fn wide_block_exceeds_width_at_every_yaw() {
        let block = ObjectTemplate::block("wide", 0.120, 0.120, 0.030);
        let s = scene_with(&[(block, 0.2, 0.12, 0.0)]);
        let hf = HeightField::build(&s);
        for k in 0..16 {
            let g = WorldGrasp { x: 0.2, y: 0.12, z: 0.03, yaw: k as f64 * std::f64::consts::PI / 16.0 };
            let r = grasp_geometry(&hf, &g, &GripperParams::default(), &AdjudicationParams::default());
            assert_eq!(r, Err(FailureReason::WidthExceeded), "yaw bin {k}");
        }
        assert!(find_feasible_grasp(&hf, 0, &GripperParams::default(), &AdjudicationParams::default()).is_none());
    }

    #[test]
    fn neighbor_in_jaw_path_collides() {
        let block = ObjectTemplate::block("block", 0.060, 0.040, 0.030);
        let post = ObjectTemplate::block("post", 0.010, 0.010, 0.030);
        // post 30 mm from the block's long side, inside the jaw sweep
        let mut s = scene_with(&[(block, 0.2, 0.12, 0.0), (post, 0.2, 0.12 + 0.020 + 0.012, 0.0)]);
        let before = s.clone();
        let o = run(&mut s, WorldGrasp { x: 0.2, y: 0.12, z: 0.030, yaw: std::f64::consts::FRAC_PI_2 });
        assert_eq!(o.failure_reason, Some(FailureReason::CollisionWithNeighbor));
        assert_eq!(s, before);
    }

    #[test]
    fn hovering_grasp_is_misaligned() {
        let block = ObjectTemplate::block("block", 0.060, 0.040, 0.030);
        let mut s = scene_with(&[(block, 0.2, 0.12, 0.0)]);
        let o = run(&mut s, WorldGrasp { x: 0.2, y: 0.12, z: 0.045, yaw: std::f64::consts::FRAC_PI_2 });
        assert_eq!(o.failure_reason, Some(FailureReason::PoorAlignment));
    }

    #[test]
    fn slanted_axis_leaves_friction_cone() {
        let block = ObjectTemplate::block("block", 0.060, 0.040, 0.030);
        let s = scene_with(&[(block, 0.2, 0.12, 0.0)]);
        let hf = HeightField::build(&s);
        let g = GripperParams::default();
        let adj = AdjudicationParams::default();
        let at = |yaw: f64| grasp_geometry(&hf, &WorldGrasp { x: 0.2, y: 0.12, z: 0.03, yaw }, &g, &adj);
        assert_eq!(at(std::f64::consts::FRAC_PI_2 + 0.6), Err(FailureReason::PoorAlignment));
        assert!(at(std::f64::consts::FRAC_PI_2 + 0.3).is_ok());
    }

    #[test]
    fn slip_always_fires_at_rate_one() {
        let block = ObjectTemplate::block("block", 0.060, 0.040, 0.030);
        let mut s = scene_with(&[(block, 0.2, 0.12, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = WorldGrasp { x: 0.2, y: 0.12, z: 0.030, yaw: std::f64::consts::FRAC_PI_2 };
        let o = apply_grasp(&mut s, &g, &GripperParams::default(), &AdjudicationParams::default(), 1.0, &mut rng).unwrap();
        assert_eq!(o.failure_reason, Some(FailureReason::RandomSlip));
        assert_eq!(s.objects.len(), 1);
    }

    #[test]
    fn out_of_bounds_is_an_error() {
        let mut s = scene_with(&[]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = WorldGrasp { x: -0.1, y: 0.1, z: 0.0, yaw: 0.0 };
        let r = apply_grasp(&mut s, &g, &GripperParams::default(), &AdjudicationParams::default(), 0.0, &mut rng);
        assert!(matches!(r, Err(SceneError::OutOfBounds { .. })));
    }

    #[test]
    fn oracle_finds_grasp_on_every_catalog_object() {
        for t in crate::scene::default_catalog() {
            let s = scene_with(&[(t.clone(), 0.2, 0.12, 0.4)]);
            let hf = HeightField::build(&s);
            assert!(
                find_feasible_grasp(&hf, 0, &GripperParams::default(), &AdjudicationParams::default()).is_some(),
                "{}",
                t.class_label
            );
        }
    }
}
