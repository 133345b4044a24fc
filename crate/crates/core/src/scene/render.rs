use super::noise::{hole_mask, sample_gp_noise, NoiseParams};
use super::raster::HeightField;
use super::{Scene, SceneError};
use crate::bbox::BoundingBox;
use crate::camera::{CameraIntrinsics, Rigid};
use crate::depth::{DepthFrame, HOLE_SENTINEL};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub object_id: u32,
    pub class_label: String,
    pub bbox: BoundingBox,
    pub occlusion: f64,
    /// Set when no part of the object is visible; `bbox` is then empty.
    pub degenerate: bool,
}

fn check_overhead(pose: &Rigid) -> Result<(), SceneError> {
    let axis = pose.apply_vector(&Vector3::new(0.0, 0.0, 1.0));
    if axis.z > -0.9 {
        return Err(SceneError::CameraNotOverhead);
    }
    Ok(())
}

/// Noiseless per-pixel depth and visible object id by marching each pixel
/// ray down through the height raster.
pub(crate) fn raycast(hf: &HeightField, cam: &CameraIntrinsics, pose: &Rigid) -> (Vec<f64>, Vec<u32>) {
    let (w, h) = (cam.width, cam.height);
    let mut depth = vec![0.0; w * h];
    let mut ids = vec![super::raster::NO_OBJECT; w * h];
    let c = pose.translation;
    let top = hf.max_height + 0.0005;
    let near = dilate_max(hf, SKIP_RADIUS);
    let reach = SKIP_RADIUS as f64 * hf.res;
    for v in 0..h {
        for u in 0..w {
            let (rx, ry) = cam.ray(u as f64 + 0.5, v as f64 + 0.5);
            let d = pose.apply_vector(&Vector3::new(rx, ry, 1.0));
            let s_floor = (0.0 - c.z) / d.z;
            let k = v * w + u;
            if hf.max_height <= 0.0 {
                depth[k] = s_floor;
                continue;
            }
            let point = |s: f64| (c.x + s * d.x, c.y + s * d.y, c.z + s * d.z);
            let inv_res = 1.0 / hf.res;
            let hit = |s: f64| {
                let (x, y, z) = point(s);
                if x < 0.0 || y < 0.0 {
                    return z <= 0.0;
                }
                let (i, j) = ((x * inv_res) as usize, (y * inv_res) as usize);
                let h = if i < hf.nx && j < hf.ny { hf.height[j * hf.nx + i] } else { 0.0 };
                h >= z
            };
            let step = 0.001 / d.z.abs();
            let horiz = d.x.hypot(d.y);
            let mut prev = ((top - c.z) / d.z).max(0.0);
            let mut s = prev;
            let mut found = false;
            while s < s_floor {
                if hit(s) {
                    found = true;
                    break;
                }
                prev = s;
                // nothing within `reach` rises above the ray: skip ahead
                let (x, y, z) = point(s);
                let m = hf.cell(x, y).map_or(0.0, |k| near[k]);
                let mut jump = step;
                if z > m {
                    let by_height = (z - m) / d.z.abs();
                    let by_reach = if horiz > 0.0 { reach / horiz } else { f64::INFINITY };
                    jump = jump.max(by_height.min(by_reach));
                }
                s += jump;
            }
            if !found {
                depth[k] = s_floor;
                continue;
            }
            // top face: exact parameter where the ray meets the surface plane
            let (x, y, _) = point(s);
            let surface = hf.height_at(x, y);
            let s_top = (surface - c.z) / d.z;
            let (tx, ty, _) = point(s_top);
            if s_top <= s && hf.height_at(tx, ty) == surface {
                depth[k] = s_top;
                ids[k] = hf.top_at(tx, ty).unwrap_or(super::raster::NO_OBJECT);
                continue;
            }
            // side wall: bisect the crossing
            let (mut lo, mut hi) = (prev, s);
            for _ in 0..12 {
                let mid = 0.5 * (lo + hi);
                if hit(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let (x, y, _) = point(hi);
            depth[k] = hi;
            ids[k] = hf.top_at(x, y).unwrap_or(super::raster::NO_OBJECT);
        }
    }
    (depth, ids)
}

const SKIP_RADIUS: usize = 4;

/// Max height within `r` cells (square window) of every cell.
fn dilate_max(hf: &HeightField, r: usize) -> Vec<f64> {
    let (nx, ny) = (hf.nx, hf.ny);
    let mut rows = vec![0.0; nx * ny];
    for j in 0..ny {
        let line = &hf.height[j * nx..(j + 1) * nx];
        for i in 0..nx {
            let (a, b) = (i.saturating_sub(r), (i + r).min(nx - 1));
            rows[j * nx + i] = line[a..=b].iter().cloned().fold(0.0, f64::max);
        }
    }
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        let (a, b) = (j.saturating_sub(r), (j + r).min(ny - 1));
        for i in 0..nx {
            out[j * nx + i] = (a..=b).map(|jj| rows[jj * nx + i]).fold(0.0, f64::max);
        }
    }
    out
}

/// Render a depth frame of `scene` from an overhead camera at `pose`
/// (camera-to-bin transform), with correlated noise and holes.
pub fn render_depth(
    scene: &Scene,
    cam: &CameraIntrinsics,
    pose: &Rigid,
    noise: &NoiseParams,
    seed: u64,
) -> Result<DepthFrame, SceneError> {
    check_overhead(pose)?;
    let hf = HeightField::build(scene);
    let (clean, _) = raycast(&hf, cam, pose);
    Ok(apply_noise(clean, cam, noise, seed))
}

pub(crate) fn apply_noise(clean: Vec<f64>, cam: &CameraIntrinsics, noise: &NoiseParams, seed: u64) -> DepthFrame {
    let (w, h) = (cam.width, cam.height);
    let field = sample_gp_noise(seed, w, h, noise);
    let holes = hole_mask(seed, &clean, w, h, noise);
    let mut data = clean;
    let mut valid = vec![true; w * h];
    for i in 0..w * h {
        if holes[i] {
            data[i] = HOLE_SENTINEL;
            valid[i] = false;
        } else {
            data[i] = (data[i] + field[i]).clamp(1e-3, 9.999);
        }
    }
    DepthFrame {
        width: w,
        height: h,
        data,
        valid,
        intrinsics: *cam,
    }
}

/// Per-object annotations: the pixel rectangle around the projection of the
/// object's visible top-view cells, and the fraction of its footprint
/// covered by objects lying on it.
pub fn render_ground_truth(
    scene: &Scene,
    cam: &CameraIntrinsics,
    pose: &Rigid,
) -> Result<Vec<GroundTruth>, SceneError> {
    check_overhead(pose)?;
    let hf = HeightField::build(scene);
    Ok(ground_truth_from(&hf, scene, cam, pose))
}

pub(crate) fn ground_truth_from(
    hf: &HeightField,
    scene: &Scene,
    cam: &CameraIntrinsics,
    pose: &Rigid,
) -> Vec<GroundTruth> {
    let inv = pose.inverse();
    let n = scene.objects.len();
    let mut bounds = vec![(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY); n];
    let mut visible = vec![0usize; n];
    let slot: std::collections::HashMap<u32, usize> =
        scene.objects.iter().enumerate().map(|(i, o)| (o.id, i)).collect();
    for (k, id) in hf.top.iter().enumerate() {
        let Some(&i) = slot.get(id) else { continue };
        visible[i] += 1;
        let (x, y) = hf.cell_center(k);
        let p = inv.apply(&Vector3::new(x, y, hf.height[k]));
        if let Some((u, v)) = cam.project(&p) {
            let b = &mut bounds[i];
            b.0 = b.0.min(u);
            b.1 = b.1.min(v);
            b.2 = b.2.max(u);
            b.3 = b.3.max(v);
        }
    }
    scene
        .objects
        .iter()
        .enumerate()
        .map(|(i, obj)| {
            let total = hf.footprint_cells(obj.id);
            let occlusion = if total == 0 {
                1.0
            } else {
                1.0 - visible[i] as f64 / total as f64
            };
            let degenerate = visible[i] == 0 || !bounds[i].0.is_finite();
            let bbox = if degenerate {
                BoundingBox::new(0.0, 0.0, 0.0, 0.0)
            } else {
                let b = bounds[i];
                BoundingBox::new(b.0.floor(), b.1.floor(), b.2.floor() + 1.0, b.3.floor() + 1.0)
                    .clamp_to(cam.width, cam.height)
            };
            GroundTruth {
                object_id: obj.id,
                class_label: obj.class_label.clone(),
                bbox,
                occlusion: if degenerate { 1.0 } else { occlusion },
                degenerate,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::overhead_pose;
    use crate::scene::{catalog, BinDims, Pose2, SceneObject};

    fn setup() -> (CameraIntrinsics, Rigid) {
        (CameraIntrinsics::default(), overhead_pose(0.225, 0.125, 0.65))
    }

    #[test]
    fn empty_scene_is_flat_floor() {
        let (cam, pose) = setup();
        let s = Scene::empty(BinDims::default(), 0);
        let f = render_depth(&s, &cam, &pose, &NoiseParams::zero(), 1).unwrap();
        assert!(f.valid.iter().all(|v| *v));
        assert!(f.data.iter().all(|d| *d == 0.65));
    }

    #[test]
    fn zero_hole_rate_keeps_every_pixel() {
        let (cam, pose) = setup();
        let mut s = Scene::empty(BinDims::default(), 0);
        s.objects.push(SceneObject::from_template(0, &catalog::duck(), Pose2 { x: 0.2, y: 0.1, yaw: 0.3 }));
        let noise = NoiseParams {
            hole_rate: 0.0,
            ..Default::default()
        };
        let f = render_depth(&s, &cam, &pose, &noise, 5).unwrap();
        assert!(f.valid.iter().all(|v| *v));
    }

    #[test]
    fn block_top_is_exact() {
        let (cam, pose) = setup();
        let mut s = Scene::empty(BinDims::default(), 0);
        s.objects.push(SceneObject::from_template(
            0,
            &catalog::ObjectTemplate::block("block", 0.06, 0.04, 0.040),
            Pose2 { x: 0.225, y: 0.125, yaw: 0.0 },
        ));
        let f = render_depth(&s, &cam, &pose, &NoiseParams::zero(), 1).unwrap();
        let floor = f.get(5, 5).unwrap();
        assert_eq!(floor, 0.65);
        // block spans x in [0.195, 0.255]; at 0.61 m that is u in [175.4, 224.6]
        for v in 110..140 {
            for u in 180..220 {
                assert_eq!(f.get(u, v).unwrap(), floor - 0.040, "pixel ({u},{v})");
            }
        }
    }

    #[test]
    fn rejects_sideways_camera() {
        let (cam, _) = setup();
        let s = Scene::empty(BinDims::default(), 0);
        let side = Rigid::identity();
        assert_eq!(
            render_depth(&s, &cam, &side, &NoiseParams::zero(), 0),
            Err(SceneError::CameraNotOverhead)
        );
    }
}
