//! Hand-built scenes shared by the integration tests.
#![allow(dead_code)]

use cell_core::bbox::BoundingBox;
use cell_core::camera::{overhead_pose, CameraIntrinsics, Rigid};
use cell_core::depth::DepthFrame;
use cell_core::perception::{Detection, DetectorParams, Perception, PerceptionParams, Plan};
use cell_core::scene::catalog::{self, ObjectTemplate};
use cell_core::scene::{render_depth, render_ground_truth, BinDims, NoiseParams, Pose2, Scene, SceneObject};
use cell_core::perception::GripperParams;

pub fn cam() -> CameraIntrinsics {
    CameraIntrinsics::default()
}

pub fn pose() -> Rigid {
    overhead_pose(0.225, 0.125, 0.65)
}

pub fn scene(objs: &[(ObjectTemplate, f64, f64, f64)]) -> Scene {
    let mut s = Scene::empty(BinDims::default(), 0);
    for (i, (t, x, y, yaw)) in objs.iter().enumerate() {
        s.objects
            .push(SceneObject::from_template(i as u32, t, Pose2 { x: *x, y: *y, yaw: *yaw }));
    }
    s.validate().expect("fixture fits the bin");
    s
}

/// Noiseless render.
pub fn clean(s: &Scene) -> DepthFrame {
    render_depth(s, &cam(), &pose(), &NoiseParams::zero(), 0).unwrap()
}

pub fn perception() -> Perception {
    Perception::new(PerceptionParams::default(), DetectorParams::default(), GripperParams::default())
}

/// Detection exactly on the ground-truth box of object `id`.
pub fn truth_detection(s: &Scene, id: u32) -> Detection {
    let gt = render_ground_truth(s, &cam(), &pose()).unwrap();
    let g = gt.iter().find(|g| g.object_id == id).unwrap();
    Detection {
        bbox: g.bbox,
        class_label: g.class_label.clone(),
        confidence: 0.95,
        sources: vec![id],
    }
}

pub fn plan_on(raw: &DepthFrame, det: &Detection) -> Result<Plan, cell_core::perception::PerceptionError> {
    let p = perception();
    let prepared = p.prepare(raw).unwrap();
    p.plan(&prepared, det)
}

/// Bin-frame point under raw pixel (u, v) at depth z.
pub fn to_bin(u: f64, v: f64, z: f64) -> (f64, f64) {
    let c = cam();
    let p = pose().apply(&nalgebra::Vector3::new((u - c.cx) * z / c.fx, (v - c.cy) * z / c.fy, z));
    (p.x, p.y)
}

pub fn hammer_scene(walls: bool) -> Scene {
    // head toward the bottom of the image, handle above it
    let yaw = -std::f64::consts::FRAC_PI_2;
    let mut objs = vec![(catalog::hammer(), 0.225, 0.125, yaw)];
    if walls {
        let wall = ObjectTemplate::block("wall", 0.110, 0.008, 0.050);
        objs.push((wall.clone(), 0.225 + 0.024, 0.150, yaw));
        objs.push((wall, 0.225 - 0.024, 0.150, yaw));
    }
    scene(&objs)
}

pub fn box_of(dets: &[BoundingBox]) -> BoundingBox {
    dets.iter().skip(1).fold(dets[0], |a, b| a.union(b))
}

/// Two tall parallel walls with a floor gap between them. Neither wall can
/// be grasped alone: the other one stands in the jaw sweep.
pub fn channel_scene() -> Scene {
    let wall = ObjectTemplate::block("bracket", 0.008, 0.100, 0.060);
    scene(&[(wall.clone(), 0.225 - 0.019, 0.125, 0.0), (wall, 0.225 + 0.019, 0.125, 0.0)])
}

/// Raw pixels of the crafted dropout on the channel floor.
pub const CHANNEL_HOLE: (usize, usize, usize, usize) = (187, 100, 213, 151);

pub fn channel_frame(with_hole: bool) -> DepthFrame {
    let mut f = clean(&channel_scene());
    if with_hole {
        let (u0, v0, u1, v1) = CHANNEL_HOLE;
        for v in v0..v1 {
            for u in u0..u1 {
                f.punch_hole(u, v);
            }
        }
    }
    f
}

/// One box over both channel walls.
pub fn channel_detection() -> Detection {
    let s = channel_scene();
    let a = truth_detection(&s, 0);
    let b = truth_detection(&s, 1);
    Detection {
        bbox: a.bbox.union(&b.bbox),
        class_label: "bracket".into(),
        confidence: 0.9,
        sources: vec![0, 1],
    }
}
