use super::adjudicate::{find_feasible_grasp, AdjudicationParams};
use super::raster::{HeightField, NO_OBJECT};
use super::{BinDims, ObjectTemplate, Pose2, Scene, SceneObject};
use crate::gripper::GripperParams;
use crate::rng::{stream_rng, STREAM_SCENE};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Packing {
    Light,
    Dense,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlacementFailure {
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("placed {placed} of {requested} objects before running out of attempts")]
    Exhausted { placed: usize, requested: usize },
}

const ATTEMPTS_PER_OBJECT: usize = 200;
/// Light packing starts over from an empty bin this many times.
const RESTARTS: usize = 25;
/// Distance kept from the bin walls, meters.
const WALL_MARGIN: f64 = 0.01;
/// Free floor kept between objects in light packing, meters.
const LIGHT_GAP: f64 = 0.008;

fn random_pose<R: Rng>(rng: &mut R, template: &ObjectTemplate, bin: &BinDims) -> Option<Pose2> {
    let yaw = rng.random_range(0.0..std::f64::consts::TAU);
    let probe = SceneObject::from_template(0, template, Pose2 { x: 0.0, y: 0.0, yaw });
    let (x0, y0, x1, y1) = probe.world_bounds();
    let (ex, ey) = ((x1 - x0) / 2.0 + WALL_MARGIN, (y1 - y0) / 2.0 + WALL_MARGIN);
    if 2.0 * ex >= bin.length || 2.0 * ey >= bin.width {
        return None;
    }
    Some(Pose2 {
        x: rng.random_range(ex..bin.length - ex),
        y: rng.random_range(ey..bin.width - ey),
        yaw,
    })
}

/// Class sequence: the catalog shuffled once per round, so the first
/// `catalog.len()` objects cover every class.
fn class_order<R: Rng>(rng: &mut R, n_classes: usize, count: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(count);
    while order.len() < count {
        let mut round: Vec<usize> = (0..n_classes).collect();
        round.shuffle(rng);
        order.extend(round);
    }
    order.truncate(count);
    order
}

/// True when `obj` stays `gap` away from every occupied cell of `hf`.
fn keeps_gap(hf: &HeightField, obj: &SceneObject, gap: f64) -> bool {
    let (x0, y0, x1, y1) = obj.world_bounds();
    let res = hf.res;
    let reach = (gap / res).ceil() as isize;
    let i0 = ((x0 / res).floor() as isize - reach).max(0);
    let j0 = ((y0 / res).floor() as isize - reach).max(0);
    let i1 = ((x1 / res).ceil() as isize + reach).min(hf.nx as isize);
    let j1 = ((y1 / res).ceil() as isize + reach).min(hf.ny as isize);
    for j in j0..j1 {
        for i in i0..i1 {
            let k = j as usize * hf.nx + i as usize;
            if hf.top[k] == NO_OBJECT {
                continue;
            }
            // occupied cell: does the candidate come within `gap` of it?
            let (cx, cy) = hf.cell_center(k);
            for dj in -reach..=reach {
                for di in -reach..=reach {
                    let (dx, dy) = (di as f64 * res, dj as f64 * res);
                    if dx * dx + dy * dy > gap * gap {
                        continue;
                    }
                    let (lx, ly) = obj.to_local(cx + dx, cy + dy);
                    if obj.footprint.height_at(lx, ly) > 0.0 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Build a reproducible bin of `count` objects drawn from `catalog`.
///
/// Light packing rejects placements that touch another object or leave any
/// object in the bin without a feasible ground-truth grasp (default gripper).
/// Dense packing drops objects anywhere; later ones rest on earlier ones.
pub fn generate_bin(
    seed: u64,
    catalog: &[ObjectTemplate],
    count: usize,
    packing: Packing,
) -> Result<Scene, PlacementFailure> {
    generate_bin_with(seed, catalog, count, packing, BinDims::default(), &GripperParams::default())
}

pub fn generate_bin_with(
    seed: u64,
    catalog: &[ObjectTemplate],
    count: usize,
    packing: Packing,
    bin: BinDims,
    gripper: &GripperParams,
) -> Result<Scene, PlacementFailure> {
    if count == 0 {
        return Ok(Scene::empty(bin, seed));
    }
    if catalog.is_empty() {
        return Err(PlacementFailure::EmptyCatalog);
    }
    let mut rng = stream_rng(seed, STREAM_SCENE);
    let mut order = class_order(&mut rng, catalog.len(), count);
    if packing == Packing::Dense {
        let mut scene = Scene::empty(bin, seed);
        for (id, class) in order.into_iter().enumerate() {
            let template = &catalog[class];
            let pose = random_pose(&mut rng, template, &bin).ok_or(PlacementFailure::Exhausted {
                placed: id,
                requested: count,
            })?;
            scene.objects.push(SceneObject::from_template(id as u32, template, pose));
        }
        return Ok(scene);
    }
    // big footprints are the hardest to fit, so they go first
    order.sort_by(|a, b| {
        let area = |c: &usize| catalog[*c].footprint.occupied_cells().count();
        area(b).cmp(&area(a))
    });
    let mut best = 0;
    for _ in 0..RESTARTS {
        match place_light(&mut rng, catalog, &order, bin, seed, gripper) {
            Ok(scene) => return Ok(scene),
            Err(placed) => best = best.max(placed),
        }
    }
    Err(PlacementFailure::Exhausted {
        placed: best,
        requested: count,
    })
}

fn place_light<R: Rng>(
    rng: &mut R,
    catalog: &[ObjectTemplate],
    order: &[usize],
    bin: BinDims,
    seed: u64,
    gripper: &GripperParams,
) -> Result<Scene, usize> {
    let adj = AdjudicationParams::default();
    let mut scene = Scene::empty(bin, seed);
    for (id, class) in order.iter().enumerate() {
        let template = &catalog[*class];
        let mut placed = false;
        let before = HeightField::build(&scene);
        // a new object can only spoil grasps whose jaw strips reach it
        let reach = gripper.max_opening / 2.0 + gripper.jaw_thickness + gripper.clearance + 0.01;
        for _ in 0..ATTEMPTS_PER_OBJECT {
            let Some(pose) = random_pose(rng, template, &bin) else { break };
            let obj = SceneObject::from_template(id as u32, template, pose);
            if !keeps_gap(&before, &obj, LIGHT_GAP) {
                continue;
            }
            let nb = obj.world_bounds();
            scene.objects.push(obj);
            let hf = HeightField::build(&scene);
            if scene
                .objects
                .iter()
                .filter(|o| {
                    let b = o.world_bounds();
                    b.0 - reach < nb.2 && nb.0 < b.2 + reach && b.1 - reach < nb.3 && nb.1 < b.3 + reach
                })
                .all(|o| find_feasible_grasp(&hf, o.id, gripper, &adj).is_some())
            {
                placed = true;
                break;
            }
            scene.objects.pop();
        }
        if !placed {
            return Err(scene.objects.len());
        }
    }
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::default_catalog;

    #[test]
    fn zero_count_is_empty() {
        let s = generate_bin(7, &default_catalog(), 0, Packing::Light).unwrap();
        assert!(s.objects.is_empty());
    }

    #[test]
    fn empty_catalog_fails() {
        assert_eq!(
            generate_bin(7, &[], 3, Packing::Dense),
            Err(PlacementFailure::EmptyCatalog)
        );
    }

    #[test]
    fn light_bin_is_deterministic_and_valid() {
        let a = generate_bin(7, &default_catalog(), 6, Packing::Light).unwrap();
        let b = generate_bin(7, &default_catalog(), 6, Packing::Light).unwrap();
        assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        a.validate().unwrap();
        assert_eq!(a.objects.len(), 6);
        // one of each class
        let mut labels: Vec<_> = a.objects.iter().map(|o| o.class_label.as_str()).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 6);
    }

    #[test]
    fn light_objects_do_not_touch() {
        let s = generate_bin(11, &default_catalog(), 6, Packing::Light).unwrap();
        let hf = HeightField::build(&s);
        for o in &s.objects {
            assert_eq!(hf.visible_cells(o.id), hf.footprint_cells(o.id));
        }
    }

    #[test]
    fn overfull_light_bin_fails() {
        let small = BinDims {
            length: 0.15,
            width: 0.12,
            depth: 0.08,
        };
        let r = generate_bin_with(3, &default_catalog(), 4, Packing::Light, small, &GripperParams::default());
        assert!(matches!(r, Err(PlacementFailure::Exhausted { .. })));
    }

    #[test]
    fn dense_bin_places_everything() {
        let s = generate_bin(3, &default_catalog(), 20, Packing::Dense).unwrap();
        assert_eq!(s.objects.len(), 20);
        s.validate().unwrap();
    }
}
