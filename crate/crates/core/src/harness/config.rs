use super::HarnessError;
use crate::bus::LinkParams;
use crate::camera::{overhead_pose, CameraIntrinsics, Rigid};
use crate::controller::{MotionProfile, ScanConfig};
use crate::gripper::GripperParams;
use crate::perception::{DetectorParams, PerceptionParams};
use crate::scene::{catalog, AdjudicationParams, NoiseParams, ObjectTemplate, Packing};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Labels from the built-in catalog.
    pub catalog: Vec<String>,
    pub count: usize,
    pub packing: Packing,
    /// Added to the episode seed for scene generation.
    pub seed_offset: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            catalog: catalog::default_catalog().into_iter().map(|t| t.class_label).collect(),
            count: 6,
            packing: Packing::Light,
            seed_offset: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub intrinsics: CameraIntrinsics,
    /// Camera-to-bin pose.
    pub pose: Rigid,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::default(),
            pose: overhead_pose(0.225, 0.125, 0.65),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub control: LinkParams,
    pub camera: LinkParams,
    pub npu: LinkParams,
    pub robot: LinkParams,
    pub gripper: LinkParams,
    pub hmi: LinkParams,
}

impl Default for LinkConfig {
    fn default() -> Self {
        let l = LinkParams::default();
        Self {
            control: l,
            camera: l,
            npu: l,
            robot: l,
            gripper: l,
            hmi: l,
        }
    }
}

/// Emulated compute and device costs, milliseconds of simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    pub capture_ms: f64,
    pub preprocess_ms: f64,
    pub detect_ms: f64,
    pub grasp_ms: f64,
    pub gripper_read_ms: f64,
    pub heartbeat_ms: f64,
    pub links: LinkConfig,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            capture_ms: 33.0,
            preprocess_ms: 20.0,
            detect_ms: 350.0,
            grasp_ms: 70.0,
            gripper_read_ms: 5.0,
            heartbeat_ms: 1000.0,
            links: LinkConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinPlacement {
    #[serde(rename = "near")]
    Near,
    #[serde(rename = "far")]
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementConfig {
    pub bins: BinPlacement,
    /// Pick-bin center to place-bin center, meters.
    pub near_distance: f64,
    pub far_distance: f64,
    /// Height of the release point above the floor.
    pub place_height: f64,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        Self {
            bins: BinPlacement::Far,
            near_distance: 0.25,
            far_distance: 0.9,
            place_height: 0.15,
        }
    }
}

impl PlacementConfig {
    pub fn distance(&self) -> f64 {
        match self.bins {
            BinPlacement::Near => self.near_distance,
            BinPlacement::Far => self.far_distance,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultConfig {
    /// The perception module accepts jobs but never answers.
    pub stall_npu: bool,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub episodes: u32,
    /// Classes and counts to pick; empty means every object in the bin.
    pub request: BTreeMap<String, u32>,
    /// Maximum grasp attempts per requested object.
    pub pick_cap_factor: u32,
    pub slip_rate: f64,
    pub scene: SceneConfig,
    pub noise: NoiseParams,
    pub detector: DetectorParams,
    pub gripper: GripperParams,
    pub adjudication: AdjudicationParams,
    pub perception: PerceptionParams,
    pub camera: CameraConfig,
    /// Camera-to-robot transform; the robot frame is the bin frame, so this
    /// is the camera pose unless overridden.
    pub extrinsics: Option<Rigid>,
    pub motion: MotionProfile,
    pub timing: TimingConfig,
    pub placement: PlacementConfig,
    pub controller: ScanConfig,
    pub faults: FaultConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            episodes: 1,
            request: BTreeMap::new(),
            pick_cap_factor: 4,
            slip_rate: 0.03,
            scene: SceneConfig::default(),
            noise: NoiseParams::default(),
            detector: DetectorParams::default(),
            gripper: GripperParams::default(),
            adjudication: AdjudicationParams::default(),
            perception: PerceptionParams::default(),
            camera: CameraConfig::default(),
            extrinsics: None,
            motion: MotionProfile::default(),
            timing: TimingConfig::default(),
            placement: PlacementConfig::default(),
            controller: ScanConfig::default(),
            faults: FaultConfig::default(),
        }
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Invalid {
        field: field.into(),
        message: msg.to_string(),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            if msg.starts_with("unknown field") {
                HarnessError::UnknownKey { line, message: msg }
            } else {
                HarnessError::Parse { line, message: msg }
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn extrinsics(&self) -> Rigid {
        self.extrinsics.unwrap_or(self.camera.pose)
    }

    pub fn templates(&self) -> Result<Vec<ObjectTemplate>, HarnessError> {
        let all = catalog::default_catalog();
        self.scene
            .catalog
            .iter()
            .map(|l| {
                catalog::template_by_label(&all, l)
                    .cloned()
                    .ok_or_else(|| invalid("scene.catalog", format!("unknown class {l:?}")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes == 0 {
            return Err(invalid("episodes", "must be at least 1"));
        }
        if self.pick_cap_factor == 0 {
            return Err(invalid("pick_cap_factor", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.slip_rate) {
            return Err(invalid("slip_rate", "must lie in [0, 1]"));
        }
        self.templates()?;
        if self.scene.catalog.is_empty() {
            return Err(invalid("scene.catalog", "must not be empty"));
        }
        for (label, n) in &self.request {
            if *n == 0 {
                return Err(invalid("request", format!("count for {label:?} must be positive")));
            }
            if catalog::template_by_label(&catalog::default_catalog(), label).is_none() {
                return Err(invalid("request", format!("unknown class {label:?}")));
            }
        }
        self.noise.validate().map_err(|e| invalid("noise", e))?;
        self.detector.validate().map_err(|e| invalid("detector", e))?;
        self.gripper.validate().map_err(|e| invalid("gripper", e))?;
        self.perception.validate().map_err(|e| invalid("perception", e))?;
        self.camera.intrinsics.validate().map_err(|e| invalid("camera.intrinsics", e))?;
        self.motion.validate().map_err(|e| invalid("motion", e))?;
        self.controller.validate().map_err(|e| invalid("controller", e))?;
        let t = &self.timing;
        let stage = [
            ("timing.capture_ms", t.capture_ms),
            ("timing.preprocess_ms", t.preprocess_ms),
            ("timing.detect_ms", t.detect_ms),
            ("timing.grasp_ms", t.grasp_ms),
            ("timing.gripper_read_ms", t.gripper_read_ms),
        ];
        for (name, v) in stage {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("{v} must be finite and non-negative")));
            }
        }
        if !(t.heartbeat_ms > 0.0) {
            return Err(invalid("timing.heartbeat_ms", "must be positive"));
        }
        let l = &t.links;
        for (name, p) in [
            ("control", l.control),
            ("camera", l.camera),
            ("npu", l.npu),
            ("robot", l.robot),
            ("gripper", l.gripper),
            ("hmi", l.hmi),
        ] {
            p.validate().map_err(|e| invalid(&format!("timing.links.{name}"), e))?;
        }
        let p = &self.placement;
        if !(p.near_distance > 0.0 && p.far_distance > 0.0 && p.place_height > 0.0) {
            return Err(invalid("placement", "distances must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        let text = crate::canonical::to_canonical_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml_str(&text)
}
