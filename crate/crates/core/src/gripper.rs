use serde::{Deserialize, Serialize};

/// Parallel-jaw gripper geometry (2F-85 class).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GripperParams {
    pub max_opening: f64,
    pub jaw_thickness: f64,
    pub jaw_width: f64,
    /// How far the jaw tips descend below the contact height.
    pub insertion_depth: f64,
    /// Free space required around the jaws, meters.
    pub clearance: f64,
    /// Coulomb friction coefficient at the jaw pads; contacts whose normal
    /// leaves the cone `atan(friction)` around the closing axis slip.
    pub friction: f64,
}

impl Default for GripperParams {
    fn default() -> Self {
        Self {
            max_opening: 0.085,
            jaw_thickness: 0.008,
            jaw_width: 0.022,
            insertion_depth: 0.006,
            clearance: 0.005,
            friction: 0.5,
        }
    }
}

impl GripperParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            self.max_opening,
            self.jaw_thickness,
            self.jaw_width,
            self.insertion_depth,
            self.friction,
        ];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || !(self.clearance >= 0.0) {
            return Err("gripper dimensions must be positive".into());
        }
        if self.max_opening <= 2.0 * self.jaw_thickness {
            return Err("max_opening must exceed twice the jaw thickness".into());
        }
        Ok(())
    }

    /// Minimum cosine between a contact normal and the closing axis.
    pub fn friction_cos(&self) -> f64 {
        self.friction.atan().cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        GripperParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_jaws_thicker_than_opening() {
        let g = GripperParams {
            jaw_thickness: 0.05,
            ..Default::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn friction_cone() {
        let g = GripperParams::default();
        assert!((g.friction_cos() - 2.0 / 5f64.sqrt()).abs() < 1e-12);
    }
}
