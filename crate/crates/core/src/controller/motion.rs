use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Point-to-point timing model for the arm and gripper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionProfile {
    /// m/s
    pub max_speed: f64,
    /// m/s^2
    pub accel: f64,
    pub grip_close_s: f64,
    pub grip_open_s: f64,
    /// Added to every arm move.
    pub settle_s: f64,
}

impl Default for MotionProfile {
    fn default() -> Self {
        Self {
            max_speed: 0.12,
            accel: 0.5,
            grip_close_s: 1.0,
            grip_open_s: 0.8,
            settle_s: 0.6,
        }
    }
}

impl MotionProfile {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.max_speed, self.accel, self.grip_close_s, self.grip_open_s, self.settle_s];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err("motion profile values must be positive".into());
        }
        Ok(())
    }

    /// Arm move time including settling.
    pub fn move_time(&self, from: &Vector3<f64>, to: &Vector3<f64>) -> f64 {
        motion_time(from, to, self) + self.settle_s
    }
}

/// Trapezoidal velocity profile over the straight-line distance; triangular
/// when the move is too short to reach `max_speed`.
pub fn motion_time(from: &Vector3<f64>, to: &Vector3<f64>, prof: &MotionProfile) -> f64 {
    travel_time((to - from).norm(), prof.max_speed, prof.accel)
}

pub fn travel_time(d: f64, v: f64, a: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    if d >= v * v / a {
        d / v + v / a
    } else {
        2.0 * (d / a).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(travel_time(0.0, 1.0, 2.0), 0.0);
        assert_eq!(travel_time(1.0, 1.0, 2.0), 1.5);
        assert!((travel_time(0.1, 1.0, 2.0) - 0.447_213_595_5).abs() < 1e-9);
    }

    #[test]
    fn continuous_at_the_branch_point() {
        let (v, a) = (0.8, 1.6);
        let d = v * v / a;
        assert!((travel_time(d, v, a) - travel_time(d - 1e-12, v, a)).abs() < 1e-6);
    }

    #[test]
    fn uses_euclidean_distance() {
        let p = MotionProfile {
            max_speed: 1.0,
            accel: 2.0,
            ..Default::default()
        };
        let t = motion_time(&Vector3::zeros(), &Vector3::new(0.6, 0.8, 0.0), &p);
        assert_eq!(t, 1.5);
    }
}
