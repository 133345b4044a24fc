//! Pinhole intrinsics and rigid transforms shared by the renderer and the
//! controller.
//!
//! Pixel coordinates are continuous: pixel `(i, j)` covers `[i, i+1) x [j, j+1)`
//! and its center sits at `(i + 0.5, j + 0.5)`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("focal lengths must be positive (fx={fx}, fy={fy})")]
    BadFocal { fx: f64, fy: f64 },
    #[error("principal point ({cx}, {cy}) outside {width}x{height} image")]
    BadPrincipalPoint {
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
    },
    #[error("rotation is not orthonormal with det +1")]
    NotRigid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            fx: 500.0,
            fy: 500.0,
            cx: 200.0,
            cy: 125.0,
            width: 400,
            height: 250,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(CameraError::BadFocal {
                fx: self.fx,
                fy: self.fy,
            });
        }
        let ok_x = self.cx >= 0.0 && self.cx < self.width as f64;
        let ok_y = self.cy >= 0.0 && self.cy < self.height as f64;
        if !(ok_x && ok_y) {
            return Err(CameraError::BadPrincipalPoint {
                cx: self.cx,
                cy: self.cy,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    /// Forward pinhole model. Returns `None` for points at or behind the
    /// image plane.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Unit-depth ray direction through a continuous pixel coordinate.
    pub fn ray(&self, u: f64, v: f64) -> (f64, f64) {
        ((u - self.cx) / self.fx, (v - self.cy) / self.fy)
    }
}

/// A rigid transform `p' = R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rigid {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Rigid {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rigid {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, CameraError> {
        let r = Self {
            rotation,
            translation,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation about +z by `yaw` radians followed by a translation.
    pub fn from_yaw(yaw: f64, t: Vector3<f64>) -> Self {
        let (s, c) = yaw.sin_cos();
        Self {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: t,
        }
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let r = &self.rotation;
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if err > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 || !self.translation.iter().all(|v| v.is_finite()) {
            return Err(CameraError::NotRigid);
        }
        Ok(())
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &Rigid) -> Rigid {
        Rigid {
            rotation: self.rotation * inner.rotation,
            translation: self.rotation * inner.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Rigid {
        let rt = self.rotation.transpose();
        Rigid {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn from_matrix(m: &[[f64; 4]; 4]) -> Result<Rigid, CameraError> {
        if m[3] != [0.0, 0.0, 0.0, 1.0] {
            return Err(CameraError::NotRigid);
        }
        let rotation = Matrix3::new(
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        );
        Rigid::new(rotation, Vector3::new(m[0][3], m[1][3], m[2][3]))
    }
}

impl Serialize for Rigid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_matrix().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rigid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = <[[f64; 4]; 4]>::deserialize(d)?;
        Rigid::from_matrix(&m).map_err(serde::de::Error::custom)
    }
}

/// Overhead camera looking straight down: camera x along bin +x, camera y
/// along bin -y, optical axis along bin -z.
pub fn overhead_pose(x: f64, y: f64, height: f64) -> Rigid {
    Rigid {
        rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0),
        translation: Vector3::new(x, y, height),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_intrinsics_are_valid() {
        CameraIntrinsics::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_principal_point() {
        let cam = CameraIntrinsics {
            cx: 400.0,
            ..Default::default()
        };
        assert!(matches!(cam.validate(), Err(CameraError::BadPrincipalPoint { .. })));
    }

    #[test]
    fn overhead_pose_is_rigid() {
        overhead_pose(0.2, 0.1, 0.6).validate().unwrap();
    }

    #[test]
    fn matrix_round_trip() {
        let r = Rigid::from_yaw(0.7, Vector3::new(0.1, -0.2, 0.3));
        let back = Rigid::from_matrix(&r.to_matrix()).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn rejects_scaled_rotation() {
        let m = Matrix3::identity() * 1.01;
        assert_eq!(Rigid::new(m, Vector3::zeros()), Err(CameraError::NotRigid));
    }

    #[test]
    fn inverse_undoes_transform() {
        let r = Rigid::from_yaw(-1.3, Vector3::new(0.5, 0.25, -0.1)).compose(&overhead_pose(0.1, 0.2, 0.7));
        let p = Vector3::new(0.03, -0.4, 0.9);
        let back = r.inverse().apply(&r.apply(&p));
        assert!((back - p).norm() < 1e-12);
    }
}
