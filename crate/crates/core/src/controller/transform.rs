use super::ControllerError;
use crate::camera::{CameraIntrinsics, Rigid};
use nalgebra::Vector3;
use serde::Serialize;

/// Camera-to-robot rigid transform.
pub type Extrinsics = Rigid;

/// Pixel plus depth to a camera-frame point.
pub fn deproject(u: f64, v: f64, z: f64, cam: &CameraIntrinsics) -> Result<Vector3<f64>, ControllerError> {
    if !(z > 0.0) {
        return Err(ControllerError::BadDepth(z));
    }
    Ok(Vector3::new((u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z))
}

pub fn to_robot_frame(p_cam: &Vector3<f64>, e: &Extrinsics) -> Vector3<f64> {
    e.apply(p_cam)
}

/// Image-plane grasp axis angle to a robot-frame yaw in `[0, pi)`.
pub fn yaw_to_robot(theta: f64, e: &Extrinsics) -> f64 {
    let d = e.apply_vector(&Vector3::new(theta.cos(), theta.sin(), 0.0));
    d.y.atan2(d.x).rem_euclid(std::f64::consts::PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobotGrasp {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

pub fn grasp_to_robot(
    u: f64,
    v: f64,
    z: f64,
    theta: f64,
    cam: &CameraIntrinsics,
    e: &Extrinsics,
) -> Result<RobotGrasp, ControllerError> {
    let p = to_robot_frame(&deproject(u, v, z, cam)?, e);
    Ok(RobotGrasp {
        x: p.x,
        y: p.y,
        z: p.z,
        yaw: yaw_to_robot(theta, e),
    })
}
