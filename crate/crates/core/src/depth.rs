use crate::camera::CameraIntrinsics;
use image::{ImageBuffer, ImageFormat, Luma};
use serde::{Deserialize, Serialize};
use std::io::Cursor;
use thiserror::Error;

/// Stored in `data` for every invalid cell. Never read as a depth.
pub const HOLE_SENTINEL: f64 = 0.0;

#[derive(Debug, Error)]
pub enum DepthError {
    #[error("frame data has {got} cells, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("valid depth {depth} at ({u}, {v}) outside (0, 10) m")]
    OutOfRange { u: usize, v: usize, depth: f64 },
    #[error("png: {0}")]
    Png(#[from] image::ImageError),
}

/// Row-major depth grid in meters along the camera axis with a validity mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
    pub valid: Vec<bool>,
    pub intrinsics: CameraIntrinsics,
}

impl DepthFrame {
    pub fn filled(intrinsics: CameraIntrinsics, depth: f64) -> Self {
        let n = intrinsics.width * intrinsics.height;
        Self {
            width: intrinsics.width,
            height: intrinsics.height,
            data: vec![depth; n],
            valid: vec![true; n],
            intrinsics,
        }
    }

    pub fn from_parts(
        intrinsics: CameraIntrinsics,
        data: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self, DepthError> {
        let n = intrinsics.width * intrinsics.height;
        for len in [data.len(), valid.len()] {
            if len != n {
                return Err(DepthError::Shape {
                    expected: n,
                    got: len,
                });
            }
        }
        let mut f = Self {
            width: intrinsics.width,
            height: intrinsics.height,
            data,
            valid,
            intrinsics,
        };
        for i in 0..n {
            if !f.valid[i] {
                f.data[i] = HOLE_SENTINEL;
            } else if !(f.data[i] > 0.0 && f.data[i] < 10.0) {
                return Err(DepthError::OutOfRange {
                    u: i % f.width,
                    v: i / f.width,
                    depth: f.data[i],
                });
            }
        }
        Ok(f)
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let i = self.index(u, v);
        self.valid[i].then(|| self.data[i])
    }

    /// Depth at a cell known to be valid (inpainted frames). Falls back to
    /// `None` semantics by returning +inf for holes so comparisons treat a
    /// hole as "far".
    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f64 {
        let i = self.index(u, v);
        if self.valid[i] {
            self.data[i]
        } else {
            f64::INFINITY
        }
    }

    /// Nearest-pixel sample at a continuous coordinate; `None` outside the
    /// frame.
    #[inline]
    pub fn sample(&self, u: f64, v: f64) -> Option<f64> {
        if u < 0.0 || v < 0.0 {
            return None;
        }
        let (iu, iv) = (u as usize, v as usize);
        if iu >= self.width || iv >= self.height {
            return None;
        }
        Some(self.at(iu, iv))
    }

    pub fn set(&mut self, u: usize, v: usize, depth: f64) {
        let i = self.index(u, v);
        self.data[i] = depth;
        self.valid[i] = true;
    }

    pub fn punch_hole(&mut self, u: usize, v: usize) {
        let i = self.index(u, v);
        self.data[i] = HOLE_SENTINEL;
        self.valid[i] = false;
    }

    pub fn hole_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    pub fn valid_range(&self) -> Option<(f64, f64)> {
        let mut it = self
            .data
            .iter()
            .zip(&self.valid)
            .filter(|(_, ok)| **ok)
            .map(|(d, _)| *d);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d))))
    }

    /// 16-bit single-channel PNG in millimeters, 0 = hole.
    pub fn to_png_mm(&self) -> Result<Vec<u8>, DepthError> {
        let pixels: Vec<u16> = self
            .data
            .iter()
            .zip(&self.valid)
            .map(|(d, ok)| {
                if *ok {
                    (d * 1000.0).round().clamp(1.0, 65535.0) as u16
                } else {
                    0
                }
            })
            .collect();
        let img: ImageBuffer<Luma<u16>, Vec<u16>> =
            ImageBuffer::from_raw(self.width as u32, self.height as u32, pixels)
                .expect("buffer matches frame dims");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn from_png_mm(bytes: &[u8], intrinsics: CameraIntrinsics) -> Result<Self, DepthError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.into_luma16();
        let (w, h) = img.dimensions();
        let n = (w * h) as usize;
        if n != intrinsics.width * intrinsics.height {
            return Err(DepthError::Shape {
                expected: intrinsics.width * intrinsics.height,
                got: n,
            });
        }
        let raw = img.into_raw();
        let valid: Vec<bool> = raw.iter().map(|p| *p != 0).collect();
        let data = raw.iter().map(|p| *p as f64 / 1000.0).collect();
        Self::from_parts(intrinsics, data, valid)
    }
}

/// Axis-separable affine map between two pixel coordinate systems:
/// `dst = src * scale + offset`, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelTransform {
    pub scale_u: f64,
    pub scale_v: f64,
    pub offset_u: f64,
    pub offset_v: f64,
}

impl PixelTransform {
    pub fn identity() -> Self {
        Self {
            scale_u: 1.0,
            scale_v: 1.0,
            offset_u: 0.0,
            offset_v: 0.0,
        }
    }

    pub fn forward(&self, u: f64, v: f64) -> (f64, f64) {
        (u * self.scale_u + self.offset_u, v * self.scale_v + self.offset_v)
    }

    pub fn backward(&self, u: f64, v: f64) -> (f64, f64) {
        ((u - self.offset_u) / self.scale_u, (v - self.offset_v) / self.scale_v)
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &PixelTransform) -> PixelTransform {
        PixelTransform {
            scale_u: self.scale_u * first.scale_u,
            scale_v: self.scale_v * first.scale_v,
            offset_u: self.scale_u * first.offset_u + self.offset_u,
            offset_v: self.scale_v * first.offset_v + self.offset_v,
        }
    }

    /// Intrinsics of an image produced from `cam` through this transform.
    pub fn map_intrinsics(&self, cam: &CameraIntrinsics, width: usize, height: usize) -> CameraIntrinsics {
        CameraIntrinsics {
            fx: cam.fx * self.scale_u,
            fy: cam.fy * self.scale_v,
            cx: cam.cx * self.scale_u + self.offset_u,
            cy: cam.cy * self.scale_v + self.offset_v,
            width,
            height,
        }
    }
}
