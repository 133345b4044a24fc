use super::PerceptionError;
use crate::depth::{DepthFrame, PixelTransform, HOLE_SENTINEL};
use serde::{Deserialize, Serialize};

/// Integer pixel rectangle `[u0, u0 + w) x [v0, v0 + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub u0: usize,
    pub v0: usize,
    pub w: usize,
    pub h: usize,
}

impl Roi {
    pub fn full(frame: &DepthFrame) -> Self {
        Self {
            u0: 0,
            v0: 0,
            w: frame.width,
            h: frame.height,
        }
    }

    /// Full-frame to output pixel mapping for an output of `out_w x out_h`.
    pub fn transform(&self, out_w: usize, out_h: usize) -> PixelTransform {
        let su = out_w as f64 / self.w as f64;
        let sv = out_h as f64 / self.h as f64;
        PixelTransform {
            scale_u: su,
            scale_v: sv,
            offset_u: -(self.u0 as f64) * su,
            offset_v: -(self.v0 as f64) * sv,
        }
    }
}

/// Crop to `roi` and rescale to `out_w x out_h` by nearest neighbor. The
/// output carries the intrinsics of the resampled image, and an output
/// pixel is a hole exactly when its source pixel is.
pub fn preprocess_depth(
    raw: &DepthFrame,
    roi: Roi,
    out_w: usize,
    out_h: usize,
) -> Result<DepthFrame, PerceptionError> {
    if roi.w == 0 || roi.h == 0 || roi.u0 + roi.w > raw.width || roi.v0 + roi.h > raw.height || out_w == 0 || out_h == 0
    {
        return Err(PerceptionError::BadRoi(roi));
    }
    let n = out_w * out_h;
    let mut data = vec![HOLE_SENTINEL; n];
    let mut valid = vec![false; n];
    for j in 0..out_h {
        let sv = roi.v0 + (((j as f64 + 0.5) * roi.h as f64 / out_h as f64) as usize).min(roi.h - 1);
        for i in 0..out_w {
            let su = roi.u0 + (((i as f64 + 0.5) * roi.w as f64 / out_w as f64) as usize).min(roi.w - 1);
            let s = raw.index(su, sv);
            if raw.valid[s] {
                data[j * out_w + i] = raw.data[s];
                valid[j * out_w + i] = true;
            }
        }
    }
    let intrinsics = roi.transform(out_w, out_h).map_intrinsics(&raw.intrinsics, out_w, out_h);
    Ok(DepthFrame {
        width: out_w,
        height: out_h,
        data,
        valid,
        intrinsics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraIntrinsics;

    fn ramp(w: usize, h: usize) -> DepthFrame {
        let cam = CameraIntrinsics {
            width: w,
            height: h,
            cx: w as f64 / 2.0,
            cy: h as f64 / 2.0,
            ..Default::default()
        };
        let data = (0..w * h).map(|i| 0.5 + i as f64 * 1e-4).collect();
        DepthFrame::from_parts(cam, data, vec![true; w * h]).unwrap()
    }

    #[test]
    fn full_roi_same_size_is_identity() {
        let f = ramp(40, 30);
        let out = preprocess_depth(&f, Roi::full(&f), 40, 30).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn left_half_doubles_columns() {
        let f = ramp(40, 30);
        let roi = Roi { u0: 0, v0: 0, w: 20, h: 30 };
        let out = preprocess_depth(&f, roi, 40, 30).unwrap();
        for v in 0..30 {
            for u in 0..40 {
                assert_eq!(out.get(u, v), f.get(u / 2, v));
            }
        }
        assert_eq!(out.intrinsics.fx, 2.0 * f.intrinsics.fx);
    }

    #[test]
    fn all_holes_stay_holes() {
        let mut f = ramp(10, 8);
        f.valid.iter_mut().for_each(|v| *v = false);
        f.data.iter_mut().for_each(|d| *d = HOLE_SENTINEL);
        let out = preprocess_depth(&f, Roi::full(&f), 23, 17).unwrap();
        assert_eq!(out.hole_count(), 23 * 17);
    }

    #[test]
    fn rejects_roi_outside_frame() {
        let f = ramp(10, 8);
        let roi = Roi { u0: 5, v0: 0, w: 6, h: 8 };
        assert_eq!(preprocess_depth(&f, roi, 10, 8), Err(PerceptionError::BadRoi(roi)));
    }
}
