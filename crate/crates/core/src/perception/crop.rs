use super::PerceptionError;
use crate::bbox::BoundingBox;
use crate::depth::{DepthFrame, PixelTransform};

/// A box-centered crop and the full-frame to crop pixel mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct Crop {
    pub frame: DepthFrame,
    pub transform: PixelTransform,
    /// Padded source window in full-frame pixels.
    pub window: BoundingBox,
    /// The requested box in crop pixels.
    pub bbox: BoundingBox,
}

impl Crop {
    pub fn to_full(&self, u: f64, v: f64) -> (f64, f64) {
        self.transform.backward(u, v)
    }

    pub fn to_crop(&self, u: f64, v: f64) -> (f64, f64) {
        self.transform.forward(u, v)
    }
}

/// Expand `bbox` by `pad` pixels (clamped to the frame), then scale it
/// uniformly to fit `out_w x out_h`, centered. Output pixels beyond the
/// window sample the frame too (edge-replicated past its border), so an
/// inpainted input gives an all-valid crop.
pub fn crop_to_box(
    depth: &DepthFrame,
    bbox: &BoundingBox,
    out_w: usize,
    out_h: usize,
    pad: f64,
) -> Result<Crop, PerceptionError> {
    if !bbox.is_proper() || !bbox.within(depth.width, depth.height) || out_w == 0 || out_h == 0 || !(pad >= 0.0) {
        return Err(PerceptionError::BadBox(*bbox));
    }
    let window = BoundingBox::new(bbox.u_min - pad, bbox.v_min - pad, bbox.u_max + pad, bbox.v_max + pad)
        .clamp_to(depth.width, depth.height);
    let s = (out_w as f64 / window.width()).min(out_h as f64 / window.height());
    let (wc_u, wc_v) = window.center();
    let transform = PixelTransform {
        scale_u: s,
        scale_v: s,
        offset_u: out_w as f64 / 2.0 - s * wc_u,
        offset_v: out_h as f64 / 2.0 - s * wc_v,
    };
    let n = out_w * out_h;
    let mut data = vec![0.0; n];
    let mut valid = vec![false; n];
    for j in 0..out_h {
        for i in 0..out_w {
            let (u, v) = transform.backward(i as f64 + 0.5, j as f64 + 0.5);
            let su = (u.floor().max(0.0) as usize).min(depth.width - 1);
            let sv = (v.floor().max(0.0) as usize).min(depth.height - 1);
            let k = depth.index(su, sv);
            data[j * out_w + i] = depth.data[k];
            valid[j * out_w + i] = depth.valid[k];
        }
    }
    let (a, b) = transform.forward(bbox.u_min, bbox.v_min);
    let (c, d) = transform.forward(bbox.u_max, bbox.v_max);
    Ok(Crop {
        frame: DepthFrame {
            width: out_w,
            height: out_h,
            data,
            valid,
            intrinsics: transform.map_intrinsics(&depth.intrinsics, out_w, out_h),
        },
        transform,
        window,
        bbox: BoundingBox::new(a, b, c, d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraIntrinsics;

    fn frame() -> DepthFrame {
        let cam = CameraIntrinsics::default();
        let n = cam.width * cam.height;
        let data = (0..n).map(|i| 0.4 + (i % 977) as f64 * 1e-4).collect();
        DepthFrame::from_parts(cam, data, vec![true; n]).unwrap()
    }

    #[test]
    fn forty_pixel_box_scales_by_one_point_six() {
        let f = frame();
        let b = BoundingBox::new(100.0, 100.0, 140.0, 140.0);
        let c = crop_to_box(&f, &b, 96, 96, 10.0).unwrap();
        assert_eq!(c.window, BoundingBox::new(90.0, 90.0, 150.0, 150.0));
        assert!((c.transform.scale_u - 1.6).abs() < 1e-12);
        assert!((c.bbox.u_min - 16.0).abs() < 1e-9 && (c.bbox.u_max - 80.0).abs() < 1e-9);
        assert!((c.frame.intrinsics.fx - 800.0).abs() < 1e-9);
    }

    #[test]
    fn full_frame_box_is_a_rescale() {
        let f = frame();
        let b = BoundingBox::new(0.0, 0.0, 400.0, 250.0);
        let c = crop_to_box(&f, &b, 400, 250, 0.0).unwrap();
        assert_eq!(c.frame.data, f.data);
    }

    #[test]
    fn pixel_round_trip() {
        let f = frame();
        let b = BoundingBox::new(33.0, 71.0, 90.5, 101.0);
        let c = crop_to_box(&f, &b, 96, 96, 10.0).unwrap();
        for (u, v) in [(33.0, 71.0), (50.25, 80.5), (90.0, 100.9)] {
            let (cu, cv) = c.to_crop(u, v);
            let (fu, fv) = c.to_full(cu, cv);
            assert!((fu - u).abs() < 1e-9 && (fv - v).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_box_outside_frame() {
        let f = frame();
        let b = BoundingBox::new(390.0, 0.0, 410.0, 10.0);
        assert!(matches!(crop_to_box(&f, &b, 96, 96, 10.0), Err(PerceptionError::BadBox(_))));
    }
}
