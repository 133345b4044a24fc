use super::Detection;
use crate::depth::DepthFrame;
use image::{ImageFormat, Rgb, RgbImage};
use std::io::Cursor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlayStyle {
    pub box_color: [u8; 3],
    pub selected_color: [u8; 3],
    pub grasp_color: [u8; 3],
}

impl Default for OverlayStyle {
    fn default() -> Self {
        Self {
            box_color: [40, 200, 60],
            selected_color: [255, 210, 0],
            grasp_color: [230, 30, 30],
        }
    }
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, Rgb(c));
    }
}

fn line(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), c: [u8; 3]) {
    let n = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    for i in 0..=n {
        let t = i as f64 / n as f64;
        put(img, (a.0 + t * (b.0 - a.0)).floor() as i64, (a.1 + t * (b.1 - a.1)).floor() as i64, c);
    }
}

/// Depth shaded near-bright/far-dark, detection boxes, the selected box
/// highlighted, and the grasp axis `(u, v, theta, opening_px)` with jaw
/// marks at both ends. Holes are drawn black.
pub fn render_overlay(
    depth: &DepthFrame,
    detections: &[Detection],
    selected: Option<usize>,
    grasp: Option<(f64, f64, f64, f64)>,
    style: &OverlayStyle,
) -> Vec<u8> {
    let (lo, hi) = depth.valid_range().unwrap_or((0.0, 1.0));
    let span = (hi - lo).max(1e-6);
    let mut img = RgbImage::new(depth.width as u32, depth.height as u32);
    for v in 0..depth.height {
        for u in 0..depth.width {
            let px = match depth.get(u, v) {
                Some(d) => {
                    let g = (40.0 + 215.0 * (hi - d) / span).round() as u8;
                    [g, g, g]
                }
                None => [0, 0, 0],
            };
            img.put_pixel(u as u32, v as u32, Rgb(px));
        }
    }
    for (i, d) in detections.iter().enumerate() {
        let c = if Some(i) == selected { style.selected_color } else { style.box_color };
        let b = &d.bbox;
        let (x0, y0, x1, y1) = (b.u_min, b.v_min, b.u_max - 1.0, b.v_max - 1.0);
        line(&mut img, (x0, y0), (x1, y0), c);
        line(&mut img, (x1, y0), (x1, y1), c);
        line(&mut img, (x1, y1), (x0, y1), c);
        line(&mut img, (x0, y1), (x0, y0), c);
    }
    if let Some((u, v, theta, open)) = grasp {
        let (s, c) = theta.sin_cos();
        let h = open / 2.0;
        let a = (u - h * c, v - h * s);
        let b = (u + h * c, v + h * s);
        line(&mut img, a, b, style.grasp_color);
        let jaw = (open / 6.0).max(3.0);
        for p in [a, b] {
            line(&mut img, (p.0 + jaw * s, p.1 - jaw * c), (p.0 - jaw * s, p.1 + jaw * c), style.grasp_color);
        }
    }
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).expect("png encoding into memory");
    out.into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::BoundingBox;
    use crate::camera::CameraIntrinsics;

    #[test]
    fn draws_box_and_axis() {
        let cam = CameraIntrinsics::default();
        let mut f = DepthFrame::filled(cam, 0.65);
        f.punch_hole(0, 0);
        let det = Detection {
            bbox: BoundingBox::new(10.0, 10.0, 50.0, 40.0),
            class_label: "block".into(),
            confidence: 0.9,
            sources: vec![],
        };
        let png = render_overlay(&f, &[det], Some(0), Some((100.5, 100.5, 0.0, 40.0)), &OverlayStyle::default());
        let img = image::load_from_memory(&png).unwrap().to_rgb8();
        assert_eq!(img.dimensions(), (400, 250));
        assert_eq!(img.get_pixel(0, 0).0, [0, 0, 0]);
        assert_eq!(img.get_pixel(10, 20).0, OverlayStyle::default().selected_color);
        assert_eq!(img.get_pixel(100, 100).0, OverlayStyle::default().grasp_color);
    }
}
