use super::PerceptionError;
use crate::depth::DepthFrame;

const NEIGHBORS: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Fill holes by boundary diffusion: each round, every hole with at least
/// one valid 8-neighbor takes the mean of those neighbors (as they were at
/// the start of the round) and becomes valid. Valid input pixels are never
/// touched.
pub fn inpaint(depth: &DepthFrame) -> Result<DepthFrame, PerceptionError> {
    let (w, h) = (depth.width, depth.height);
    if !depth.valid.iter().any(|v| *v) {
        return Err(PerceptionError::AllHoles);
    }
    let mut out = depth.clone();
    let mut holes: Vec<usize> = (0..w * h).filter(|i| !out.valid[*i]).collect();
    let mut fills: Vec<(usize, f64)> = Vec::with_capacity(holes.len());
    while !holes.is_empty() {
        fills.clear();
        for &k in &holes {
            let (u, v) = ((k % w) as isize, (k / w) as isize);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut vals = [0.0; 8];
            let mut n = 0;
            for (du, dv) in NEIGHBORS {
                let (a, b) = (u + du, v + dv);
                if a < 0 || b < 0 || a >= w as isize || b >= h as isize {
                    continue;
                }
                let j = b as usize * w + a as usize;
                if out.valid[j] {
                    vals[n] = out.data[j];
                    lo = lo.min(vals[n]);
                    hi = hi.max(vals[n]);
                    n += 1;
                }
            }
            if n > 0 {
                // offsets from the minimum keep equal inputs exact
                let excess: f64 = vals[..n].iter().map(|x| x - lo).sum();
                fills.push((k, (lo + excess / n as f64).clamp(lo, hi)));
            }
        }
        for &(k, d) in &fills {
            out.data[k] = d;
            out.valid[k] = true;
        }
        holes.retain(|k| !out.valid[*k]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraIntrinsics;

    fn cam(w: usize, h: usize) -> CameraIntrinsics {
        CameraIntrinsics {
            width: w,
            height: h,
            cx: w as f64 / 2.0,
            cy: h as f64 / 2.0,
            ..Default::default()
        }
    }

    #[test]
    fn no_holes_is_identity() {
        let f = DepthFrame::filled(cam(8, 6), 0.6);
        assert_eq!(inpaint(&f).unwrap(), f);
    }

    #[test]
    fn constant_frame_stays_constant() {
        let mut f = DepthFrame::filled(cam(20, 10), 0.1);
        for u in 3..15 {
            f.punch_hole(u, 4);
            f.punch_hole(u, 5);
        }
        f.punch_hole(0, 0);
        let out = inpaint(&f).unwrap();
        assert!(out.data.iter().all(|d| *d == 0.1));
        assert_eq!(out.hole_count(), 0);
    }

    #[test]
    fn all_holes_is_an_error() {
        let mut f = DepthFrame::filled(cam(3, 3), 0.6);
        for v in 0..3 {
            for u in 0..3 {
                f.punch_hole(u, v);
            }
        }
        assert_eq!(inpaint(&f), Err(PerceptionError::AllHoles));
    }

    #[test]
    fn step_edge_blob_stays_in_bounds() {
        let (w, h) = (30, 20);
        let data = (0..w * h).map(|i| if i % w < 15 { 0.50 } else { 0.46 }).collect();
        let mut f = DepthFrame::from_parts(cam(w, h), data, vec![true; w * h]).unwrap();
        for v in 6..14 {
            for u in 10..20 {
                f.punch_hole(u, v);
            }
        }
        let out = inpaint(&f).unwrap();
        for d in &out.data {
            assert!((0.46..=0.50).contains(d));
        }
        // a pixel at the blob center takes a value strictly between the two
        let mid = out.get(15, 10).unwrap();
        assert!(mid > 0.46 && mid < 0.50);
    }
}
