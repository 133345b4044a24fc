use crate::rng::{stream_rng, STREAM_GP, STREAM_HOLES};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Std-dev of the coarse-grid samples, meters.
    pub sigma_base: f64,
    /// Coarse grid spacing in pixels.
    pub grid_pitch: usize,
    pub hole_rate: f64,
    pub hole_blob_radius: f64,
    pub edge_hole_boost: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            sigma_base: 0.0015,
            grid_pitch: 8,
            hole_rate: 0.02,
            hole_blob_radius: 2.0,
            edge_hole_boost: 4.0,
        }
    }
}

impl NoiseParams {
    pub fn zero() -> Self {
        Self {
            sigma_base: 0.0,
            grid_pitch: 1,
            hole_rate: 0.0,
            hole_blob_radius: 0.0,
            edge_hole_boost: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let non_neg = [self.sigma_base, self.hole_rate, self.hole_blob_radius, self.edge_hole_boost];
        if non_neg.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err("noise parameters must be finite and non-negative".into());
        }
        if self.hole_rate > 0.5 {
            return Err(format!("hole_rate {} exceeds 0.5", self.hole_rate));
        }
        if self.grid_pitch < 1 {
            return Err("grid_pitch must be at least 1".into());
        }
        Ok(())
    }
}

/// Bilinear upsampling of a coarse `gw x gh` grid with spacing `pitch`.
fn upsample(coarse: &[f64], gw: usize, pitch: usize, w: usize, h: usize) -> Vec<f64> {
    let p = pitch as f64;
    let mut out = Vec::with_capacity(w * h);
    for j in 0..h {
        let gy = j as f64 / p;
        let y0 = gy.floor() as usize;
        let ty = gy - y0 as f64;
        for i in 0..w {
            let gx = i as f64 / p;
            let x0 = gx.floor() as usize;
            let tx = gx - x0 as f64;
            let at = |x: usize, y: usize| coarse[y * gw + x];
            let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
            let bottom = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

fn coarse_dims(w: usize, h: usize, pitch: usize) -> (usize, usize) {
    (w.saturating_sub(1) / pitch + 2, h.saturating_sub(1) / pitch + 2)
}

/// Spatially correlated zero-mean depth noise: i.i.d. Gaussian samples on a
/// coarse grid, bilinearly upsampled to `w x h`.
pub fn sample_gp_noise(seed: u64, w: usize, h: usize, params: &NoiseParams) -> Vec<f64> {
    if params.sigma_base == 0.0 {
        return vec![0.0; w * h];
    }
    let pitch = params.grid_pitch.max(1);
    let (gw, gh) = coarse_dims(w, h, pitch);
    let mut rng = stream_rng(seed, STREAM_GP);
    let normal = Normal::new(0.0, params.sigma_base).expect("sigma is finite and non-negative");
    let coarse: Vec<f64> = (0..gw * gh).map(|_| normal.sample(&mut rng)).collect();
    upsample(&coarse, gw, pitch, w, h)
}

/// Hole mask over a clean depth image (`true` = hole). Exactly
/// `round(hole_rate * w * h)` pixels are removed: the top scorers of a
/// blob-correlated random field, boosted near depth discontinuities.
pub fn hole_mask(seed: u64, clean: &[f64], w: usize, h: usize, params: &NoiseParams) -> Vec<bool> {
    let n = w * h;
    let k = (params.hole_rate * n as f64).round() as usize;
    let mut mask = vec![false; n];
    if k == 0 {
        return mask;
    }
    let edges = discontinuities(clean, w, h, params.hole_blob_radius.ceil() as usize);
    let pitch = ((2.0 * params.hole_blob_radius).round() as usize).max(1);
    let (gw, gh) = coarse_dims(w, h, pitch);
    let mut rng = stream_rng(seed, STREAM_HOLES);
    let coarse: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
    let field = upsample(&coarse, gw, pitch, w, h);
    let mut scored: Vec<(f64, usize)> = field
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let boost = if edges[i] { params.edge_hole_boost } else { 1.0 };
            (u * boost + 1e-6 * rng.random::<f64>(), i)
        })
        .collect();
    let k = k.min(n);
    scored.select_nth_unstable_by(k - 1, |a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in &scored[..k] {
        mask[*i] = true;
    }
    mask
}

/// Pixels within `radius` of a depth jump larger than 8 mm.
fn discontinuities(depth: &[f64], w: usize, h: usize, radius: usize) -> Vec<bool> {
    const JUMP: f64 = 0.008;
    let mut raw = vec![false; w * h];
    for j in 0..h {
        for i in 0..w {
            let d = depth[j * w + i];
            let right = i + 1 < w && (depth[j * w + i + 1] - d).abs() > JUMP;
            let down = j + 1 < h && (depth[(j + 1) * w + i] - d).abs() > JUMP;
            if right {
                raw[j * w + i] = true;
                raw[j * w + i + 1] = true;
            }
            if down {
                raw[j * w + i] = true;
                raw[(j + 1) * w + i] = true;
            }
        }
    }
    if radius == 0 {
        return raw;
    }
    // separable box dilation
    let mut horiz = vec![false; w * h];
    for j in 0..h {
        for i in 0..w {
            if raw[j * w + i] {
                let (a, b) = (i.saturating_sub(radius), (i + radius).min(w - 1));
                horiz[j * w + a..=j * w + b].iter_mut().for_each(|v| *v = true);
            }
        }
    }
    let mut out = vec![false; w * h];
    for j in 0..h {
        for i in 0..w {
            if horiz[j * w + i] {
                let (a, b) = (j.saturating_sub(radius), (j + radius).min(h - 1));
                for jj in a..=b {
                    out[jj * w + i] = true;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_gives_zero_field() {
        let p = NoiseParams {
            sigma_base: 0.0,
            ..Default::default()
        };
        assert!(sample_gp_noise(3, 20, 10, &p).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn same_seed_same_field() {
        let p = NoiseParams::default();
        assert_eq!(sample_gp_noise(9, 64, 48, &p), sample_gp_noise(9, 64, 48, &p));
        assert_ne!(sample_gp_noise(9, 64, 48, &p), sample_gp_noise(10, 64, 48, &p));
    }

    #[test]
    fn field_interpolates_coarse_nodes() {
        // pitch 1 reproduces the coarse samples exactly on the pixel grid
        let p = NoiseParams {
            grid_pitch: 1,
            ..Default::default()
        };
        let f = sample_gp_noise(1, 5, 4, &p);
        assert_eq!(f.len(), 20);
        assert!(f.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn hole_count_is_exact() {
        let p = NoiseParams {
            hole_rate: 0.1,
            ..Default::default()
        };
        let clean = vec![0.6; 50 * 40];
        let mask = hole_mask(4, &clean, 50, 40, &p);
        assert_eq!(mask.iter().filter(|m| **m).count(), 200);
    }

    #[test]
    fn holes_prefer_discontinuities() {
        let (w, h) = (80, 60);
        let clean: Vec<f64> = (0..w * h).map(|i| if i % w < 40 { 0.6 } else { 0.65 }).collect();
        let p = NoiseParams {
            hole_rate: 0.05,
            edge_hole_boost: 10.0,
            ..Default::default()
        };
        let mask = hole_mask(2, &clean, w, h, &p);
        let near_edge = mask
            .iter()
            .enumerate()
            .filter(|(i, m)| **m && ((i % w) as isize - 39).abs() <= 3)
            .count();
        assert!(near_edge * 2 > mask.iter().filter(|m| **m).count());
    }
}
