use super::Scene;

pub const NO_OBJECT: u32 = u32::MAX;

/// Composite top-view raster of a scene at 1 mm resolution over the bin
/// floor: the highest surface at each cell and which object owns it.
#[derive(Debug, Clone)]
pub struct HeightField {
    pub res: f64,
    pub nx: usize,
    pub ny: usize,
    pub height: Vec<f64>,
    pub top: Vec<u32>,
    pub max_height: f64,
    /// (object id, resting elevation, footprint cell count) in scene order.
    pub objects: Vec<(u32, f64, usize)>,
}

impl HeightField {
    pub const DEFAULT_RES: f64 = 0.001;

    pub fn build(scene: &Scene) -> Self {
        Self::build_with_res(scene, Self::DEFAULT_RES)
    }

    pub fn build_with_res(scene: &Scene, res: f64) -> Self {
        let nx = (scene.bin_dims.length / res).round() as usize;
        let ny = (scene.bin_dims.width / res).round() as usize;
        let mut hf = HeightField {
            res,
            nx,
            ny,
            height: vec![0.0; nx * ny],
            top: vec![NO_OBJECT; nx * ny],
            max_height: 0.0,
            objects: Vec::with_capacity(scene.objects.len()),
        };
        let mut cells: Vec<(usize, f64)> = Vec::new();
        for obj in &scene.objects {
            cells.clear();
            let (x0, y0, x1, y1) = obj.world_bounds();
            let i0 = ((x0 / res).floor().max(0.0)) as usize;
            let j0 = ((y0 / res).floor().max(0.0)) as usize;
            let i1 = ((x1 / res).ceil() as usize).min(nx);
            let j1 = ((y1 / res).ceil() as usize).min(ny);
            for j in j0..j1 {
                for i in i0..i1 {
                    let (x, y) = ((i as f64 + 0.5) * res, (j as f64 + 0.5) * res);
                    let (lx, ly) = obj.to_local(x, y);
                    let h = obj.footprint.height_at(lx, ly);
                    if h > 0.0 {
                        cells.push((j * nx + i, h));
                    }
                }
            }
            let elevation = cells.iter().map(|(k, _)| hf.height[*k]).fold(0.0, f64::max);
            for (k, h) in &cells {
                hf.height[*k] = elevation + h;
                hf.top[*k] = obj.id;
                hf.max_height = hf.max_height.max(elevation + h);
            }
            hf.objects.push((obj.id, elevation, cells.len()));
        }
        hf
    }

    #[inline]
    pub fn cell(&self, x: f64, y: f64) -> Option<usize> {
        if x < 0.0 || y < 0.0 {
            return None;
        }
        let (i, j) = ((x / self.res) as usize, (y / self.res) as usize);
        (i < self.nx && j < self.ny).then(|| j * self.nx + i)
    }

    /// Surface height; the floor (0) outside the raster.
    #[inline]
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        self.cell(x, y).map_or(0.0, |k| self.height[k])
    }

    #[inline]
    pub fn top_at(&self, x: f64, y: f64) -> Option<u32> {
        self.cell(x, y)
            .map(|k| self.top[k])
            .filter(|id| *id != NO_OBJECT)
    }

    pub fn cell_center(&self, k: usize) -> (f64, f64) {
        (
            ((k % self.nx) as f64 + 0.5) * self.res,
            ((k / self.nx) as f64 + 0.5) * self.res,
        )
    }

    pub fn elevation_of(&self, id: u32) -> Option<f64> {
        self.objects.iter().find(|o| o.0 == id).map(|o| o.1)
    }

    pub fn footprint_cells(&self, id: u32) -> usize {
        self.objects.iter().find(|o| o.0 == id).map_or(0, |o| o.2)
    }

    pub fn visible_cells(&self, id: u32) -> usize {
        self.top.iter().filter(|t| **t == id).count()
    }

    /// Outward surface normal direction in the xy plane at a point, from the
    /// negated height gradient: Sobel responses summed over the
    /// `(2r+1) x (2r+1)` cells around it, which smooths the staircase of a
    /// rasterized curved outline. `None` where flat.
    pub fn outward_normal(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        self.outward_normal_r(x, y, 3)
    }

    pub fn outward_normal_r(&self, x: f64, y: f64, r: isize) -> Option<(f64, f64)> {
        let i = (x / self.res).floor() as isize;
        let j = (y / self.res).floor() as isize;
        let h = |a: isize, b: isize| -> f64 {
            if a < 0 || b < 0 || a as usize >= self.nx || b as usize >= self.ny {
                0.0
            } else {
                self.height[b as usize * self.nx + a as usize]
            }
        };
        let (mut gx, mut gy) = (0.0, 0.0);
        for cj in j - r..=j + r {
            for ci in i - r..=i + r {
                gx += (h(ci + 1, cj - 1) + 2.0 * h(ci + 1, cj) + h(ci + 1, cj + 1))
                    - (h(ci - 1, cj - 1) + 2.0 * h(ci - 1, cj) + h(ci - 1, cj + 1));
                gy += (h(ci - 1, cj + 1) + 2.0 * h(ci, cj + 1) + h(ci + 1, cj + 1))
                    - (h(ci - 1, cj - 1) + 2.0 * h(ci, cj - 1) + h(ci + 1, cj - 1));
            }
        }
        let n = (gx * gx + gy * gy).sqrt();
        (n > 1e-12).then(|| (-gx / n, -gy / n))
    }
}
