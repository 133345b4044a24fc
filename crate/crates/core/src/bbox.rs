use serde::{Deserialize, Serialize};

/// Axis-aligned pixel rectangle with continuous edges: `u_min <= u < u_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl BoundingBox {
    pub fn new(u_min: f64, v_min: f64, u_max: f64, v_max: f64) -> Self {
        Self {
            u_min,
            v_min,
            u_max,
            v_max,
        }
    }

    pub fn width(&self) -> f64 {
        (self.u_max - self.u_min).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.v_max - self.v_min).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_proper(&self) -> bool {
        self.u_min < self.u_max && self.v_min < self.v_max
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.u_min + self.u_max),
            0.5 * (self.v_min + self.v_max),
        )
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u_min && u < self.u_max && v >= self.v_min && v < self.v_max
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = self.u_max.min(other.u_max) - self.u_min.max(other.u_min);
        let h = self.v_max.min(other.v_max) - self.v_min.max(other.v_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            u_min: self.u_min.min(other.u_min),
            v_min: self.v_min.min(other.v_min),
            u_max: self.u_max.max(other.u_max),
            v_max: self.v_max.max(other.v_max),
        }
    }

    pub fn clamp_to(&self, width: usize, height: usize) -> BoundingBox {
        let (w, h) = (width as f64, height as f64);
        BoundingBox {
            u_min: self.u_min.clamp(0.0, w),
            v_min: self.v_min.clamp(0.0, h),
            u_max: self.u_max.clamp(0.0, w),
            v_max: self.v_max.clamp(0.0, h),
        }
    }

    pub fn within(&self, width: usize, height: usize) -> bool {
        self.u_min >= 0.0
            && self.v_min >= 0.0
            && self.u_max <= width as f64
            && self.v_max <= height as f64
    }
}
