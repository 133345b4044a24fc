//! Built-in object templates. Each is a top-view heightmap patch; local x
//! runs along the patch columns and local y along the rows, origin at the
//! patch center.

use super::Footprint;
use serde::{Deserialize, Serialize};

const CELL: f64 = 0.002;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectTemplate {
    pub class_label: String,
    pub footprint: Footprint,
}

impl ObjectTemplate {
    /// Build a template by sampling `height(x, y)` (meters, local frame) at
    /// cell centers of a `length x width` patch.
    pub fn from_fn(
        label: &str,
        length: f64,
        width: f64,
        height: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let cols = (length / CELL).round() as usize;
        let rows = (width / CELL).round() as usize;
        let mut heights = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            for c in 0..cols {
                let x = (c as f64 + 0.5) * CELL - cols as f64 * CELL / 2.0;
                let y = (r as f64 + 0.5) * CELL - rows as f64 * CELL / 2.0;
                heights.push(round_um(height(x, y).max(0.0)));
            }
        }
        Self {
            class_label: label.to_string(),
            footprint: Footprint {
                cols,
                rows,
                cell_size: CELL,
                heights,
            },
        }
    }

    /// Rectangular block of uniform height.
    pub fn block(label: &str, length: f64, width: f64, height: f64) -> Self {
        Self::from_fn(label, length, width, |_, _| height)
    }
}

// Heights are stored at micrometer resolution so canonical serialization
// (six decimals) is lossless.
fn round_um(h: f64) -> f64 {
    (h * 1e6).round() / 1e6
}

fn ellipse(x: f64, y: f64, a: f64, b: f64) -> f64 {
    (x / a).powi(2) + (y / b).powi(2)
}

pub fn hammer() -> ObjectTemplate {
    // handle along +x, head across the +x end
    ObjectTemplate::from_fn("hammer", 0.160, 0.090, |x, y| {
        if x > 0.050 && y.abs() <= 0.045 {
            0.030
        } else if y.abs() <= 0.011 {
            0.022
        } else {
            0.0
        }
    })
}

pub fn dog() -> ObjectTemplate {
    ObjectTemplate::from_fn("dog", 0.124, 0.050, |x, y| {
        let head = ellipse(x - 0.044, y, 0.018, 0.018);
        let body = ellipse(x + 0.010, y, 0.050, 0.023);
        if head <= 1.0 {
            0.046
        } else if body <= 1.0 {
            0.040
        } else {
            0.0
        }
    })
}

pub fn eggplant() -> ObjectTemplate {
    ObjectTemplate::from_fn("eggplant", 0.112, 0.052, |x, y| {
        let r = ellipse(x, y, 0.055, 0.025);
        if r > 1.0 {
            0.0
        } else {
            (0.045 * (1.0 - r).sqrt()).max(0.018)
        }
    })
}

pub fn duck() -> ObjectTemplate {
    ObjectTemplate::from_fn("duck", 0.100, 0.066, |x, y| {
        let head = ellipse(x - 0.030, y, 0.015, 0.015);
        let body = ellipse(x + 0.012, y, 0.036, 0.032);
        if head <= 1.0 {
            0.058
        } else if body <= 1.0 {
            0.040
        } else {
            0.0
        }
    })
}

pub fn bottle() -> ObjectTemplate {
    // cylinder lying on its side, radius 26 mm
    ObjectTemplate::from_fn("bottle", 0.150, 0.052, |x, y| {
        let radius: f64 = 0.026;
        let neck = x > 0.045;
        let r = if neck { 0.012 } else { radius };
        if y.abs() > r {
            0.0
        } else {
            // neck shares the body's axis
            radius + (r * r - y * y).sqrt()
        }
    })
}

pub fn block() -> ObjectTemplate {
    ObjectTemplate::block("block", 0.060, 0.040, 0.035)
}

/// The default six-class catalog.
pub fn default_catalog() -> Vec<ObjectTemplate> {
    vec![hammer(), dog(), eggplant(), duck(), bottle(), block()]
}

pub fn template_by_label<'a>(catalog: &'a [ObjectTemplate], label: &str) -> Option<&'a ObjectTemplate> {
    catalog.iter().find(|t| t.class_label == label)
}
