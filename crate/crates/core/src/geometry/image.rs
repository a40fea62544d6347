use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Row-major depth map in meters. `0` encodes a missing measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != width * height {
            return Err(GeometryError::InvalidDepth(format!(
                "{} values for a {}x{} image",
                values.len(),
                width,
                height
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(GeometryError::InvalidDepth(format!(
                "value {} at pixel ({}, {}) is negative or not finite",
                values[i],
                i % width.max(1),
                i / width.max(1)
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, depth: f64) -> Result<Self, GeometryError> {
        Self::new(width, height, vec![depth; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }

    #[cfg(test)]
    pub(crate) fn set(&mut self, u: usize, v: usize, depth: f64) {
        self.values[v * self.width + u] = depth;
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    pub fn valid_mask(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| *v > 0.0).collect(),
        }
    }
}

/// Row-major boolean image.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self, GeometryError> {
        if values.len() != width * height {
            return Err(GeometryError::DimensionMismatch {
                expected: (width, height),
                found: (values.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                values.push(f(u, v));
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.values[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        self.values[v * self.width + u] = on;
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|v| **v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.values.iter().any(|v| *v)
    }

    pub fn same_size(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }

    /// Inclusive pixel bounding box `(u_min, v_min, u_max, v_max)`.
    pub fn bbox(&self) -> Option<(usize, usize, usize, usize)> {
        let mut out: Option<(usize, usize, usize, usize)> = None;
        for v in 0..self.height {
            for u in 0..self.width {
                if self.get(u, v) {
                    out = Some(match out {
                        None => (u, v, u, v),
                        Some((a, b, c, d)) => (a.min(u), b.min(v), c.max(u), d.max(v)),
                    });
                }
            }
        }
        out
    }

    pub fn and(&self, other: &BinaryMask) -> BinaryMask {
        debug_assert!(other.same_size(self.width, self.height));
        BinaryMask {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }

    pub fn or(&self, other: &BinaryMask) -> BinaryMask {
        debug_assert!(other.same_size(self.width, self.height));
        BinaryMask {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }
}
