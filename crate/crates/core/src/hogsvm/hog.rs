use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{gradients, GrayImage};

/// Descriptor geometry. The defaults give 6×6 cells of 8 px on a 48-px
/// window, 5×5 overlapping 2×2-cell blocks and 9 unsigned bins: 900 values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HogConfig {
    pub window_side: usize,
    pub cell: usize,
    /// Block side in cells.
    pub block: usize,
    /// Block stride in cells.
    pub block_stride: usize,
    pub bins: usize,
    pub epsilon: f64,
}

impl Default for HogConfig {
    fn default() -> Self {
        Self { window_side: 48, cell: 8, block: 2, block_stride: 1, bins: 9, epsilon: 1e-6 }
    }
}

impl HogConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.cell == 0 || !self.window_side.is_multiple_of(self.cell) {
            return bad(format!("window side {} is not a multiple of cell {}", self.window_side, self.cell));
        }
        if self.window_side < 3 {
            return bad(format!("window side {} < 3", self.window_side));
        }
        if self.bins < 2 {
            return bad(format!("bins = {} (need >= 2)", self.bins));
        }
        if self.block == 0 || self.block_stride == 0 || self.block > self.cells_per_side() {
            return bad(format!(
                "block {} / stride {} invalid for {} cells per side",
                self.block,
                self.block_stride,
                self.cells_per_side()
            ));
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be > 0".into());
        }
        Ok(())
    }

    pub fn cells_per_side(&self) -> usize {
        self.window_side / self.cell
    }

    pub fn blocks_per_side(&self) -> usize {
        (self.cells_per_side() - self.block) / self.block_stride + 1
    }

    pub fn block_len(&self) -> usize {
        self.block * self.block * self.bins
    }

    pub fn descriptor_len(&self) -> usize {
        self.blocks_per_side().pow(2) * self.block_len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn hog_descriptor(window: &GrayImage, cfg: &HogConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    if window.width() != cfg.window_side || window.height() != cfg.window_side {
        return Err(Error::WrongWindowSize {
            got_w: window.width(),
            got_h: window.height(),
            expected: cfg.window_side,
        });
    }
    let grad = gradients(window)?;
    let cells = cfg.cells_per_side();
    let bins = cfg.bins;
    let bin_width = 180.0 / bins as f64;

    // Bin k is centered on k·bin_width; a vote is split linearly between the
    // two nearest centers, wrapping at 180°.
    let mut hist = vec![0.0f64; cells * cells * bins];
    let side = cfg.window_side;
    for y in 0..side {
        let row = (y / cfg.cell) * cells;
        for x in 0..side {
            let i = y * side + x;
            let mag = grad.magnitude[i];
            if mag == 0.0 {
                continue;
            }
            let pos = grad.orientation[i] / bin_width;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = (lo as usize) % bins;
            let hi = (lo + 1) % bins;
            let base = (row + x / cfg.cell) * bins;
            hist[base + lo] += mag * (1.0 - frac);
            hist[base + hi] += mag * frac;
        }
    }

    let blocks = cfg.blocks_per_side();
    let mut out = Vec::with_capacity(cfg.descriptor_len());
    for by in 0..blocks {
        for bx in 0..blocks {
            let start = out.len();
            for cy in 0..cfg.block {
                for cx in 0..cfg.block {
                    let cell = (by * cfg.block_stride + cy) * cells + bx * cfg.block_stride + cx;
                    out.extend_from_slice(&hist[cell * bins..(cell + 1) * bins]);
                }
            }
            let block = &mut out[start..];
            let norm = (block.iter().map(|v| v * v).sum::<f64>() + cfg.epsilon * cfg.epsilon).sqrt();
            block.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(FeatureVector(out))
}
