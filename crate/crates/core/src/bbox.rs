use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned integer box `[x, x+w) × [y, y+h)`.
///
/// Iris boxes are squares; `square` records that intent so a box that lost
/// its squareness through clipping can still be told apart from a genuinely
/// rectangular one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
    pub square: bool,
}

impl BBox {
    pub fn new(x: i64, y: i64, w: i64, h: i64) -> Result<Self> {
        if w < 1 || h < 1 {
            return Err(Error::InvalidArgument(format!("box size {w}x{h}")));
        }
        Ok(Self { x, y, w, h, square: w == h })
    }

    /// Panics on a non-positive side; meant for literals and derived geometry.
    pub fn square(x: i64, y: i64, side: i64) -> Self {
        assert!(side >= 1, "box side must be positive");
        Self { x, y, w: side, h: side, square: true }
    }

    #[inline]
    pub fn right(&self) -> i64 {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> i64 {
        self.y + self.h
    }

    #[inline]
    pub fn area(&self) -> i64 {
        self.w * self.h
    }

    /// Side used for scale bookkeeping; equals `w` for unclipped squares.
    pub fn side(&self) -> i64 {
        self.w.min(self.h)
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| BBox { x: x0, y: y0, w: x1 - x0, h: y1 - y0, square: false })
    }

    #[inline]
    pub fn intersection_area(&self, other: &BBox) -> i64 {
        let w = (self.right().min(other.right()) - self.x.max(other.x)).max(0);
        let h = (self.bottom().min(other.bottom()) - self.y.max(other.y)).max(0);
        w * h
    }

    /// Clip to the image domain `[0, width) × [0, height)`, keeping the
    /// square intent flag. `None` if nothing is left.
    pub fn clip(&self, width: usize, height: usize) -> Option<BBox> {
        let frame = BBox { x: 0, y: 0, w: width as i64, h: height as i64, square: false };
        self.intersection(&frame).map(|b| BBox { square: self.square, ..b })
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub fn contains_pixel(&self, x: i64, y: i64) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }
}
