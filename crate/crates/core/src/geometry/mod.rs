//! Planar geometry kernels: windows, the integer cell grid, disc areas,
//! nearest-neighbour graphs and a bucket index for range queries.

mod cells;
mod discs;
mod index;
pub(crate) mod knn;

pub use cells::{cell_index, cell_partition, CellGrid, CellIndex};
pub use discs::{added_disc_area, covered_area, disc_overlap_area, union_disc_area};
pub use index::BucketGrid;
pub use knn::{knn_graph, knn_lists};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A location in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &Self) -> T {
        self.dist2(other).sqrt()
    }

    #[inline]
    pub fn norm(&self) -> T {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    #[inline]
    pub fn translate(&self, dx: T, dy: T) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned rectangle `[xmin, xmax] x [ymin, ymax]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window<T> {
    pub xmin: T,
    pub xmax: T,
    pub ymin: T,
    pub ymax: T,
}

impl<T: Scalar> Window<T> {
    pub fn new(xmin: T, xmax: T, ymin: T, ymax: T) -> Result<Self> {
        let all_finite = [xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite());
        if !all_finite || xmax <= xmin || ymax <= ymin {
            return Err(Error::InvalidInput(format!(
                "degenerate window [{xmin}, {xmax}] x [{ymin}, {ymax}]"
            )));
        }
        Ok(Self { xmin, xmax, ymin, ymax })
    }

    /// Square `[-half, half]^2`.
    pub fn centered_square(half: T) -> Result<Self> {
        Self::new(-half, half, -half, half)
    }

    pub fn width(&self) -> T {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> T {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point<T> {
        let two = T::lit(2.0);
        Point::new((self.xmin + self.xmax) / two, (self.ymin + self.ymax) / two)
    }

    /// Closed-rectangle membership.
    #[inline]
    pub fn contains(&self, p: &Point<T>) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn contains_window(&self, other: &Window<T>) -> bool {
        other.xmin >= self.xmin
            && other.xmax <= self.xmax
            && other.ymin >= self.ymin
            && other.ymax <= self.ymax
    }

    /// Shrinks every side by `d`.
    pub fn erode(&self, d: T) -> Result<Self> {
        if !(d >= T::zero()) {
            return Err(Error::InvalidInput(format!("erosion distance {d} must be >= 0")));
        }
        let w = Self {
            xmin: self.xmin + d,
            xmax: self.xmax - d,
            ymin: self.ymin + d,
            ymax: self.ymax - d,
        };
        if w.xmax <= w.xmin || w.ymax <= w.ymin {
            return Err(Error::WindowTooSmall(format!(
                "eroding {}x{} window by {d} leaves nothing",
                self.width(),
                self.height()
            )));
        }
        Ok(w)
    }

    pub fn dilate(&self, d: T) -> Self {
        Self {
            xmin: self.xmin - d,
            xmax: self.xmax + d,
            ymin: self.ymin - d,
            ymax: self.ymax + d,
        }
    }

    /// Largest window with the same center whose sides are integer multiples
    /// of `d`.
    pub fn snap_to_multiple(&self, d: T) -> Result<Self> {
        if !(d > T::zero()) {
            return Err(Error::InvalidInput(format!("cell size {d} must be > 0")));
        }
        let eps = T::lit(1e-9);
        let nx = (self.width() / d + eps).floor();
        let ny = (self.height() / d + eps).floor();
        if nx < T::one() || ny < T::one() {
            return Err(Error::WindowTooSmall(format!(
                "window {}x{} holds no cell of size {d}",
                self.width(),
                self.height()
            )));
        }
        let c = self.center();
        let two = T::lit(2.0);
        let (hx, hy) = (nx * d / two, ny * d / two);
        Self::new(c.x - hx, c.x + hx, c.y - hy, c.y + hy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_rejects_degenerate() {
        assert!(Window::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(Window::new(0.0, 1.0, 2.0, 1.0).is_err());
        assert!(Window::new(0.0, f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn snap_shrinks_symmetrically() {
        let w = Window::<f64>::new(0.0, 10.5, 0.0, 10.0).unwrap();
        let s = w.snap_to_multiple(1.0).unwrap();
        assert!((s.width() - 10.0).abs() < 1e-12);
        assert!((s.xmin - 0.25).abs() < 1e-12);
        assert_eq!(s.height(), 10.0);
    }
}
