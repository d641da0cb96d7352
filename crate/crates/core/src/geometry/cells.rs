use serde::{Deserialize, Serialize};

use super::{Point, Window};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Integer label of the half-open square
/// `[d(i1 - 1/2), d(i1 + 1/2)) x [d(i2 - 1/2), d(i2 + 1/2))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub i1: i64,
    pub i2: i64,
}

impl CellIndex {
    pub fn new(i1: i64, i2: i64) -> Self {
        Self { i1, i2 }
    }

    /// Sup-norm distance between two indices.
    pub fn chebyshev(&self, other: &CellIndex) -> i64 {
        (self.i1 - other.i1).abs().max((self.i2 - other.i2).abs())
    }
}

fn floor_to_i64<T: Scalar>(v: T) -> Result<i64> {
    v.floor()
        .to_i64()
        .ok_or_else(|| Error::InvalidInput(format!("cell coordinate {v} out of range")))
}

/// Cell of the origin-anchored grid of side `d` containing `point`.
pub fn cell_index<T: Scalar>(point: &Point<T>, d: T) -> Result<CellIndex> {
    if !(d > T::zero()) || !d.is_finite() {
        return Err(Error::InvalidInput(format!("cell size {d} must be positive")));
    }
    if !point.is_finite() {
        return Err(Error::InvalidInput("non-finite coordinates".into()));
    }
    let half = T::lit(0.5);
    Ok(CellIndex::new(
        floor_to_i64(point.x / d + half)?,
        floor_to_i64(point.y / d + half)?,
    ))
}

/// Tiling of a window by squares of side `d`.
///
/// When the window edges fall on the origin-anchored grid lines the cells
/// are exactly the `cell_index` cells. Otherwise the grid is translated by
/// the smallest offset that puts the lower-left corner on a grid line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellGrid<T> {
    pub window: Window<T>,
    pub size: T,
    pub offset: Point<T>,
    pub first: CellIndex,
    pub nx: usize,
    pub ny: usize,
}

fn cell_count<T: Scalar>(side: T, d: T) -> Option<usize> {
    let n = (side / d).round();
    let tol = T::lit(1e-9) * side;
    if n >= T::one() && (side - n * d).abs() <= tol {
        n.to_usize()
    } else {
        None
    }
}

fn axis_offset<T: Scalar>(lo: T, d: T) -> (T, i64) {
    let half = T::lit(0.5);
    let k = (lo / d + half).round();
    let mut off = lo - d * (k - half);
    if off.abs() <= T::lit(1e-9) * d {
        off = T::zero();
    }
    (off, k.to_i64().unwrap_or(0))
}

/// Partition of `window` into the `d`-cells that tile it.
pub fn cell_partition<T: Scalar>(window: &Window<T>, d: T) -> Result<CellGrid<T>> {
    if !(d > T::zero()) || !d.is_finite() {
        return Err(Error::InvalidInput(format!("cell size {d} must be positive")));
    }
    let misaligned = || Error::MisalignedWindow {
        width: window.width().to_f64_lossy(),
        height: window.height().to_f64_lossy(),
        cell: d.to_f64_lossy(),
    };
    let nx = cell_count(window.width(), d).ok_or_else(misaligned)?;
    let ny = cell_count(window.height(), d).ok_or_else(misaligned)?;
    let (ox, kx) = axis_offset(window.xmin, d);
    let (oy, ky) = axis_offset(window.ymin, d);
    Ok(CellGrid {
        window: *window,
        size: d,
        offset: Point::new(ox, oy),
        first: CellIndex::new(kx, ky),
        nx,
        ny,
    })
}

impl<T: Scalar> CellGrid<T> {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All cells in lexicographic `(i1, i2)` order.
    pub fn cells(&self) -> Vec<CellIndex> {
        let mut out = Vec::with_capacity(self.len());
        for a in 0..self.nx as i64 {
            for b in 0..self.ny as i64 {
                out.push(CellIndex::new(self.first.i1 + a, self.first.i2 + b));
            }
        }
        out
    }

    /// Cell containing `p`. Points on the closed upper edges of the window
    /// are assigned to the last row/column.
    pub fn locate(&self, p: &Point<T>) -> Result<CellIndex> {
        let shifted = Point::new(p.x - self.offset.x, p.y - self.offset.y);
        let raw = cell_index(&shifted, self.size)?;
        let clamp = |v: i64, lo: i64, n: usize| v.clamp(lo, lo + n as i64 - 1);
        Ok(CellIndex::new(
            clamp(raw.i1, self.first.i1, self.nx),
            clamp(raw.i2, self.first.i2, self.ny),
        ))
    }

    /// Row-major position of a cell in `cells()`, if it belongs to the grid.
    pub fn position(&self, c: &CellIndex) -> Option<usize> {
        let a = c.i1 - self.first.i1;
        let b = c.i2 - self.first.i2;
        if a < 0 || b < 0 || a >= self.nx as i64 || b >= self.ny as i64 {
            return None;
        }
        Some(a as usize * self.ny + b as usize)
    }

    pub fn cell_window(&self, c: &CellIndex) -> Result<Window<T>> {
        let half = T::lit(0.5);
        let d = self.size;
        let cx = T::from_i64(c.i1).unwrap_or_else(T::zero);
        let cy = T::from_i64(c.i2).unwrap_or_else(T::zero);
        Window::new(
            d * (cx - half) + self.offset.x,
            d * (cx + half) + self.offset.x,
            d * (cy - half) + self.offset.y,
            d * (cy + half) + self.offset.y,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_index_examples() {
        assert_eq!(cell_index(&Point::new(0.4, 0.6), 1.0).unwrap(), CellIndex::new(0, 1));
        assert_eq!(cell_index(&Point::new(0.5, 0.5), 1.0).unwrap(), CellIndex::new(1, 1));
        assert_eq!(cell_index(&Point::new(-1.2, 0.0), 0.5).unwrap(), CellIndex::new(-2, 0));
    }

    #[test]
    fn cell_index_rejects_bad_input() {
        assert!(cell_index(&Point::new(f64::NAN, 0.0), 1.0).is_err());
        assert!(cell_index(&Point::new(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn partition_examples() {
        let unit = Window::new(-0.5, 0.5, -0.5, 0.5).unwrap();
        assert_eq!(cell_partition(&unit, 1.0).unwrap().cells(), vec![CellIndex::new(0, 0)]);

        let w = Window::new(-1.5, 1.5, -1.5, 1.5).unwrap();
        let cells = cell_partition(&w, 1.0).unwrap().cells();
        assert_eq!(cells.len(), 9);
        for c in &cells {
            assert!(c.chebyshev(&CellIndex::new(0, 0)) <= 1);
        }

        assert_eq!(cell_partition(&unit, 0.25).unwrap().len(), 16);
    }

    #[test]
    fn partition_rejects_misaligned() {
        let w = Window::new(0.0, 1.3, 0.0, 1.0).unwrap();
        assert!(matches!(cell_partition(&w, 0.5), Err(Error::MisalignedWindow { .. })));
    }

    #[test]
    fn aligned_grid_agrees_with_cell_index() {
        let w = Window::new(-1.5, 1.5, -0.5, 2.5).unwrap();
        let g = cell_partition(&w, 1.0).unwrap();
        assert_eq!(g.offset, Point::new(0.0, 0.0));
        for &(x, y) in &[(-1.2, 0.1), (0.49, 2.3), (1.499, -0.5)] {
            let p = Point::new(x, y);
            assert_eq!(g.locate(&p).unwrap(), cell_index(&p, 1.0).unwrap());
        }
    }

    #[test]
    fn locate_clamps_upper_edge() {
        let w = Window::new(0.0, 2.0, 0.0, 2.0).unwrap();
        let g = cell_partition(&w, 1.0).unwrap();
        let c = g.locate(&Point::new(2.0, 2.0)).unwrap();
        assert!(g.position(&c).is_some());
    }

    #[test]
    fn cell_windows_tile() {
        let w = Window::new(0.0, 3.0, 1.0, 3.0).unwrap();
        let g = cell_partition(&w, 0.5).unwrap();
        let total: f64 = g.cells().iter().map(|c| g.cell_window(c).unwrap().area()).sum();
        assert!((total - w.area()).abs() < 1e-12);
        for c in g.cells() {
            let cw = g.cell_window(&c).unwrap();
            assert_eq!(g.locate(&cw.center()).unwrap(), c);
        }
    }
}
