use super::{Point, Window};
use crate::scalar::Scalar;

const MAX_BUCKETS_PER_SIDE: usize = 1024;

/// Uniform bucket grid over a window for fixed-radius neighbour queries.
///
/// Stores caller-owned ids. Locations outside the window are clamped into
/// the border buckets, which keeps queries exact for any location.
#[derive(Clone, Debug)]
pub struct BucketGrid<T> {
    origin: Point<T>,
    cell: T,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<T: Scalar> BucketGrid<T> {
    pub fn new(window: &Window<T>, cell: T) -> Self {
        let max_side = T::from_usize_lossy(MAX_BUCKETS_PER_SIDE);
        let min_cell = window.width().max(window.height()) / max_side;
        let cell = if cell.is_finite() && cell > min_cell { cell } else { min_cell };
        let nx = ((window.width() / cell).ceil().to_usize().unwrap_or(1)).clamp(1, MAX_BUCKETS_PER_SIDE);
        let ny = ((window.height() / cell).ceil().to_usize().unwrap_or(1)).clamp(1, MAX_BUCKETS_PER_SIDE);
        Self {
            origin: Point::new(window.xmin, window.ymin),
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        }
    }

    /// Grid over `window` holding `points` with ids `0..points.len()`.
    pub fn from_points(window: &Window<T>, cell: T, points: impl IntoIterator<Item = Point<T>>) -> Self {
        let mut g = Self::new(window, cell);
        for (i, p) in points.into_iter().enumerate() {
            g.insert(i, &p);
        }
        g
    }

    fn coord(&self, v: T, lo: T, n: usize) -> usize {
        let k = ((v - lo) / self.cell).floor();
        if !(k > T::zero()) {
            0
        } else {
            k.to_usize().unwrap_or(n - 1).min(n - 1)
        }
    }

    fn bucket_of(&self, p: &Point<T>) -> usize {
        self.coord(p.x, self.origin.x, self.nx) * self.ny + self.coord(p.y, self.origin.y, self.ny)
    }

    pub fn insert(&mut self, id: usize, p: &Point<T>) {
        let b = self.bucket_of(p);
        self.buckets[b].push(id);
    }

    /// Removes `id` stored at location `p`. Returns false if absent.
    pub fn remove(&mut self, id: usize, p: &Point<T>) -> bool {
        let b = self.bucket_of(p);
        let bucket = &mut self.buckets[b];
        match bucket.iter().position(|&v| v == id) {
            Some(pos) => {
                bucket.swap_remove(pos);
                true
            }
            None => false,
        }
    }

    /// Renames the id stored at location `p`.
    pub fn relabel(&mut self, old: usize, new: usize, p: &Point<T>) {
        let b = self.bucket_of(p);
        if let Some(v) = self.buckets[b].iter_mut().find(|v| **v == old) {
            *v = new;
        }
    }

    /// Appends to `out` every stored id whose bucket meets the square of
    /// half-side `r` around `p`. Callers filter by exact distance.
    pub fn candidates(&self, p: &Point<T>, r: T, out: &mut Vec<usize>) {
        let x0 = self.coord(p.x - r, self.origin.x, self.nx);
        let x1 = self.coord(p.x + r, self.origin.x, self.nx);
        let y0 = self.coord(p.y - r, self.origin.y, self.ny);
        let y1 = self.coord(p.y + r, self.origin.y, self.ny);
        for bx in x0..=x1 {
            for by in y0..=y1 {
                out.extend_from_slice(&self.buckets[bx * self.ny + by]);
            }
        }
    }
}
