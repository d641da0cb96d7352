use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Range grid `0 <= D_1 < D_2 < ... < D_p` of one unordered type pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairBands<T> {
    pub types: (u32, u32),
    pub radii: Vec<T>,
}

/// Where a pair distance falls in a range grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BandHit {
    /// Closer than `D_1 > 0`.
    HardCore,
    /// Component index into the parameter vector.
    Band(usize),
    /// No band applies: farther than `D_p`, or closer than `D_1` when the
    /// caller does not treat `D_1` as a hard core.
    Outside,
}

/// Parameter layout shared by the multi-Strauss families.
///
/// Components are ordered mark by mark: the count of mark `m`, then the
/// bands of pairs `(m, m)`, `(m, m+1)`, ..., `(m, M)`, each pair listing its
/// bands `i = 2..p` in increasing distance. Band `i` covers
/// `[D_{i-1}, D_i]` for `i = 2` and `(D_{i-1}, D_i]` beyond.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandLayout<T> {
    marks: u32,
    radii: Vec<Vec<T>>,
    count_pos: Vec<usize>,
    band_pos: Vec<usize>,
    dim: usize,
}

impl<T: Scalar> BandLayout<T> {
    /// Pairs missing from `pairs` get the grid `[0]` (no interaction).
    pub fn new(marks: u32, pairs: &[PairBands<T>]) -> Result<Self> {
        if marks == 0 {
            return Err(Error::InvalidInput("mark count must be >= 1".into()));
        }
        let m = marks as usize;
        let n_pairs = m * (m + 1) / 2;
        let mut radii: Vec<Option<Vec<T>>> = vec![None; n_pairs];
        for pb in pairs {
            let (a, b) = pb.types;
            if a < 1 || b < 1 || a > marks || b > marks {
                return Err(Error::InvalidInput(format!("band types ({a}, {b}) outside 1..={marks}")));
            }
            if pb.radii.is_empty() {
                return Err(Error::InvalidInput(format!("empty range grid for pair ({a}, {b})")));
            }
            if pb.radii.iter().any(|r| !r.is_finite()) || pb.radii[0] < T::zero() {
                return Err(Error::InvalidInput(format!("range grid for ({a}, {b}) must be finite and >= 0")));
            }
            if pb.radii.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidInput(format!("range grid for ({a}, {b}) must be strictly increasing")));
            }
            let idx = pair_slot(marks, a, b);
            if radii[idx].is_some() {
                return Err(Error::InvalidInput(format!("pair ({a}, {b}) given twice")));
            }
            radii[idx] = Some(pb.radii.clone());
        }
        let radii: Vec<Vec<T>> = radii.into_iter().map(|r| r.unwrap_or_else(|| vec![T::zero()])).collect();

        let mut count_pos = vec![0; m];
        let mut band_pos = vec![0; n_pairs];
        let mut next = 0;
        for m1 in 1..=marks {
            count_pos[m1 as usize - 1] = next;
            next += 1;
            for m2 in m1..=marks {
                let s = pair_slot(marks, m1, m2);
                band_pos[s] = next;
                next += radii[s].len() - 1;
            }
        }
        Ok(Self { marks, radii, count_pos, band_pos, dim: next })
    }

    pub fn marks(&self) -> u32 {
        self.marks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radii(&self, a: u32, b: u32) -> &[T] {
        &self.radii[pair_slot(self.marks, a, b)]
    }

    /// Largest `D_p` over all pairs.
    pub fn max_range(&self) -> T {
        self.radii
            .iter()
            .map(|r| *r.last().expect("nonempty grid"))
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn count_component(&self, mark: u32) -> usize {
        self.count_pos[mark as usize - 1]
    }

    /// Hard-core distance of a pair, when `D_1 > 0`.
    pub fn hard_core(&self, a: u32, b: u32) -> Option<T> {
        let d1 = self.radii(a, b)[0];
        (d1 > T::zero()).then_some(d1)
    }

    pub fn is_count(&self, component: usize) -> bool {
        self.count_pos.contains(&component)
    }

    /// Pair and band number (`2..=p`) of an interaction component.
    pub fn band_info(&self, component: usize) -> Option<((u32, u32), usize)> {
        for m1 in 1..=self.marks {
            for m2 in m1..=self.marks {
                let s = pair_slot(self.marks, m1, m2);
                let start = self.band_pos[s];
                let nb = self.radii[s].len() - 1;
                if component >= start && component < start + nb {
                    return Some(((m1, m2), component - start + 2));
                }
            }
        }
        None
    }

    /// Locates the pair distance `r` of types `(a, b)`.
    pub fn classify(&self, a: u32, b: u32, r: T) -> BandHit {
        let s = pair_slot(self.marks, a, b);
        let grid = &self.radii[s];
        if r < grid[0] {
            return if grid[0] > T::zero() { BandHit::HardCore } else { BandHit::Outside };
        }
        // Smallest i >= 2 with r <= D_i.
        let j = grid[1..].partition_point(|&d| d < r);
        if j + 1 >= grid.len() {
            BandHit::Outside
        } else {
            BandHit::Band(self.band_pos[s] + j)
        }
    }

    pub fn component_names(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.dim];
        for m1 in 1..=self.marks {
            names[self.count_component(m1)] = format!("count[{m1}]");
            for m2 in m1..=self.marks {
                let s = pair_slot(self.marks, m1, m2);
                let g = &self.radii[s];
                for i in 1..g.len() {
                    names[self.band_pos[s] + i - 1] = format!("band[{m1},{m2}][{},{}]", g[i - 1], g[i]);
                }
            }
        }
        names
    }

    /// Range grids of all pairs, in layout order.
    pub fn pairs(&self) -> Vec<PairBands<T>> {
        let mut out = Vec::new();
        for m1 in 1..=self.marks {
            for m2 in m1..=self.marks {
                out.push(PairBands { types: (m1, m2), radii: self.radii(m1, m2).to_vec() });
            }
        }
        out
    }
}

/// Position of the unordered pair `{a, b}` in row-major upper-triangular order.
fn pair_slot(marks: u32, a: u32, b: u32) -> usize {
    let (m1, m2) = if a <= b { (a, b) } else { (b, a) };
    let (m, i, j) = (marks as usize, m1 as usize - 1, m2 as usize - 1);
    i * m - i * (i.saturating_sub(1)) / 2 + (j - i)
}
