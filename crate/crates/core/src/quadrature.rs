//! Midpoint-rule quadrature over `window x marks`, and tables of local
//! statistics at quadrature nodes and data points.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BucketGrid, Point, Window};
use crate::models::{LocalStats, ModelSpec};
use crate::patterns::{Mark, MarkSpace, MarkedPoint, PointPattern};
use crate::scalar::{chunked_sum, Scalar};

/// Default number of Gauss-Legendre nodes for continuous marks.
pub const DEFAULT_MARK_NODES: usize = 16;
/// Default spatial resolution per side.
pub const DEFAULT_GRID: usize = 256;

/// Tensor product of an `nx x ny` midpoint grid and a mark rule. Node `i`
/// has spatial index `i / n_marks` (row-major in x, then y) and mark index
/// `i % n_marks`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureScheme<T> {
    window: Window<T>,
    nx: usize,
    ny: usize,
    marks: Vec<Mark<T>>,
    mark_weights: Vec<T>,
}

pub fn build_quadrature<T: Scalar>(
    fit_window: &Window<T>,
    mark_space: &MarkSpace<T>,
    nx: usize,
    ny: usize,
    mark_nodes: usize,
) -> Result<QuadratureScheme<T>> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidInput(format!("quadrature grid {nx}x{ny} must be at least 2x2")));
    }
    if !(fit_window.area() > T::zero()) {
        return Err(Error::InvalidInput("degenerate quadrature window".into()));
    }
    let (marks, mark_weights) = match *mark_space {
        MarkSpace::Unit => (vec![Mark::Unit], vec![T::one()]),
        MarkSpace::Finite(m) => {
            if m == 0 {
                return Err(Error::InvalidInput("finite mark space needs M >= 1".into()));
            }
            let w = T::one() / T::from_usize_lossy(m as usize);
            ((1..=m).map(Mark::Label).collect(), vec![w; m as usize])
        }
        MarkSpace::Interval(max) => {
            if mark_nodes == 0 {
                return Err(Error::InvalidInput("continuous marks need at least one mark node".into()));
            }
            let (t, w) = gauss_legendre::<T>(mark_nodes);
            let half = T::lit(0.5);
            (
                t.iter().map(|&ti| Mark::Size((ti + T::one()) * half * max)).collect(),
                w.iter().map(|&wi| wi * half).collect(),
            )
        }
    };
    Ok(QuadratureScheme { window: *fit_window, nx, ny, marks, mark_weights })
}

impl<T: Scalar> QuadratureScheme<T> {
    pub fn window(&self) -> &Window<T> {
        &self.window
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn spatial_len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn mark_len(&self) -> usize {
        self.marks.len()
    }

    pub fn len(&self) -> usize {
        self.spatial_len() * self.mark_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spatial_weight(&self) -> T {
        self.window.area() / T::from_usize_lossy(self.nx * self.ny)
    }

    pub fn spatial_node(&self, s: usize) -> Point<T> {
        let (ix, iy) = (s / self.ny, s % self.ny);
        let half = T::lit(0.5);
        let hx = self.window.width() / T::from_usize_lossy(self.nx);
        let hy = self.window.height() / T::from_usize_lossy(self.ny);
        Point::new(
            self.window.xmin + (T::from_usize_lossy(ix) + half) * hx,
            self.window.ymin + (T::from_usize_lossy(iy) + half) * hy,
        )
    }

    pub fn marks(&self) -> &[Mark<T>] {
        &self.marks
    }

    pub fn mark_weights(&self) -> &[T] {
        &self.mark_weights
    }

    /// Marked location and total weight of node `i`.
    pub fn node(&self, i: usize) -> (MarkedPoint<T>, T) {
        let (s, m) = (i / self.marks.len(), i % self.marks.len());
        let p = self.spatial_node(s);
        (MarkedPoint::new(p.x, p.y, self.marks[m]), self.spatial_weight() * self.mark_weights[m])
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::from_usize_lossy(n);
    let two = T::lit(2.0);
    for i in 0..n.div_ceil(2) {
        let mut x = (T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::epsilon() {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = two / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)`.
fn legendre<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_usize_lossy(n);
    (p1, nf * (x * p1 - p0) / (x * x - T::one()))
}

/// Points of a pattern indexed for fixed-radius queries.
pub(crate) struct Neighbours<'a, T> {
    points: &'a [MarkedPoint<T>],
    grid: BucketGrid<T>,
    range: T,
}

impl<'a, T: Scalar> Neighbours<'a, T> {
    pub(crate) fn new(phi: &'a PointPattern<T>, range: T) -> Self {
        let grid = BucketGrid::from_points(phi.window(), range, phi.points().iter().map(MarkedPoint::location));
        Self { points: phi.points(), grid, range }
    }

    /// Points within the range of `x`, skipping index `skip`.
    pub(crate) fn collect(&self, x: &Point<T>, skip: Option<usize>, ids: &mut Vec<usize>, out: &mut Vec<MarkedPoint<T>>) {
        ids.clear();
        out.clear();
        self.grid.candidates(x, self.range, ids);
        ids.sort_unstable();
        let r2 = self.range * self.range;
        for &j in ids.iter() {
            if Some(j) != skip && self.points[j].location().dist2(x) <= r2 {
                out.push(self.points[j]);
            }
        }
    }
}

/// Local statistics at every quadrature node, computed once per pattern.
#[derive(Clone, Debug)]
pub struct NodeTable<T> {
    dim: usize,
    n_marks: usize,
    weights: Vec<T>,
    stats: Vec<T>,
    hard_core: Vec<bool>,
}

impl<T: Scalar> NodeTable<T> {
    pub fn build(model: &ModelSpec<T>, phi: &PointPattern<T>, quad: &QuadratureScheme<T>) -> Self {
        let nb = Neighbours::new(phi, model.range());
        let dim = model.dim();
        let per_site: Vec<Vec<LocalStats<T>>> = (0..quad.spatial_len())
            .into_par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |(ids, near), s| {
                    let p = quad.spatial_node(s);
                    nb.collect(&p, None, ids, near);
                    quad.marks()
                        .iter()
                        .map(|&m| model.local_from_neighbours(&MarkedPoint::new(p.x, p.y, m), near))
                        .collect()
                },
            )
            .collect();
        let n = quad.len();
        let mut stats = Vec::with_capacity(n * dim);
        let mut hard_core = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (i, l) in per_site.into_iter().flatten().enumerate() {
            stats.extend_from_slice(&l.values);
            hard_core.push(l.hard_core);
            weights.push(quad.node(i).1);
        }
        Self { dim, n_marks: quad.mark_len(), weights, stats, hard_core }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn stats(&self, i: usize) -> &[T] {
        &self.stats[i * self.dim..(i + 1) * self.dim]
    }

    pub fn hard_core(&self, i: usize) -> bool {
        self.hard_core[i]
    }

    pub fn spatial_index(&self, i: usize) -> usize {
        i / self.n_marks
    }

    /// Papangelou intensity `exp(-theta . v)` at node `i`; zero at hard-core
    /// nodes.
    pub fn intensity(&self, theta: &[T], i: usize) -> Result<T> {
        if self.hard_core[i] {
            return Ok(T::zero());
        }
        let e = (-crate::scalar::dot(theta, self.stats(i))).exp();
        if e.is_finite() {
            Ok(e)
        } else {
            Err(Error::Numeric { node: i, message: format!("conditional intensity overflow ({e})") })
        }
    }

    /// `sum_i w_i g(v_i) exp(-theta . v_i)` over all nodes.
    pub fn integrate<G>(&self, theta: &[T], out_dim: usize, g: G) -> Result<Vec<T>>
    where
        G: Fn(&[T], &mut [T]) + Sync,
    {
        chunked_sum(self.len(), out_dim, |i, acc| {
            let e = self.intensity(theta, i)?;
            if e == T::zero() {
                return Ok(());
            }
            let mut buf = vec![T::zero(); out_dim];
            g(self.stats(i), &mut buf);
            let we = self.weights[i] * e;
            for (a, b) in acc.iter_mut().zip(&buf) {
                let t = *b * we;
                if !t.is_finite() {
                    return Err(Error::Numeric { node: i, message: "non-finite integrand".into() });
                }
                *a += t;
            }
            Ok(())
        })
    }
}

/// `sum_nodes w g(x, v(x | phi)) exp(-theta . v(x | phi))`, computing local
/// statistics on the fly. Hard-core nodes contribute zero.
pub fn integrate_papangelou<T, G>(
    g: G,
    model: &ModelSpec<T>,
    theta: &[T],
    phi: &PointPattern<T>,
    quad: &QuadratureScheme<T>,
) -> Result<Vec<T>>
where
    T: Scalar,
    G: Fn(&MarkedPoint<T>, &LocalStats<T>) -> Vec<T> + Sync,
{
    model.validate_theta(theta)?;
    let nb = Neighbours::new(phi, model.range());
    let probe = g(&quad.node(0).0, &model.local_from_neighbours(&quad.node(0).0, &[]));
    let dim = probe.len();
    chunked_sum(quad.len(), dim, |i, acc| {
        let (x, w) = quad.node(i);
        let (mut ids, mut near) = (Vec::new(), Vec::new());
        nb.collect(&x.location(), None, &mut ids, &mut near);
        let l = model.local_from_neighbours(&x, &near);
        let e = l.energy(theta);
        if e == T::infinity() {
            return Ok(());
        }
        let f = (-e).exp();
        let gv = g(&x, &l);
        for (a, b) in acc.iter_mut().zip(gv) {
            let t = w * b * f;
            if !t.is_finite() {
                return Err(Error::Numeric { node: i, message: format!("non-finite integrand {t}") });
            }
            *a += t;
        }
        Ok(())
    })
}
