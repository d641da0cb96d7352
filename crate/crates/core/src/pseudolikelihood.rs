//! Log-pseudolikelihood contrast, its derivatives and per-cell gradient
//! blocks.
//!
//! With `V(x | phi) = theta . v(x | phi)`:
//!
//! * `lpl = -int e^{-V} - sum_{x in phi_fit} V(x | phi - x)`
//! * `grad_j = int v_j e^{-V} - sum v_j(x | phi - x)`
//! * `hess_jk = int v_j v_k e^{-V}`, the Hessian of `-lpl` (positive
//!   semidefinite).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{cell_partition, CellGrid, CellIndex, Point, Window};
use crate::linalg::{zeros, Matrix};
use crate::models::ModelSpec;
use crate::patterns::{MarkedPoint, PointPattern};
use crate::quadrature::{Neighbours, NodeTable, QuadratureScheme};
use crate::scalar::{chunked_sum, dot, pairwise_sum_vectors, Scalar};

/// Contrast value and derivatives at one parameter.
#[derive(Clone, Debug)]
pub struct Evaluation<T> {
    pub lpl: T,
    pub gradient: Vec<T>,
    pub hessian: Matrix<T>,
}

/// Full evaluation including the per-cell gradient decomposition.
#[derive(Clone, Debug)]
pub struct LplReport<T> {
    pub lpl: T,
    pub gradient: Vec<T>,
    pub hessian: Matrix<T>,
    pub per_cell_gradients: Vec<(CellIndex, Vec<T>)>,
    pub fit_window: Window<T>,
    pub cell_size: T,
}

/// Checks `fit_window (+) range` lies inside `observed`, up to rounding.
pub fn check_containment<T: Scalar>(fit_window: &Window<T>, range: T, observed: &Window<T>) -> Result<()> {
    let need = fit_window.dilate(range);
    let scale = observed.width().max(observed.height()).max(T::one());
    let tol = T::lit(1e-9) * scale;
    let ok = need.xmin >= observed.xmin - tol
        && need.xmax <= observed.xmax + tol
        && need.ymin >= observed.ymin - tol
        && need.ymax <= observed.ymax + tol;
    if ok {
        Ok(())
    } else {
        Err(Error::Configuration(format!(
            "fit window [{}, {}] x [{}, {}] dilated by the interaction range {} is not inside the observation window [{}, {}] x [{}, {}]",
            fit_window.xmin, fit_window.xmax, fit_window.ymin, fit_window.ymax, range,
            observed.xmin, observed.xmax, observed.ymin, observed.ymax
        )))
    }
}

/// Precomputed pseudolikelihood contrast for one pattern and quadrature.
#[derive(Clone, Debug)]
pub struct Contrast<T> {
    dim: usize,
    fit_window: Window<T>,
    nodes: NodeTable<T>,
    node_sites: Vec<Point<T>>,
    n_marks: usize,
    data_sites: Vec<Point<T>>,
    data_stats: Vec<T>,
    data_sum: Vec<T>,
}

impl<T: Scalar> Contrast<T> {
    /// Tabulates local statistics at all quadrature nodes and at the data
    /// points inside `fit_window` (each against the rest of the pattern).
    pub fn new(model: &ModelSpec<T>, pattern: &PointPattern<T>, fit_window: &Window<T>, quad: &QuadratureScheme<T>) -> Result<Self> {
        if quad.window() != fit_window {
            return Err(Error::Configuration("quadrature scheme was built for a different window".into()));
        }
        for p in pattern.points() {
            if !model.accepts(&p.mark) {
                return Err(Error::ModelMismatch(format!(
                    "mark {:?} at ({}, {}) is not valid for the {} model",
                    p.mark, p.x, p.y, model.family()
                )));
            }
        }
        check_containment(fit_window, model.range(), pattern.window())?;
        let dim = model.dim();
        let nb = Neighbours::new(pattern, model.range());
        let inside: Vec<usize> = (0..pattern.len())
            .filter(|&i| fit_window.contains(&pattern.points()[i].location()))
            .collect();
        let locals: Vec<_> = inside
            .par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |(ids, near), &i| {
                    let x = pattern.points()[i];
                    nb.collect(&x.location(), Some(i), ids, near);
                    (x, model.local_from_neighbours(&x, near))
                },
            )
            .collect();
        let mut data_sites = Vec::with_capacity(locals.len());
        let mut data_stats = Vec::with_capacity(locals.len() * dim);
        for (x, l) in &locals {
            if l.hard_core {
                return Err(Error::InfeasibleData(format!(
                    "point ({}, {}) violates the hard core of the model",
                    x.x, x.y
                )));
            }
            data_sites.push(x.location());
            data_stats.extend_from_slice(&l.values);
        }
        let parts: Vec<Vec<T>> = data_stats.chunks(dim.max(1)).map(<[T]>::to_vec).collect();
        let data_sum = pairwise_sum_vectors(&parts, dim);
        let nodes = NodeTable::build(model, pattern, quad);
        let node_sites = (0..quad.spatial_len()).map(|s| quad.spatial_node(s)).collect();
        Ok(Self {
            dim,
            fit_window: *fit_window,
            nodes,
            node_sites,
            n_marks: quad.mark_len(),
            data_sites,
            data_stats,
            data_sum,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fit_window(&self) -> &Window<T> {
        &self.fit_window
    }

    pub fn nodes(&self) -> &NodeTable<T> {
        &self.nodes
    }

    /// Number of data points in the fit window.
    pub fn data_len(&self) -> usize {
        self.data_sites.len()
    }

    /// Sum of `v(x | phi - x)` over data points in the fit window.
    pub fn data_sum(&self) -> &[T] {
        &self.data_sum
    }

    pub fn data_stats(&self, i: usize) -> &[T] {
        &self.data_stats[i * self.dim..(i + 1) * self.dim]
    }

    fn check(&self, theta: &[T]) -> Result<()> {
        if theta.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: theta.len() });
        }
        Ok(())
    }

    /// `int e^{-V}` over the quadrature.
    pub fn integral(&self, theta: &[T]) -> Result<T> {
        self.check(theta)?;
        let v = chunked_sum(self.nodes.len(), 1, |i, acc| {
            acc[0] += self.nodes.weight(i) * self.nodes.intensity(theta, i)?;
            Ok(())
        })?;
        Ok(v[0])
    }

    pub fn lpl(&self, theta: &[T]) -> Result<T> {
        Ok(-self.integral(theta)? - dot(theta, &self.data_sum))
    }

    /// `lpl(theta + step) - lpl(theta)`, accurate even when the change is far
    /// below the rounding level of `lpl` itself.
    pub fn lpl_change(&self, theta: &[T], step: &[T]) -> Result<T> {
        self.check(theta)?;
        self.check(step)?;
        let v = chunked_sum(self.nodes.len(), 1, |i, acc: &mut [T]| {
            let e = self.nodes.intensity(theta, i)?;
            if e == T::zero() {
                return Ok(());
            }
            let d = e * (-dot(step, self.nodes.stats(i))).exp_m1();
            if !d.is_finite() {
                return Err(Error::Numeric { node: i, message: "intensity overflow".into() });
            }
            acc[0] += self.nodes.weight(i) * d;
            Ok(())
        })?;
        Ok(-v[0] - dot(step, &self.data_sum))
    }

    pub fn gradient(&self, theta: &[T]) -> Result<Vec<T>> {
        self.check(theta)?;
        let p = self.dim;
        let mut g = chunked_sum(self.nodes.len(), p, |i, acc| {
            let we = self.nodes.weight(i) * self.nodes.intensity(theta, i)?;
            for (a, &v) in acc.iter_mut().zip(self.nodes.stats(i)) {
                *a += we * v;
            }
            Ok(())
        })?;
        for (gj, dj) in g.iter_mut().zip(&self.data_sum) {
            *gj -= *dj;
        }
        Ok(g)
    }

    pub fn hessian(&self, theta: &[T]) -> Result<Matrix<T>> {
        Ok(self.evaluate(theta)?.hessian)
    }

    /// Value, gradient and Hessian in one pass over the nodes.
    pub fn evaluate(&self, theta: &[T]) -> Result<Evaluation<T>> {
        self.check(theta)?;
        let p = self.dim;
        let tri = p * (p + 1) / 2;
        let acc = chunked_sum(self.nodes.len(), 1 + p + tri, |i, acc: &mut [T]| {
            let we = self.nodes.weight(i) * self.nodes.intensity(theta, i)?;
            if we == T::zero() {
                return Ok(());
            }
            let v = self.nodes.stats(i);
            acc[0] += we;
            let mut k = 1 + p;
            for a in 0..p {
                let wa = we * v[a];
                acc[1 + a] += wa;
                for &vb in &v[a..] {
                    acc[k] += wa * vb;
                    k += 1;
                }
            }
            Ok(())
        })?;
        let lpl = -acc[0] - dot(theta, &self.data_sum);
        let gradient: Vec<T> = (0..p).map(|a| acc[1 + a] - self.data_sum[a]).collect();
        let mut hessian = zeros(p);
        let mut k = 1 + p;
        for a in 0..p {
            for b in a..p {
                hessian[(a, b)] = acc[k];
                hessian[(b, a)] = acc[k];
                k += 1;
            }
        }
        Ok(Evaluation { lpl, gradient, hessian })
    }

    /// Gradient blocks `int_{cell} v e^{-V} - sum_{x in cell} v(x | phi - x)`
    /// for every cell of size `cell_size` tiling the fit window, in
    /// lexicographic cell order.
    pub fn cell_gradients(&self, theta: &[T], cell_size: T) -> Result<Vec<(CellIndex, Vec<T>)>> {
        self.check(theta)?;
        let grid = cell_partition(&self.fit_window, cell_size)?;
        let p = self.dim;
        let (node_groups, data_groups) = self.group_by_cell(&grid)?;
        let blocks: Result<Vec<Vec<T>>> = node_groups
            .par_iter()
            .zip(data_groups.par_iter())
            .map(|(sites, data)| {
                let mut parts = Vec::with_capacity(sites.len() * self.n_marks);
                for &s in sites {
                    for m in 0..self.n_marks {
                        let i = s * self.n_marks + m;
                        let we = self.nodes.weight(i) * self.nodes.intensity(theta, i)?;
                        parts.push(self.nodes.stats(i).iter().map(|&v| we * v).collect::<Vec<T>>());
                    }
                }
                let mut g = pairwise_sum_vectors(&parts, p);
                for &d in data {
                    for (gj, &v) in g.iter_mut().zip(self.data_stats(d)) {
                        *gj -= v;
                    }
                }
                Ok(g)
            })
            .collect();
        Ok(grid.cells().into_iter().zip(blocks?).collect())
    }

    fn group_by_cell(&self, grid: &CellGrid<T>) -> Result<(Vec<Vec<usize>>, Vec<Vec<usize>>)> {
        let mut nodes = vec![Vec::new(); grid.len()];
        for (s, p) in self.node_sites.iter().enumerate() {
            nodes[self.cell_position(grid, p)?].push(s);
        }
        let mut data = vec![Vec::new(); grid.len()];
        for (d, p) in self.data_sites.iter().enumerate() {
            data[self.cell_position(grid, p)?].push(d);
        }
        Ok((nodes, data))
    }

    fn cell_position(&self, grid: &CellGrid<T>, p: &Point<T>) -> Result<usize> {
        let c = grid.locate(p)?;
        grid.position(&c)
            .ok_or_else(|| Error::InvalidInput(format!("point ({}, {}) outside the cell grid", p.x, p.y)))
    }

    pub fn report(&self, theta: &[T], cell_size: T) -> Result<LplReport<T>> {
        let e = self.evaluate(theta)?;
        Ok(LplReport {
            lpl: e.lpl,
            gradient: e.gradient,
            hessian: e.hessian,
            per_cell_gradients: self.cell_gradients(theta, cell_size)?,
            fit_window: self.fit_window,
            cell_size,
        })
    }
}

fn build<T: Scalar>(
    model: &ModelSpec<T>,
    theta: &[T],
    pattern: &PointPattern<T>,
    fit_window: &Window<T>,
    quad: &QuadratureScheme<T>,
) -> Result<Contrast<T>> {
    model.validate_theta(theta)?;
    Contrast::new(model, pattern, fit_window, quad)
}

/// Log-pseudolikelihood at `theta`.
pub fn lpl<T: Scalar>(model: &ModelSpec<T>, theta: &[T], pattern: &PointPattern<T>, fit_window: &Window<T>, quad: &QuadratureScheme<T>) -> Result<T> {
    build(model, theta, pattern, fit_window, quad)?.lpl(theta)
}

/// Gradient of the log-pseudolikelihood.
pub fn lpl_gradient<T: Scalar>(model: &ModelSpec<T>, theta: &[T], pattern: &PointPattern<T>, fit_window: &Window<T>, quad: &QuadratureScheme<T>) -> Result<Vec<T>> {
    build(model, theta, pattern, fit_window, quad)?.gradient(theta)
}

/// `int v v^T e^{-V}`: the Hessian of minus the log-pseudolikelihood.
pub fn lpl_hessian<T: Scalar>(model: &ModelSpec<T>, theta: &[T], pattern: &PointPattern<T>, fit_window: &Window<T>, quad: &QuadratureScheme<T>) -> Result<Matrix<T>> {
    build(model, theta, pattern, fit_window, quad)?.hessian(theta)
}

/// Per-cell gradient blocks; they sum to [`lpl_gradient`].
pub fn cell_gradients<T: Scalar>(
    model: &ModelSpec<T>,
    theta: &[T],
    pattern: &PointPattern<T>,
    fit_window: &Window<T>,
    cell_size: T,
    quad: &QuadratureScheme<T>,
) -> Result<Vec<(CellIndex, Vec<T>)>> {
    build(model, theta, pattern, fit_window, quad)?.cell_gradients(theta, cell_size)
}

/// Data-point statistics `v(x | phi - x)` for points in the fit window,
/// together with the points themselves.
pub fn data_statistics<T: Scalar>(model: &ModelSpec<T>, pattern: &PointPattern<T>, fit_window: &Window<T>) -> Vec<(MarkedPoint<T>, Vec<T>)> {
    let nb = Neighbours::new(pattern, model.range());
    let (mut ids, mut near) = (Vec::new(), Vec::new());
    pattern
        .points()
        .iter()
        .enumerate()
        .filter(|(_, p)| fit_window.contains(&p.location()))
        .map(|(i, x)| {
            nb.collect(&x.location(), Some(i), &mut ids, &mut near);
            (*x, model.local_from_neighbours(x, &near).values)
        })
        .collect()
}
