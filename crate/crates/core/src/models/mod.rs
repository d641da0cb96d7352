//! Exponential-family energy models: sufficient statistics, local energies,
//! interaction ranges, parameter constraints and stability bounds.
//!
//! The energy of a configuration is `theta . v(phi)`; the local energy of a
//! point is `theta . v(x | phi)` with `v(x | phi) = v(phi + x) - v(phi)`.

mod bands;
mod stats;

pub use bands::{BandHit, BandLayout, PairBands};

use crate::error::{Error, Result};
use crate::patterns::{Mark, MarkSpace, MarkedPoint, PointPattern};
use crate::scalar::Scalar;

pub type ThetaVector<T> = Vec<T>;
pub type StatVector<T> = Vec<T>;

/// Local statistic `v(x | phi)` together with the hard-core indicator.
/// When `hard_core` is set the local energy is `+inf` whatever `theta` is.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalStats<T> {
    pub values: StatVector<T>,
    pub hard_core: bool,
}

impl<T: Scalar> LocalStats<T> {
    /// `theta . v`, or `+inf` under a hard-core violation.
    pub fn energy(&self, theta: &[T]) -> T {
        if self.hard_core {
            return T::infinity();
        }
        crate::scalar::dot(theta, &self.values)
    }
}

/// Sign requirement on one parameter component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    Free,
    NonNegative,
    Positive,
}

impl Constraint {
    pub fn admits<T: Scalar>(self, v: T) -> bool {
        v.is_finite()
            && match self {
                Constraint::Free => true,
                Constraint::NonNegative => v >= T::zero(),
                Constraint::Positive => v > T::zero(),
            }
    }

    fn describe(self) -> &'static str {
        match self {
            Constraint::Free => "finite",
            Constraint::NonNegative => ">= 0",
            Constraint::Positive => "> 0",
        }
    }
}

/// A parameter component that breaks its constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaViolation {
    pub component: usize,
    pub name: String,
    pub requirement: &'static str,
    pub value: f64,
}

impl std::fmt::Display for ThetaViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "theta[{}] ({}) = {} must be {}",
            self.component, self.name, self.value, self.requirement
        )
    }
}

/// Growth constants of one statistic: `|v_i(0 | phi)| <= kappa * n^exponent`
/// where `n` counts the points of `phi` within the interaction range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthBound<T> {
    pub kappa: T,
    pub exponent: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec<T> {
    /// Pairwise overlap of discs of radius `R/2`.
    OverlapArea { radius: T },
    /// Piecewise-constant pair potential, optionally with hard cores.
    MultiStrauss { layout: BandLayout<T> },
    /// Multi-Strauss potential restricted to edges of the k-NN graph.
    KnnMultiStrauss { layout: BandLayout<T>, k: usize },
    /// Pairs interact when their distance is at most the sum of their marks.
    StraussDisc { max_mark: T },
    /// Point count, `R`-close pairs and `R`-close triangles.
    GeyerTriplet { radius: T },
    /// Area of the union of discs of radius `R`.
    AreaInteraction { radius: T },
}

fn positive<T: Scalar>(name: &str, v: T) -> Result<T> {
    if v.is_finite() && v > T::zero() {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl<T: Scalar> ModelSpec<T> {
    pub fn overlap_area(radius: T) -> Result<Self> {
        Ok(Self::OverlapArea { radius: positive("radius", radius)? })
    }

    pub fn multi_strauss(marks: u32, pairs: &[PairBands<T>]) -> Result<Self> {
        Ok(Self::MultiStrauss { layout: BandLayout::new(marks, pairs)? })
    }

    /// Unmarked Strauss model with interaction radius `radius`.
    pub fn strauss(radius: T) -> Result<Self> {
        positive("radius", radius)?;
        Self::multi_strauss(1, &[PairBands { types: (1, 1), radii: vec![T::zero(), radius] }])
    }

    /// Homogeneous Poisson model: `v = (n)`.
    pub fn poisson() -> Self {
        Self::MultiStrauss { layout: BandLayout::new(1, &[]).expect("trivial layout") }
    }

    pub fn knn_multi_strauss(marks: u32, pairs: &[PairBands<T>], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        Ok(Self::KnnMultiStrauss { layout: BandLayout::new(marks, pairs)?, k })
    }

    pub fn strauss_disc(max_mark: T) -> Result<Self> {
        Ok(Self::StraussDisc { max_mark: positive("max_mark", max_mark)? })
    }

    pub fn geyer_triplet(radius: T) -> Result<Self> {
        Ok(Self::GeyerTriplet { radius: positive("radius", radius)? })
    }

    pub fn area_interaction(radius: T) -> Result<Self> {
        Ok(Self::AreaInteraction { radius: positive("radius", radius)? })
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::OverlapArea { .. } => "overlap_area",
            Self::MultiStrauss { .. } => "multi_strauss",
            Self::KnnMultiStrauss { .. } => "knn_multi_strauss",
            Self::StraussDisc { .. } => "strauss_disc",
            Self::GeyerTriplet { .. } => "geyer_triplet",
            Self::AreaInteraction { .. } => "area_interaction",
        }
    }

    /// Parameter dimension `p`.
    pub fn dim(&self) -> usize {
        match self {
            Self::OverlapArea { .. } | Self::StraussDisc { .. } | Self::AreaInteraction { .. } => 2,
            Self::GeyerTriplet { .. } => 3,
            Self::MultiStrauss { layout } | Self::KnnMultiStrauss { layout, .. } => layout.dim(),
        }
    }

    /// Interaction range `D`: `v(x | phi)` depends only on the points of
    /// `phi` within distance `D` of `x` (closed ball).
    ///
    /// For the k-NN family an edge of length at most `D_max` changes status
    /// only through points within `3 D_max`, so that is the range. For the
    /// Strauss-disc family marks are radii and pairs interact up to
    /// `2 M_max`.
    pub fn range(&self) -> T {
        let two = T::lit(2.0);
        match self {
            Self::OverlapArea { radius } | Self::GeyerTriplet { radius } => *radius,
            Self::AreaInteraction { radius } => two * *radius,
            Self::MultiStrauss { layout } => layout.max_range(),
            Self::KnnMultiStrauss { layout, .. } => T::lit(3.0) * layout.max_range(),
            Self::StraussDisc { max_mark } => two * *max_mark,
        }
    }

    pub fn mark_space(&self) -> MarkSpace<T> {
        match self {
            Self::MultiStrauss { layout } | Self::KnnMultiStrauss { layout, .. } if layout.marks() > 1 => {
                MarkSpace::Finite(layout.marks())
            }
            Self::StraussDisc { max_mark } => MarkSpace::Interval(*max_mark),
            _ => MarkSpace::Unit,
        }
    }

    /// Whether `mark` is admissible. Single-type multi-Strauss models accept
    /// both the unit mark and the label 1.
    pub fn accepts(&self, mark: &Mark<T>) -> bool {
        match (self, mark) {
            (Self::MultiStrauss { layout } | Self::KnnMultiStrauss { layout, .. }, Mark::Label(l)) => {
                *l >= 1 && *l <= layout.marks()
            }
            _ => self.mark_space().validate(mark).is_ok(),
        }
    }

    fn check_mark(&self, p: &MarkedPoint<T>) -> Result<()> {
        if self.accepts(&p.mark) {
            Ok(())
        } else {
            Err(Error::ModelMismatch(format!(
                "mark {:?} at ({}, {}) is not valid for the {} model",
                p.mark,
                p.x,
                p.y,
                self.family()
            )))
        }
    }

    /// Whether some pair distance carries infinite energy.
    pub fn has_hard_core(&self) -> bool {
        match self {
            Self::MultiStrauss { layout } => (1..=layout.marks())
                .any(|a| (a..=layout.marks()).any(|b| layout.hard_core(a, b).is_some())),
            _ => false,
        }
    }

    pub fn component_names(&self) -> Vec<String> {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        match self {
            Self::OverlapArea { .. } => s(&["count", "overlap"]),
            Self::StraussDisc { .. } => s(&["count", "pairs"]),
            Self::GeyerTriplet { .. } => s(&["count", "pairs", "triangles"]),
            Self::AreaInteraction { .. } => s(&["count", "area"]),
            Self::MultiStrauss { layout } | Self::KnnMultiStrauss { layout, .. } => layout.component_names(),
        }
    }

    /// Per-component sign constraints of the parameter space.
    pub fn constraints(&self) -> Vec<Constraint> {
        use Constraint::*;
        match self {
            Self::OverlapArea { .. } | Self::StraussDisc { .. } => vec![Free, NonNegative],
            Self::GeyerTriplet { .. } => vec![Free, Free, Positive],
            Self::AreaInteraction { .. } => vec![Free, Free],
            Self::KnnMultiStrauss { layout, .. } => vec![Free; layout.dim()],
            Self::MultiStrauss { layout } => {
                let interaction = if self.has_hard_core() { Free } else { NonNegative };
                (0..layout.dim())
                    .map(|c| if layout.is_count(c) { Free } else { interaction })
                    .collect()
            }
        }
    }

    fn check_dim(&self, theta: &[T]) -> Result<()> {
        if theta.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.dim(), got: theta.len() })
        }
    }

    /// Components of `theta` that break the family constraints.
    pub fn theta_violations(&self, theta: &[T]) -> Result<Vec<ThetaViolation>> {
        self.check_dim(theta)?;
        let names = self.component_names();
        Ok(self
            .constraints()
            .into_iter()
            .zip(theta)
            .enumerate()
            .filter(|(_, (c, v))| !c.admits(**v))
            .map(|(i, (c, v))| ThetaViolation {
                component: i,
                name: names[i].clone(),
                requirement: c.describe(),
                value: v.to_f64_lossy(),
            })
            .collect())
    }

    /// Ok when `theta` lies in the parameter space; otherwise an
    /// invalid-parameter error naming the first violated component.
    pub fn validate_theta(&self, theta: &[T]) -> Result<()> {
        match self.theta_violations(theta)?.first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidParameter(v.to_string())),
        }
    }

    /// Constant `K >= 0` with `theta . v(x | phi) >= -K` for every admissible
    /// configuration and mark.
    pub fn stability_bound(&self, theta: &[T]) -> Result<T> {
        self.validate_theta(theta)?;
        let zero = T::zero();
        let min_energy = match self {
            Self::OverlapArea { .. } | Self::StraussDisc { .. } => theta[0],
            Self::AreaInteraction { radius } => {
                let full = T::PI() * *radius * *radius;
                theta[0] + (theta[1] * full).min(zero)
            }
            Self::GeyerTriplet { .. } => geyer_min_energy(theta),
            Self::KnnMultiStrauss { layout, k } => {
                let bound = T::from_usize_lossy(13 * k);
                let spread: T = (0..layout.dim())
                    .filter(|c| !layout.is_count(*c))
                    .map(|c| theta[c].abs() * bound)
                    .sum();
                (1..=layout.marks())
                    .map(|m| theta[layout.count_component(m)])
                    .fold(T::infinity(), T::min)
                    - spread
            }
            Self::MultiStrauss { layout } => multi_strauss_min_energy(layout, theta)?,
        };
        Ok((-min_energy).max(zero))
    }

    /// Growth constants per component, used to check integrability.
    pub fn growth_bounds(&self) -> Vec<GrowthBound<T>> {
        let one = GrowthBound { kappa: T::one(), exponent: 0 };
        let linear = GrowthBound { kappa: T::one(), exponent: 1 };
        match self {
            Self::OverlapArea { radius } => {
                vec![one, GrowthBound { kappa: T::PI() * *radius * *radius / T::lit(4.0), exponent: 1 }]
            }
            Self::StraussDisc { .. } => vec![one, linear],
            Self::GeyerTriplet { .. } => vec![one, linear, GrowthBound { kappa: T::one(), exponent: 2 }],
            Self::AreaInteraction { radius } => {
                let d = T::lit(2.0) * *radius;
                vec![one, GrowthBound { kappa: T::PI() * d * d, exponent: 0 }]
            }
            Self::MultiStrauss { layout } => {
                (0..layout.dim()).map(|c| if layout.is_count(c) { one } else { linear }).collect()
            }
            Self::KnnMultiStrauss { layout, k } => {
                let knn = GrowthBound { kappa: T::from_usize_lossy(13 * k), exponent: 0 };
                (0..layout.dim()).map(|c| if layout.is_count(c) { one } else { knn }).collect()
            }
        }
    }

    /// `v(phi)` for a pattern whose marks suit the model.
    pub fn global_statistics(&self, phi: &PointPattern<T>) -> Result<StatVector<T>> {
        for p in phi.points() {
            self.check_mark(p)?;
        }
        Ok(self.global_from_points(phi.points()))
    }

    /// `v(phi)` for raw points; marks are assumed valid.
    pub fn global_from_points(&self, points: &[MarkedPoint<T>]) -> StatVector<T> {
        stats::global(self, points)
    }

    /// `v(x | phi)` for `x` not in `phi`.
    pub fn local_statistics(&self, x: &MarkedPoint<T>, phi: &PointPattern<T>) -> Result<LocalStats<T>> {
        self.check_mark(x)?;
        for p in phi.points() {
            self.check_mark(p)?;
            if p.x == x.x && p.y == x.y {
                return Err(Error::InvalidInput(format!("point ({}, {}) is already in the pattern", x.x, x.y)));
            }
        }
        Ok(self.local_from_neighbours(x, phi.points()))
    }

    /// `v(x | nbrs)` where `nbrs` holds at least every point of `phi`
    /// within [`range`](Self::range) of `x`; farther points are ignored.
    pub fn local_from_neighbours(&self, x: &MarkedPoint<T>, nbrs: &[MarkedPoint<T>]) -> LocalStats<T> {
        stats::local(self, x, nbrs)
    }

    /// `theta . v(x | phi)`, `+inf` on hard-core violation.
    pub fn local_energy(&self, theta: &[T], x: &MarkedPoint<T>, phi: &PointPattern<T>) -> Result<T> {
        self.validate_theta(theta)?;
        Ok(self.local_statistics(x, phi)?.energy(theta))
    }
}

/// `min_n theta_2 n + theta_3 f(n)` over neighbour counts, where `f(n)` is a
/// lower bound on the number of `R`-close pairs among `n` points of
/// `B(0, R)`: splitting the disc into six 60 degree sectors, two points in
/// the same sector are within `R` of each other, so at least
/// `sum_j C(n_j, 2)` pairs are close for the most balanced split `n_j`.
fn geyer_min_energy<T: Scalar>(theta: &[T]) -> T {
    let (t1, t2, t3) = (theta[0], theta[1], theta[2]);
    if t2 >= T::zero() {
        return t1;
    }
    // Increment from n to n+1 is t2 + t3 * floor(n / 6), nondecreasing.
    let mut best = T::zero();
    let mut acc = T::zero();
    let mut n = 0usize;
    loop {
        let inc = t2 + t3 * T::from_usize_lossy(n / 6);
        if inc >= T::zero() {
            break;
        }
        acc += inc;
        best = best.min(acc);
        n += 1;
    }
    t1 + best
}

fn multi_strauss_min_energy<T: Scalar>(layout: &BandLayout<T>, theta: &[T]) -> Result<T> {
    let mut worst = T::infinity();
    for m in 1..=layout.marks() {
        let mut e = theta[layout.count_component(m)];
        for m2 in 1..=layout.marks() {
            let grid = layout.radii(m, m2);
            let neg = (2..=grid.len())
                .filter_map(|i| match layout.classify(m, m2, grid[i - 1]) {
                    BandHit::Band(c) => Some(theta[c]),
                    _ => None,
                })
                .fold(T::zero(), T::min);
            if neg < T::zero() {
                let Some(delta) = layout.hard_core(m2, m2) else {
                    return Err(Error::InvalidParameter(format!(
                        "negative interaction between types {m} and {m2} without a hard core between type {m2} points is unstable"
                    )));
                };
                // Points pairwise at least delta apart in B(x, D): disjoint
                // discs of radius delta/2 inside B(x, D + delta/2).
                let d = *grid.last().expect("nonempty grid");
                let cap = (T::lit(2.0) * d / delta + T::one()).powi(2).floor();
                e += neg * cap;
            }
        }
        worst = worst.min(e);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
