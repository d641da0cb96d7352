use super::{BandHit, BandLayout, LocalStats, ModelSpec, StatVector};
use crate::geometry::knn::{knn_lists_unchecked, symmetrize};
use crate::geometry::{added_disc_area, disc_overlap_area, union_disc_area, Point};
use crate::patterns::MarkedPoint;
use crate::scalar::Scalar;

fn label<T: Scalar>(p: &MarkedPoint<T>) -> u32 {
    p.label().unwrap_or(1)
}

pub(super) fn global<T: Scalar>(model: &ModelSpec<T>, pts: &[MarkedPoint<T>]) -> StatVector<T> {
    let n = T::from_usize_lossy(pts.len());
    match model {
        ModelSpec::OverlapArea { radius } => {
            let r2 = *radius * *radius;
            let mut s = T::zero();
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    let d2 = a.dist2(b);
                    if d2 < r2 {
                        s += disc_overlap_area(d2.sqrt(), *radius);
                    }
                }
            }
            vec![n, s]
        }
        ModelSpec::StraussDisc { .. } => {
            let mut pairs = 0usize;
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    pairs += usize::from(disc_pair(a, b));
                }
            }
            vec![n, T::from_usize_lossy(pairs)]
        }
        ModelSpec::GeyerTriplet { radius } => {
            let r2 = *radius * *radius;
            let adj: Vec<Vec<usize>> = (0..pts.len())
                .map(|i| (i + 1..pts.len()).filter(|&j| pts[i].dist2(&pts[j]) <= r2).collect())
                .collect();
            let pairs: usize = adj.iter().map(Vec::len).sum();
            let mut triangles = 0usize;
            for list in &adj {
                for (a, &j) in list.iter().enumerate() {
                    for &k in &list[a + 1..] {
                        triangles += usize::from(pts[j].dist2(&pts[k]) <= r2);
                    }
                }
            }
            vec![n, T::from_usize_lossy(pairs), T::from_usize_lossy(triangles)]
        }
        ModelSpec::AreaInteraction { radius } => {
            let centers: Vec<Point<T>> = pts.iter().map(MarkedPoint::location).collect();
            vec![n, union_disc_area(&centers, *radius)]
        }
        ModelSpec::MultiStrauss { layout } => {
            let mut v = counts(layout, pts);
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    add_band(layout, &mut v, a, b, T::one());
                }
            }
            v
        }
        ModelSpec::KnnMultiStrauss { layout, k } => {
            let mut v = counts(layout, pts);
            let locs: Vec<Point<T>> = pts.iter().map(MarkedPoint::location).collect();
            for (a, b) in symmetrize(&knn_lists_unchecked(&locs, *k)) {
                add_band(layout, &mut v, &pts[a], &pts[b], T::one());
            }
            v
        }
    }
}

pub(super) fn local<T: Scalar>(model: &ModelSpec<T>, x: &MarkedPoint<T>, nbrs: &[MarkedPoint<T>]) -> LocalStats<T> {
    let plain = |values| LocalStats { values, hard_core: false };
    match model {
        ModelSpec::OverlapArea { radius } => {
            let r2 = *radius * *radius;
            let mut s = T::zero();
            for b in nbrs {
                let d2 = x.dist2(b);
                if d2 < r2 {
                    s += disc_overlap_area(d2.sqrt(), *radius);
                }
            }
            plain(vec![T::one(), s])
        }
        ModelSpec::StraussDisc { .. } => {
            let pairs = nbrs.iter().filter(|b| disc_pair(x, b)).count();
            plain(vec![T::one(), T::from_usize_lossy(pairs)])
        }
        ModelSpec::GeyerTriplet { radius } => {
            let r2 = *radius * *radius;
            let close: Vec<&MarkedPoint<T>> = nbrs.iter().filter(|b| x.dist2(b) <= r2).collect();
            let mut triangles = 0usize;
            for (a, p) in close.iter().enumerate() {
                triangles += close[a + 1..].iter().filter(|q| p.dist2(q) <= r2).count();
            }
            plain(vec![T::one(), T::from_usize_lossy(close.len()), T::from_usize_lossy(triangles)])
        }
        ModelSpec::AreaInteraction { radius } => {
            let centers: Vec<Point<T>> = nbrs.iter().map(MarkedPoint::location).collect();
            plain(vec![T::one(), added_disc_area(&x.location(), *radius, &centers)])
        }
        ModelSpec::MultiStrauss { layout } => {
            let mut v = vec![T::zero(); layout.dim()];
            v[layout.count_component(label(x))] = T::one();
            let mut hard_core = false;
            for b in nbrs {
                hard_core |= add_band(layout, &mut v, x, b, T::one());
            }
            LocalStats { values: v, hard_core }
        }
        ModelSpec::KnnMultiStrauss { layout, k } => plain(knn_local(layout, *k, model.range(), x, nbrs)),
    }
}

fn disc_pair<T: Scalar>(a: &MarkedPoint<T>, b: &MarkedPoint<T>) -> bool {
    let s = a.size() + b.size();
    a.dist2(b) <= s * s
}

fn counts<T: Scalar>(layout: &BandLayout<T>, pts: &[MarkedPoint<T>]) -> StatVector<T> {
    let mut v = vec![T::zero(); layout.dim()];
    for p in pts {
        v[layout.count_component(label(p))] += T::one();
    }
    v
}

/// Adds `w` to the band of the pair `(a, b)`; returns true on a hard-core hit.
fn add_band<T: Scalar>(layout: &BandLayout<T>, v: &mut [T], a: &MarkedPoint<T>, b: &MarkedPoint<T>, w: T) -> bool {
    match layout.classify(label(a), label(b), a.dist2(b).sqrt()) {
        BandHit::Band(c) => {
            v[c] += w;
            false
        }
        BandHit::HardCore => true,
        BandHit::Outside => false,
    }
}

/// Difference of the k-NN band statistics of `psi + x` and `psi`, where
/// `psi` holds the neighbours within `range` of `x`.
fn knn_local<T: Scalar>(layout: &BandLayout<T>, k: usize, range: T, x: &MarkedPoint<T>, nbrs: &[MarkedPoint<T>]) -> StatVector<T> {
    let r2 = range * range;
    let mut psi: Vec<MarkedPoint<T>> = nbrs.iter().filter(|b| x.dist2(b) <= r2).copied().collect();
    let mut v = vec![T::zero(); layout.dim()];
    v[layout.count_component(label(x))] = T::one();

    let mut locs: Vec<Point<T>> = psi.iter().map(MarkedPoint::location).collect();
    let before = symmetrize(&knn_lists_unchecked(&locs, k));
    locs.push(x.location());
    psi.push(*x);
    let after = symmetrize(&knn_lists_unchecked(&locs, k));

    // Both edge lists are sorted; edges present in only one of them change.
    let (mut i, mut j) = (0, 0);
    while i < before.len() || j < after.len() {
        let cmp = match (before.get(i), after.get(j)) {
            (Some(b), Some(a)) => b.cmp(a),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match cmp {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                let (a, b) = before[i];
                add_band(layout, &mut v, &psi[a], &psi[b], -T::one());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                let (a, b) = after[j];
                add_band(layout, &mut v, &psi[a], &psi[b], T::one());
                j += 1;
            }
        }
    }
    v
}
