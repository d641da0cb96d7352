use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::Point;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn lex_cmp<T: Scalar>(a: &Point<T>, b: &Point<T>) -> Ordering {
    a.x.partial_cmp(&b.x)
        .unwrap_or(Ordering::Equal)
        .then(a.y.partial_cmp(&b.y).unwrap_or(Ordering::Equal))
}

fn check_distinct<T: Scalar>(points: &[Point<T>]) -> Result<()> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
    for w in order.windows(2) {
        if points[w[0]] == points[w[1]] {
            return Err(Error::InvalidInput(format!(
                "duplicate point ({}, {}) in k-NN graph input",
                points[w[0]].x, points[w[0]].y
            )));
        }
    }
    Ok(())
}

/// For every point, its `min(k, n-1)` nearest neighbours in increasing
/// distance. Distance ties are broken by lexicographic `(x, y)` order of the
/// candidate.
pub fn knn_lists<T: Scalar>(points: &[Point<T>], k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    check_distinct(points)?;
    Ok(knn_lists_unchecked(points, k))
}

/// As [`knn_lists`] without the distinctness check; coincident points are
/// ordered by index after the lexicographic tie-break.
pub(crate) fn knn_lists_unchecked<T: Scalar>(points: &[Point<T>], k: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let take = k.min(n.saturating_sub(1));
    let mut lists = Vec::with_capacity(n);
    let mut cand: Vec<(T, usize)> = Vec::with_capacity(n);
    for (a, pa) in points.iter().enumerate() {
        cand.clear();
        cand.extend(points.iter().enumerate().filter(|&(b, _)| b != a).map(|(b, pb)| (pa.dist2(pb), b)));
        let cmp = |u: &(T, usize), v: &(T, usize)| {
            u.0.partial_cmp(&v.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| lex_cmp(&points[u.1], &points[v.1]))
                .then(u.1.cmp(&v.1))
        };
        if take < cand.len() {
            cand.select_nth_unstable_by(take, cmp);
            cand.truncate(take);
        }
        cand.sort_by(cmp);
        lists.push(cand.iter().map(|&(_, b)| b).collect());
    }
    lists
}

/// Symmetrized k-nearest-neighbour graph: `{a, b}` is an edge when either
/// endpoint is among the `k` nearest of the other. Edges are returned as
/// `(a, b)` with `a < b`, sorted.
pub fn knn_graph<T: Scalar>(points: &[Point<T>], k: usize) -> Result<Vec<(usize, usize)>> {
    let lists = knn_lists(points, k)?;
    Ok(symmetrize(&lists))
}

pub(crate) fn symmetrize(lists: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for (a, list) in lists.iter().enumerate() {
        for &b in list {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    edges.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point<f64>> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn collinear_k1() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(knn_graph(&p, 1).unwrap(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn two_points_one_edge() {
        let p = pts(&[(0.0, 0.0), (3.0, 4.0)]);
        for k in 1..4 {
            assert_eq!(knn_graph(&p, k).unwrap(), vec![(0, 1)]);
        }
    }

    #[test]
    fn unit_square_sides_only() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(knn_graph(&p, 2).unwrap(), vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        // With k = 1 every corner has two tied sides; the lexicographically
        // smaller neighbour wins, so (1, 2) is dropped. No diagonal appears.
        assert_eq!(knn_graph(&p, 1).unwrap(), vec![(0, 1), (0, 3), (2, 3)]);
    }

    #[test]
    fn tie_break_is_lexicographic() {
        // Point 1 is equidistant from 0 and 2; the lexicographically smaller wins.
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let lists = knn_lists(&p, 1).unwrap();
        assert_eq!(lists[1], vec![0]);
    }

    #[test]
    fn duplicates_rejected() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)]);
        assert!(knn_graph(&p, 1).is_err());
        assert!(knn_graph(&pts(&[(0.0, 0.0)]), 0).is_err());
    }

    #[test]
    fn single_point_has_no_edges() {
        assert!(knn_graph(&pts(&[(0.0, 0.0)]), 2).unwrap().is_empty());
    }
}
