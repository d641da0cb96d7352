//! The floating-point abstraction the whole crate is written against.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar usable by every kernel in the crate (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + FromStr
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Every `f64` is representable (possibly
    /// rounded) in both supported scalar types, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Number of summands folded sequentially before the reduction tree takes
/// over. The tree shape depends only on the input length.
pub(crate) const SUM_CHUNK: usize = 1024;

/// Pairwise (tree) summation with a fixed, length-determined tree.
pub fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    if values.len() <= SUM_CHUNK {
        let mut acc = T::zero();
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Componentwise pairwise reduction of equally sized vectors.
pub(crate) fn pairwise_sum_vectors<T: Scalar>(parts: &[Vec<T>], dim: usize) -> Vec<T> {
    match parts.len() {
        0 => vec![T::zero(); dim],
        1 => parts[0].clone(),
        n => {
            let (a, b) = parts.split_at(n / 2);
            let mut left = pairwise_sum_vectors(a, dim);
            let right = pairwise_sum_vectors(b, dim);
            for (l, r) in left.iter_mut().zip(right) {
                *l += r;
            }
            left
        }
    }
}

/// Sums `f(i, acc)` over `i in 0..n` into a `dim`-vector. Indices are
/// split into fixed chunks of [`SUM_CHUNK`] evaluated in parallel, and the
/// chunk totals are combined by [`pairwise_sum_vectors`], so the result does
/// not depend on the thread count.
pub(crate) fn chunked_sum<T, F>(n: usize, dim: usize, f: F) -> crate::error::Result<Vec<T>>
where
    T: Scalar,
    F: Fn(usize, &mut [T]) -> crate::error::Result<()> + Sync,
{
    use rayon::prelude::*;
    let parts: crate::error::Result<Vec<Vec<T>>> = (0..n.div_ceil(SUM_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![T::zero(); dim];
            for i in c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(n) {
                f(i, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();
    Ok(pairwise_sum_vectors(&parts?, dim))
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}
