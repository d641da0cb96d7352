//! Small dense symmetric linear algebra on `DMatrix<T>` for any [`Scalar`]:
//! Cholesky factorization, SPD solves and inverses, Jacobi eigenvalues.

use nalgebra::DMatrix;

use crate::scalar::Scalar;

pub type Matrix<T> = DMatrix<T>;

pub fn zeros<T: Scalar>(n: usize) -> Matrix<T> {
    DMatrix::from_element(n, n, T::zero())
}

pub fn identity<T: Scalar>(n: usize) -> Matrix<T> {
    DMatrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
}

pub fn trace<T: Scalar>(a: &Matrix<T>) -> T {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

pub fn matmul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    assert_eq!(a.ncols(), b.nrows());
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| (0..a.ncols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
}

pub fn matvec<T: Scalar>(a: &Matrix<T>, x: &[T]) -> Vec<T> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|k| a[(i, k)] * x[k]).sum()).collect()
}

/// `(A + A^T) / 2`.
pub fn symmetrize<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let half = T::lit(0.5);
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| if i == j { a[(i, i)] } else { (a[(i, j)] + a[(j, i)]) * half })
}

/// Row-major copy.
pub fn to_rows<T: Scalar>(a: &Matrix<T>) -> Vec<Vec<T>> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect()
}

pub fn from_rows<T: Scalar>(rows: &[Vec<T>]) -> Matrix<T> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// Lower Cholesky factor of a symmetric positive definite matrix, or `None`
/// when a pivot is not strictly positive.
pub fn cholesky<T: Scalar>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let n = a.nrows();
    let mut l = zeros(n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Solves `L L^T x = b`.
pub fn cholesky_solve<T: Scalar>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = l.nrows();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let t = l[(i, k)] * y[k];
            y[i] -= t;
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let t = l[(k, i)] * y[k];
            y[i] -= t;
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Inverse of an SPD matrix, symmetric by construction.
pub fn spd_inverse<T: Scalar>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let l = cholesky(a)?;
    let n = a.nrows();
    let mut inv = zeros(n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        let col = cholesky_solve(&l, &e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Some(symmetrize(&inv))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    let n = a.nrows();
    let mut m = symmetrize(a);
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += m[(i, i)] * m[(i, i)];
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Ratio of largest to smallest absolute eigenvalue; `+inf` when singular.
pub fn condition_number<T: Scalar>(a: &Matrix<T>) -> T {
    let ev = symmetric_eigenvalues(a);
    if ev.is_empty() {
        return T::one();
    }
    let hi = ev.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let lo = ev.iter().fold(T::infinity(), |m, v| m.min(v.abs()));
    if lo == T::zero() {
        T::infinity()
    } else {
        hi / lo
    }
}
