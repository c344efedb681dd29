//! Small dense symmetric eigenvalue routines for block-sized matrices.

use crate::scalar::{norm, Scalar};

/// Eigenvalues of a symmetric `n x n` row-major matrix, ascending, by cyclic Jacobi rotations.
///
/// Intended for the small diagonal blocks the solvers work with (a few dozen rows at most).
pub fn symmetric_eigenvalues<T: Scalar>(n: usize, matrix: &[T]) -> Vec<T> {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    if n == 0 {
        return Vec::new();
    }
    let mut a = matrix.to_vec();
    // symmetrize against tiny assembly asymmetries
    for r in 0..n {
        for c in (r + 1)..n {
            let avg = (a[r * n + c] + a[c * n + r]) * T::lit(0.5);
            a[r * n + c] = avg;
            a[c * n + r] = avg;
        }
    }
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for r in 0..n {
            diag += a[r * n + r] * a[r * n + r];
            for c in (r + 1)..n {
                off += a[r * n + c] * a[r * n + c];
            }
        }
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|k| a[k * n + k]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
///
/// `start` must be nonzero. Stops when successive estimates agree to `rel_tol` or after
/// `max_iter` products. Returns the last Rayleigh-type estimate `||Av||` with `||v|| = 1`.
pub fn power_iteration<T: Scalar>(
    mut apply: impl FnMut(&[T], &mut [T]),
    start: Vec<T>,
    rel_tol: T,
    max_iter: usize,
) -> T {
    let n = start.len();
    let mut v = start;
    let nv = norm(&v);
    if nv == T::zero() {
        return T::zero();
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![T::zero(); n];
    let mut estimate = T::zero();
    for _ in 0..max_iter {
        apply(&v, &mut w);
        let nw = norm(&w);
        if nw == T::zero() {
            return T::zero();
        }
        let converged = (nw - estimate).abs() <= rel_tol * nw;
        estimate = nw;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = *wi / nw;
        }
        if converged {
            break;
        }
    }
    estimate
}

/// Deterministic nonzero start vector with no special alignment to coordinate axes.
pub(crate) fn start_vector<T: Scalar>(n: usize) -> Vec<T> {
    (0..n)
        .map(|k| T::one() + T::lit(0.5) * T::lit(((k as f64) * 0.754_877_666).fract()))
        .collect()
}
