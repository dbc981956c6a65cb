//! Small dense linear algebra on row-major `Vec<T>` matrices.
//!
//! Sizes here never exceed a handful of rows, so plain loops are used.

use crate::scalar::Real;

/// Number of packed upper-triangle entries of a `d x d` symmetric matrix.
pub fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Recover `d` from a packed length, if it is triangular.
pub fn dim_from_packed(len: usize) -> Option<usize> {
    let mut d = 0;
    while packed_len(d) < len {
        d += 1;
    }
    (packed_len(d) == len).then_some(d)
}

/// Index of `(i, j)` with `i <= j` in the packed upper triangle (row-wise).
pub fn packed_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * d - i * (i + 1) / 2 + j
}

pub fn unpack_sym<T: Real>(packed: &[T], d: usize) -> Vec<T> {
    let mut m = vec![T::zero(); d * d];
    for i in 0..d {
        for j in i..d {
            let v = packed[packed_index(d, i, j)];
            m[i * d + j] = v;
            m[j * d + i] = v;
        }
    }
    m
}

pub fn pack_sym<T: Real>(m: &[T], d: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(packed_len(d));
    for i in 0..d {
        for j in i..d {
            out.push((m[i * d + j] + m[j * d + i]) / (T::one() + T::one()));
        }
    }
    out
}

/// Lower Cholesky factor, or `None` when the matrix is not positive definite.
pub fn cholesky<T: Real>(m: &[T], d: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = m[i * d + j];
            for k in 0..j {
                s = s - l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// `log det` of an SPD matrix through its Cholesky factor.
pub fn log_det_spd<T: Real>(m: &[T], d: usize) -> Option<T> {
    let l = cholesky(m, d)?;
    let two = T::one() + T::one();
    Some((0..d).map(|i| two * l[i * d + i].ln()).sum())
}

/// Inverse of an SPD matrix.
pub fn inverse_spd<T: Real>(m: &[T], d: usize) -> Option<Vec<T>> {
    let l = cholesky(m, d)?;
    let mut inv = vec![T::zero(); d * d];
    for col in 0..d {
        // forward: L y = e_col
        let mut y = vec![T::zero(); d];
        for i in 0..d {
            let mut s = if i == col { T::one() } else { T::zero() };
            for k in 0..i {
                s = s - l[i * d + k] * y[k];
            }
            y[i] = s / l[i * d + i];
        }
        // backward: L^T x = y
        for i in (0..d).rev() {
            let mut s = y[i];
            for k in i + 1..d {
                s = s - l[k * d + i] * inv[k * d + col];
            }
            inv[i * d + col] = s / l[i * d + i];
        }
    }
    Some(inv)
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve<T: Real>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| {
            a[r * n + col]
                .abs()
                .partial_cmp(&a[s * n + col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(a[pivot * n + col].abs() > T::zero()) {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            for k in col..n {
                a[r * n + k] = a[r * n + k] - f * a[col * n + k];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s = s - a[i * n + k] * x[k];
        }
        x[i] = s / a[i * n + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues<T: Real>(m: &[T], d: usize) -> Vec<T> {
    let mut a = m.to_vec();
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let off: T = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * d + j] * a[i * d + j])
            .sum();
        let diag: T = (0..d).map(|i| a[i * d + i] * a[i * d + i]).sum();
        if off <= eps * eps * diag.max(T::min_positive_value()) {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == T::zero() {
                    continue;
                }
                let two = T::one() + T::one();
                let theta = (a[q * d + q] - a[p * d + p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = cs * akp - sn * akq;
                    a[k * d + q] = sn * akp + cs * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = cs * apk - sn * aqk;
                    a[q * d + k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..d).map(|i| a[i * d + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

pub fn mat_vec<T: Real>(m: &[T], v: &[T], rows: usize, cols: usize) -> Vec<T> {
    (0..rows)
        .map(|i| (0..cols).map(|j| m[i * cols + j] * v[j]).sum())
        .collect()
}

pub fn transpose_mat_vec<T: Real>(m: &[T], v: &[T], rows: usize, cols: usize) -> Vec<T> {
    (0..cols)
        .map(|j| (0..rows).map(|i| m[i * cols + j] * v[i]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_roundtrip() {
        let m = vec![2.0, 0.5, 0.1, 0.5, 3.0, -0.2, 0.1, -0.2, 1.5];
        let p = pack_sym(&m, 3);
        assert_eq!(p, vec![2.0, 0.5, 0.1, 3.0, -0.2, 1.5]);
        assert_eq!(unpack_sym(&p, 3), m);
        assert_eq!(dim_from_packed(6), Some(3));
        assert_eq!(dim_from_packed(5), None);
    }

    #[test]
    fn spd_inverse_and_det() {
        let m: Vec<f64> = vec![4.0, 1.0, 1.0, 3.0];
        let inv = inverse_spd(&m, 2).unwrap();
        let det: f64 = 11.0;
        let expect = [3.0 / det, -1.0 / det, -1.0 / det, 4.0 / det];
        for (a, b) in inv.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((log_det_spd(&m, 2).unwrap() - det.ln()).abs() < 1e-14);
        assert!(cholesky(&[1.0f64, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn jacobi_matches_closed_form_2x2() {
        let m: Vec<f64> = vec![2.0, 1.0, 1.0, 2.0];
        let ev = sym_eigenvalues(&m, 2);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_elimination() {
        let a: [f64; 4] = [0.0, 2.0, 1.0, 1.0];
        let x = solve(&a, &[4.0, 3.0], 2).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        assert!(solve(&[1.0f64, 1.0, 1.0, 1.0], &[1.0, 2.0], 2).is_none());
    }
}
