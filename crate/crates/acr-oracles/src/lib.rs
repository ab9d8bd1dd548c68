//! Brute-force reference routines used by the test suites to cross-check
//! `acr-core`. Everything here is deliberately written against plain slices
//! with naive loops and no shared dependencies, so a bug in the main crate
//! cannot hide behind the same code path in its oracle.

// Index-based loops are the point of this crate: they mirror the textbook
// formulas being checked.
#![allow(clippy::needless_range_loop)]

/// Column-wise mean of a set of equal-length rows.
pub fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    assert!(!rows.is_empty(), "mean_rows: no rows");
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for row in rows {
        assert_eq!(row.len(), d, "mean_rows: ragged rows");
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= rows.len() as f64;
    }
    mean
}

/// Unbiased sample covariance of `rows` (divides by n - 1).
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    assert!(rows.len() >= 2, "covariance: need at least two rows");
    let d = rows[0].len();
    let mean = mean_rows(rows);
    let mut cov = vec![vec![0.0; d]; d];
    for row in rows {
        let centered: Vec<f64> = row.iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += centered[i] * centered[j];
            }
        }
    }
    let denom = (rows.len() - 1) as f64;
    for r in &mut cov {
        for c in r {
            *c /= denom;
        }
    }
    cov
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted in
/// descending order and `eigenvectors[k]` the unit eigenvector (as a column)
/// paired with `eigenvalues[k]`.
pub fn jacobi_eigh(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    assert!(n > 0, "jacobi_eigh: empty matrix");
    for (i, row) in a.iter().enumerate() {
        assert_eq!(row.len(), n, "jacobi_eigh: not square");
        for j in 0..n {
            assert!(
                (a[i][j] - a[j][i]).abs() <= 1e-12 * (1.0 + a[i][j].abs()),
                "jacobi_eigh: not symmetric at ({i},{j})"
            );
        }
    }

    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let scale: f64 = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
        .max(1e-300);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p][q] * m[p][q];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k][p];
                    let akq = m[k][q];
                    m[k][p] = c * akp - s * akq;
                    m[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p][k];
                    let aqk = m[q][k];
                    m[p][k] = c * apk - s * aqk;
                    m[q][k] = s * apk + c * aqk;
                }
                m[p][q] = 0.0;
                m[q][p] = 0.0;
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap().then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

/// Symmetric-difference quotient `(f(x + h) - f(x - h)) / (2 h)`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Trapezoid-rule integral of the piecewise-linear curve through
/// `(xs[i], ys[i])`.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "trapezoid: length mismatch");
    assert!(xs.len() >= 2, "trapezoid: need at least two points");
    let mut area = 0.0;
    for i in 0..xs.len() - 1 {
        area += (xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]) / 2.0;
    }
    area
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `w * x + b` for a row-major weight matrix.
pub fn affine(w: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    assert_eq!(w.len(), b.len(), "affine: bias length mismatch");
    w.iter().zip(b).map(|(row, bias)| dot(row, x) + bias).collect()
}
