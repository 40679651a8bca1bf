//! Dense row-major matrices for linear maps between coordinate spaces.

use crate::Vector;

pub type Matrix = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn apply(m: &Matrix, v: &[f64]) -> Vector {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn mul(a: &Matrix, b: &Matrix) -> Matrix {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// Matrix whose columns are the given vectors.
pub fn from_columns(cols: &[Vector], rows: usize) -> Matrix {
    (0..rows)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect()
}

/// `diag(a, P)` where `P` sends basis vector `i` to basis vector `perm[i]`.
pub fn block_with_permutation(a: &Matrix, perm: &[usize]) -> Matrix {
    let n = a.len();
    let k = perm.len();
    let mut m = vec![vec![0.0; n + k]; n + k];
    for i in 0..n {
        m[i][..n].copy_from_slice(&a[i][..n]);
    }
    for (i, &j) in perm.iter().enumerate() {
        m[n + j][n + i] = 1.0;
    }
    m
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
