//! Small dense complex linear algebra on `Vec<Vec<C64>>` rows.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, RhpError};

type C64 = Complex64;

fn to_matrix(rows: &[Vec<C64>]) -> DMatrix<C64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Determinant by LU with partial pivoting; 1 for the empty matrix.
pub fn det(rows: &[Vec<C64>]) -> C64 {
    if rows.is_empty() {
        return C64::new(1.0, 0.0);
    }
    to_matrix(rows).lu().determinant()
}

/// Solves `M x = rhs`.
pub fn solve(rows: &[Vec<C64>], rhs: &[C64]) -> Result<Vec<C64>> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let m = to_matrix(rows);
    let b = nalgebra::DVector::from_column_slice(rhs);
    let x = m.lu().solve(&b).ok_or(RhpError::SingularSystem)?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(RhpError::SingularSystem);
    }
    Ok(x.iter().copied().collect())
}

/// Transpose of a square row matrix.
pub fn transpose(rows: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = rows.len();
    (0..n).map(|j| (0..n).map(|i| rows[i][j]).collect()).collect()
}

/// Determinant by cofactor expansion along the last column (small sizes only).
pub fn det_cofactor(rows: &[Vec<C64>]) -> C64 {
    let n = rows.len();
    match n {
        0 => C64::new(1.0, 0.0),
        1 => rows[0][0],
        _ => {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                let minor: Vec<Vec<C64>> = rows
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i)
                    .map(|(_, r)| r[..n - 1].to_vec())
                    .collect();
                let sign = if (i + n - 1) % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * rows[i][n - 1] * det_cofactor(&minor);
            }
            acc
        }
    }
}
