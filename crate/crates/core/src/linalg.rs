//! Dense linear-algebra helpers not covered by nalgebra's API.

use nalgebra::{DMatrix, DVector};

use crate::design::DesignMatrix;

/// Least-squares solution of `a · x ≈ b` via Householder QR. `None` when `a`
/// has fewer rows than columns or a zero on the diagonal of R.
pub fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    let p = a.ncols();
    if a.nrows() < p {
        return None;
    }
    let qr = a.qr();
    let mut qtb = b;
    qr.q_tr_mul(&mut qtb);
    let r = qr.r();
    r.solve_upper_triangular(&qtb.rows(0, p).into_owned())
}

/// Columns that are (numerically) linear combinations of earlier columns,
/// found by modified Gram–Schmidt with one re-orthogonalization pass.
pub fn dependent_columns(x: &DesignMatrix) -> Vec<String> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..x.ncols() {
        let mut v = x.column_at(j).to_vec();
        let norm0 = dot(&v, &v).sqrt();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm0 == 0.0 || norm <= 1e-10 * norm0 {
            dependent.push(x.names()[j].clone());
        } else {
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
        }
    }
    dependent
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the row-major `p × p` system `a · x = b` by Gaussian elimination
/// with partial pivoting. Returns `None` when a pivot falls below
/// `1e-12 ×` the largest entry of `a`.
pub fn solve_small(a: &[f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), p * p);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&r1, &r2| m[r1 * p + col].abs().total_cmp(&m[r2 * p + col].abs()))?;
        if m[piv * p + col].abs() <= 1e-12 * scale {
            return None;
        }
        if piv != col {
            for k in 0..p {
                m.swap(col * p + k, piv * p + k);
            }
            rhs.swap(col, piv);
        }
        let d = m[col * p + col];
        for r in col + 1..p {
            let f = m[r * p + col] / d;
            if f != 0.0 {
                for k in col..p {
                    m[r * p + k] -= f * m[col * p + k];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; p];
    for r in (0..p).rev() {
        let s: f64 = (r + 1..p).map(|k| m[r * p + k] * x[k]).sum();
        x[r] = (rhs[r] - s) / m[r * p + r];
    }
    Some(x)
}
