//! 3x3 singular value decomposition via cyclic one-sided Jacobi.

use super::matrix::Matrix;
use super::vec3::{cross, norm, normalize};
use crate::error::{CoreError, Result};

/// Decompose a 3x3 matrix as m = U * diag(S) * V^T with U, V orthonormal
/// and S descending, non-negative.
///
/// One-sided Jacobi rotations orthogonalize the columns of a working copy
/// B = m * V; singular values are the column norms and U the normalized
/// columns. Rank-deficient inputs get their null columns of U completed to
/// an orthonormal basis.
pub fn svd3(m: &Matrix) -> Result<(Matrix, [f64; 3], Matrix)> {
    if m.rows() != 3 || m.cols() != 3 {
        return Err(CoreError::shape(format!("svd3 expects 3x3, got {}x{}", m.rows(), m.cols())));
    }

    let mut b = m.clone();
    let mut v = Matrix::identity(3);

    let col = |mat: &Matrix, j: usize| [mat.get(0, j), mat.get(1, j), mat.get(2, j)];
    let dot_cols = |mat: &Matrix, p: usize, q: usize| {
        mat.get(0, p) * mat.get(0, q) + mat.get(1, p) * mat.get(1, q) + mat.get(2, p) * mat.get(2, q)
    };

    // Cyclic sweeps; quadratic convergence makes 30 more than enough.
    for _ in 0..30 {
        let mut off = 0.0f64;
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let alpha = dot_cols(&b, p, p);
            let beta = dot_cols(&b, q, q);
            let gamma = dot_cols(&b, p, q);
            off = off.max(gamma.abs() / (alpha * beta).sqrt().max(f64::MIN_POSITIVE));
            if gamma.abs() <= 1e-300 {
                continue;
            }
            // Jacobi rotation zeroing the (p,q) entry of B^T B.
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            for mat in [&mut b, &mut v] {
                for i in 0..3 {
                    let bp = mat.get(i, p);
                    let bq = mat.get(i, q);
                    mat.set(i, p, c * bp - s * bq);
                    mat.set(i, q, s * bp + c * bq);
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }

    let mut sigma = [norm(col(&b, 0)), norm(col(&b, 1)), norm(col(&b, 2))];

    // Sort descending, permuting columns of B and V alongside.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &c| sigma[c].partial_cmp(&sigma[a]).unwrap());
    let permute = |mat: &Matrix, order: &[usize; 3]| {
        let mut out = Matrix::zeros(3, 3);
        for (new_j, &old_j) in order.iter().enumerate() {
            for i in 0..3 {
                out.set(i, new_j, mat.get(i, old_j));
            }
        }
        out
    };
    b = permute(&b, &order);
    let v = permute(&v, &order);
    sigma = [sigma[order[0]], sigma[order[1]], sigma[order[2]]];

    // Normalize columns of B into U; complete null columns orthonormally.
    let tol = sigma[0].max(1.0) * 1e-300;
    let mut u_cols: Vec<[f64; 3]> = Vec::with_capacity(3);
    for j in 0..3 {
        if sigma[j] > tol {
            u_cols.push(normalize(col(&b, j)));
        } else {
            let filled = match u_cols.len() {
                0 => [1.0, 0.0, 0.0],
                1 => {
                    let a = u_cols[0];
                    // Any unit vector orthogonal to a.
                    let pick = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                    normalize(cross(a, pick))
                }
                _ => normalize(cross(u_cols[0], u_cols[1])),
            };
            u_cols.push(filled);
        }
    }
    let mut u = Matrix::zeros(3, 3);
    for (j, c) in u_cols.iter().enumerate() {
        for i in 0..3 {
            u.set(i, j, c[i]);
        }
    }

    Ok((u, sigma, v))
}
