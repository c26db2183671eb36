//! Dense linear solve (Gaussian elimination with partial pivoting).

use super::matrix::Matrix;
use crate::error::{CoreError, Result};

/// Solve a * x = b for square a. Deterministic pivot choice (first maximal).
pub fn solve_dense(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(CoreError::shape(format!("solve expects square matrix, got {}x{}", a.rows(), a.cols())));
    }
    if b.len() != n {
        return Err(CoreError::shape(format!("rhs length {} != {}", b.len(), n)));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        let mut best = m.get(col, col).abs();
        for row in col + 1..n {
            let v = m.get(row, col).abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-300 {
            return Err(CoreError::geometry("singular system".to_string()));
        }
        if pivot != col {
            for j in 0..n {
                let a = m.get(col, j);
                let b2 = m.get(pivot, j);
                m.set(col, j, b2);
                m.set(pivot, j, a);
            }
            x.swap(col, pivot);
        }
        let d = m.get(col, col);
        for row in col + 1..n {
            let f = m.get(row, col) / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m.get(row, j) - f * m.get(col, j);
                m.set(row, j, v);
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for j in col + 1..n {
            acc -= m.get(col, j) * x[j];
        }
        x[col] = acc / m.get(col, col);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn solves_random_systems() {
        for seed in 0..100u64 {
            let n = 3 + (seed as usize % 8);
            let mut r = rng::stream(seed, "solve.random");
            let a = Matrix::random_uniform(n, n, 1.0, &mut r)
                .add(&Matrix::identity(n).scale(2.0 * n as f64))
                .unwrap();
            let x_true: Vec<f64> =
                Matrix::random_uniform(n, 1, 1.0, &mut r).into_data();
            let b = a.matvec(&x_true).unwrap();
            let x = solve_dense(&a, &b).unwrap();
            for i in 0..n {
                assert!((x[i] - x_true[i]).abs() < 1e-9, "seed {seed}");
            }
        }
    }

    #[test]
    fn rejects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(solve_dense(&a, &[1.0, 2.0]).is_err());
    }
}
