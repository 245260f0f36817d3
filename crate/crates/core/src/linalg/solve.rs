use crate::error::{Error, Result};
use crate::linalg::matrix::{Matrix, C64};
use crate::linalg::svd::svd;
use crate::linalg::tolerances::Tolerances;

/// Solves `a·x = b` for square nonsingular `a`.
///
/// Singularity is judged from the singular values of `a` against the rank
/// cutoff; the solve itself is Gaussian elimination with partial pivoting.
pub fn solve_square(a: &Matrix, b: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "solve_square",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(b.clone());
    }
    let f = svd(a)?;
    let sigma_min = f.sigma[n - 1];
    let cutoff = tol.rank_cutoff(n, n, f.sigma_max());
    if sigma_min <= cutoff {
        return Err(Error::Singular { sigma_min, cutoff });
    }
    Ok(lu_solve(a, b))
}

/// Inverse of a square nonsingular matrix.
pub fn inverse(a: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    solve_square(a, &Matrix::identity(a.rows()), tol)
}

/// `b · a⁻¹`, computed as `(a*⁻¹ · b*)*`.
pub fn solve_right(b: &Matrix, a: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    Ok(solve_square(&a.adjoint(), &b.adjoint(), tol)?.adjoint())
}

fn lu_solve(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows();
    let k = b.cols();
    let mut lu: Vec<Vec<C64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
    let mut rhs: Vec<Vec<C64>> = (0..n).map(|i| (0..k).map(|j| b[(i, j)]).collect()).collect();

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| lu[i][col].norm().total_cmp(&lu[j][col].norm()))
            .unwrap_or(col);
        lu.swap(col, pivot);
        rhs.swap(col, pivot);
        let d = lu[col][col];
        for row in (col + 1)..n {
            let factor = lu[row][col] / d;
            if factor.re == 0.0 && factor.im == 0.0 {
                continue;
            }
            let (top, bottom) = lu.split_at_mut(row);
            let (pivot_row, target) = (&top[col], &mut bottom[0]);
            for j in col..n {
                target[j] -= factor * pivot_row[j];
            }
            let (rtop, rbottom) = rhs.split_at_mut(row);
            for j in 0..k {
                rbottom[0][j] -= factor * rtop[col][j];
            }
        }
    }
    let mut x = vec![vec![C64::new(0.0, 0.0); k]; n];
    for row in (0..n).rev() {
        for j in 0..k {
            let mut acc = rhs[row][j];
            for c in (row + 1)..n {
                acc -= lu[row][c] * x[c][j];
            }
            x[row][j] = acc / lu[row][row];
        }
    }
    Matrix::from_fn(n, k, |i, j| x[i][j])
}
