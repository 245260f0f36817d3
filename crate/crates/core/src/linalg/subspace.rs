use crate::error::{Error, Result};
use crate::linalg::matrix::{Matrix, C64};
use crate::linalg::svd::{spectral_norm, svd};
use crate::linalg::tolerances::Tolerances;

/// Maximum ‖Q*Q − I‖ accepted for a basis passed in by a caller.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Orthonormal basis of the numerical column space of `a`.
pub fn orthonormal_range_basis(a: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    if a.is_empty() {
        return Ok(Matrix::zeros(a.rows(), 0));
    }
    let f = svd(a)?;
    let r = f.rank(tol);
    Ok(f.u.select_columns(0..r))
}

/// Orthonormal basis of the numerical null space of `a`.
pub fn null_space_basis(a: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let rowspace = orthonormal_range_basis(&a.adjoint(), tol)?;
    Ok(complete_orthonormal(&rowspace, a.cols() - rowspace.cols()))
}

/// Orthogonal projector `Q·Q*` onto the span of orthonormal columns `q`.
pub fn projector(q: &Matrix) -> Matrix {
    q * &q.adjoint()
}

/// `count` orthonormal columns orthogonal to the (orthonormal) columns of
/// `basis`. Candidates are standard basis vectors, taken greedily by largest
/// residual after projection.
pub fn complete_orthonormal(basis: &Matrix, count: usize) -> Matrix {
    let n = basis.rows();
    let mut have: Vec<Vec<C64>> = basis.columns();
    let mut added: Vec<Vec<C64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for k in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[k] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for q in &have {
                    let h: C64 = q.iter().zip(&e).map(|(a, b)| a.conj() * b).sum();
                    for (x, y) in e.iter_mut().zip(q) {
                        *x -= h * y;
                    }
                }
            }
            let nrm = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
                best = Some((nrm, e));
            }
        }
        let (nrm, mut e) = best.expect("completion requested beyond ambient dimension");
        e.iter_mut().for_each(|z| *z /= nrm);
        have.push(e.clone());
        added.push(e);
    }
    Matrix::from_columns(n, &added)
}

/// ‖Q*Q − I‖ for a matrix of intended-orthonormal columns.
pub fn orthonormality_defect(q: &Matrix) -> Result<f64> {
    let gram = &q.adjoint() * q;
    spectral_norm(&(&gram - &Matrix::identity(q.cols())))
}

/// Gap between two subspaces given by orthonormal bases: ‖P_A − P_B‖.
///
/// Zero iff the subspaces coincide; one when one of them contains a vector
/// orthogonal to the other.
pub fn principal_angle_gap(basis_a: &Matrix, basis_b: &Matrix) -> Result<f64> {
    if basis_a.rows() != basis_b.rows() {
        return Err(Error::DimensionMismatch {
            op: "principal_angle_gap",
            left: basis_a.shape(),
            right: basis_b.shape(),
        });
    }
    for q in [basis_a, basis_b] {
        let defect = orthonormality_defect(q)?;
        if defect > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation: defect });
        }
    }
    spectral_norm(&(&projector(basis_a) - &projector(basis_b)))
}
