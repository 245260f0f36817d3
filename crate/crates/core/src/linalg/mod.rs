//! Dense complex matrices and the rank-revealing machinery under everything else.

mod matrix;
mod solve;
mod subspace;
mod svd;
mod tolerances;

pub use matrix::{adjoint, multiply, Matrix, C64};
pub use solve::{inverse, solve_right, solve_square};
pub use subspace::{
    complete_orthonormal, null_space_basis, orthonormal_range_basis, orthonormality_defect,
    principal_angle_gap, projector, ORTHONORMAL_TOL,
};
pub use svd::{spectral_norm, svd, SvdFactors, MAX_SWEEPS};
pub use tolerances::{
    Tolerances, DEFAULT_EQ_ABS, DEFAULT_EQ_REL, DEFAULT_MARGIN_STRICT, DEFAULT_RANK_REL,
};

/// Numerical rank of `a`.
pub fn rank(a: &Matrix, tol: &Tolerances) -> crate::Result<usize> {
    if a.is_empty() {
        return Ok(0);
    }
    Ok(svd(a)?.rank(tol))
}

/// `‖a − b‖` in the spectral norm; shapes must match.
pub fn distance(a: &Matrix, b: &Matrix) -> crate::Result<f64> {
    spectral_norm(&a.checked_sub(b)?)
}
