//! Moore-Penrose pseudoinverse, reduced minimum modulus and the canonical
//! projections, plus a checker for the four defining identities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{distance, spectral_norm, svd, Matrix, Tolerances, C64};

/// `T†` together with what the SVD revealed about `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinvResult {
    pub pinv: Matrix,
    pub rank: usize,
    /// All singular values of `T`, non-increasing.
    pub sigma: Vec<f64>,
    /// Reduced minimum modulus: smallest nonzero singular value, 0 for `T = 0`.
    pub gamma: f64,
    /// Orthogonal projector onto `R(T)`.
    pub proj_range: Matrix,
    /// Orthogonal projector onto `N(T)^⊥`.
    pub proj_rowspace: Matrix,
}

impl PinvResult {
    /// `‖T†‖`, which equals `1/γ(T)` for nonzero `T`.
    pub fn pinv_norm(&self) -> f64 {
        if self.rank == 0 {
            0.0
        } else {
            1.0 / self.gamma
        }
    }

    pub fn norm(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// `‖T‖/γ(T)` on the carrier; 1 for the zero matrix.
    pub fn condition(&self) -> f64 {
        if self.rank == 0 {
            1.0
        } else {
            self.norm() / self.gamma
        }
    }

    /// Largest deviation between the SVD projectors and `TT†`, `T†T`.
    pub fn projection_consistency(&self, t: &Matrix) -> Result<f64> {
        let a = distance(&(t * &self.pinv), &self.proj_range)?;
        let b = distance(&(&self.pinv * t), &self.proj_rowspace)?;
        Ok(a.max(b))
    }
}

/// Residuals of the four Moore-Penrose identities for a candidate `X ≈ T†`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    /// ‖TXT − T‖
    pub residual_t_x_t: f64,
    /// ‖XTX − X‖
    pub residual_x_t_x: f64,
    /// ‖(TX)* − TX‖
    pub residual_sym_tx: f64,
    /// ‖(XT)* − XT‖
    pub residual_sym_xt: f64,
    /// Slack each residual was compared against.
    pub allowed: f64,
    pub passed: bool,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_t_x_t
            .max(self.residual_x_t_x)
            .max(self.residual_sym_tx)
            .max(self.residual_sym_xt)
    }
}

pub fn pseudoinverse(t: &Matrix, tol: &Tolerances) -> Result<PinvResult> {
    let (m, n) = t.shape();
    if t.is_empty() {
        return Ok(PinvResult {
            pinv: Matrix::zeros(n, m),
            rank: 0,
            sigma: Vec::new(),
            gamma: 0.0,
            proj_range: Matrix::zeros(m, m),
            proj_rowspace: Matrix::zeros(n, n),
        });
    }
    let f = svd(t)?;
    let r = f.rank(tol);
    let ur = f.u.select_columns(0..r);
    let vr = f.v.select_columns(0..r);
    let v_scaled = Matrix::from_fn(n, r, |i, j| vr[(i, j)] / f.sigma[j]);
    let ur_adj = ur.adjoint();
    Ok(PinvResult {
        pinv: &v_scaled * &ur_adj,
        rank: r,
        gamma: if r == 0 { 0.0 } else { f.sigma[r - 1] },
        proj_range: &ur * &ur_adj,
        proj_rowspace: &vr * &vr.adjoint(),
        sigma: f.sigma,
    })
}

/// γ(T) = inf ‖Tx‖ over unit x ⟂ N(T); 0 for the zero matrix.
pub fn reduced_min_modulus(t: &Matrix, tol: &Tolerances) -> Result<f64> {
    if t.is_empty() {
        return Ok(0.0);
    }
    let f = svd(t)?;
    let r = f.rank(tol);
    Ok(if r == 0 { 0.0 } else { f.sigma[r - 1] })
}

pub fn verify_mp_axioms(t: &Matrix, candidate: &Matrix, tol: &Tolerances) -> Result<AxiomReport> {
    if candidate.shape() != (t.cols(), t.rows()) {
        return Err(Error::DimensionMismatch {
            op: "verify_mp_axioms",
            left: t.shape(),
            right: candidate.shape(),
        });
    }
    let tx = t * candidate;
    let xt = candidate * t;
    let residual_t_x_t = distance(&(&tx * t), t)?;
    let residual_x_t_x = distance(&(&xt * candidate), candidate)?;
    let residual_sym_tx = distance(&tx.adjoint(), &tx)?;
    let residual_sym_xt = distance(&xt.adjoint(), &xt)?;
    let scale = 1f64
        .max(spectral_norm(t)?)
        .max(spectral_norm(candidate)?);
    let allowed = tol.slack(scale);
    let passed = [residual_t_x_t, residual_x_t_x, residual_sym_tx, residual_sym_xt]
        .iter()
        .all(|&r| r <= allowed);
    Ok(AxiomReport {
        residual_t_x_t,
        residual_x_t_x,
        residual_sym_tx,
        residual_sym_xt,
        allowed,
        passed,
    })
}

/// Minimal-norm least-squares solution `x = T†y`.
pub fn least_squares_min_norm(t: &Matrix, y: &[C64], tol: &Tolerances) -> Result<Vec<C64>> {
    if y.len() != t.rows() {
        return Err(Error::DimensionMismatch {
            op: "least_squares_min_norm",
            left: t.shape(),
            right: (y.len(), 1),
        });
    }
    pseudoinverse(t, tol)?.pinv.mul_vec(y)
}

/// Both routes `(T*T)†T*` and `T*(TT*)†`, each checked against the SVD
/// pseudoinverse. Returns the common value.
///
/// The normal-equation routes square the condition number, so the allowed
/// deviation is scaled by `κ(T)²·‖T†‖`.
pub fn mp_representation(t: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let direct = pseudoinverse(t, tol)?;
    let t_adj = t.adjoint();
    let gram_right = pseudoinverse(&(&t_adj * t), tol)?;
    let gram_left = pseudoinverse(&(t * &t_adj), tol)?;
    if gram_right.rank != direct.rank || gram_left.rank != direct.rank {
        return Err(Error::invariant(
            format!(
                "rank(T*T) = {}, rank(TT*) = {} but rank(T) = {}",
                gram_right.rank, gram_left.rank, direct.rank
            ),
            gram_right.rank.abs_diff(direct.rank).max(gram_left.rank.abs_diff(direct.rank)) as f64,
            0.0,
        ));
    }
    let via_left = &gram_right.pinv * &t_adj;
    let via_right = &t_adj * &gram_left.pinv;
    let kappa = direct.condition();
    let limit = tol.slack(direct.pinv_norm().max(1.0) * kappa * kappa);
    for (name, route) in [("(T*T)†T* = T†", &via_left), ("T*(TT*)† = T†", &via_right)] {
        let d = distance(route, &direct.pinv)?;
        if d > limit {
            return Err(Error::invariant(name, d, limit));
        }
    }
    Ok(via_right)
}
