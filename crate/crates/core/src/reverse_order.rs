//! Reverse-order law `(FG)† = G†F†` for `F` of full column rank and `G` of
//! full row rank, with the closed form `G*(GG*)⁻¹(F*F)⁻¹F*`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{distance, inverse, rank, spectral_norm, Matrix, Tolerances};
use crate::pinv::pseudoinverse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoredPinv {
    /// The product `FG`.
    pub a: Matrix,
    /// `G†F†`
    pub pinv_reverse: Matrix,
    /// `G*(GG*)⁻¹(F*F)⁻¹F*`
    pub pinv_closed_form: Matrix,
    /// Direct SVD pseudoinverse of `FG`.
    pub pinv_oracle: Matrix,
    pub max_pairwise_discrepancy: f64,
}

fn check_inner_dims(f: &Matrix, g: &Matrix) -> Result<()> {
    if f.cols() != g.rows() {
        return Err(Error::DimensionMismatch {
            op: "reverse_order",
            left: f.shape(),
            right: g.shape(),
        });
    }
    Ok(())
}

/// True iff `F` has full column rank and `G` has full row rank.
pub fn check_rol_hypotheses(f: &Matrix, g: &Matrix, tol: &Tolerances) -> Result<bool> {
    check_inner_dims(f, g)?;
    Ok(rank(f, tol)? == f.cols() && rank(g, tol)? == g.rows())
}

fn gram_inverse(m: &Matrix, name: &str, tol: &Tolerances) -> Result<Matrix> {
    inverse(m, tol).map_err(|e| match e {
        Error::Singular { sigma_min, cutoff } => {
            Error::invariant(format!("{name} invertible under full-rank hypotheses"), cutoff, sigma_min)
        }
        other => other,
    })
}

/// Computes `(FG)†` three ways and asserts the intermediate identities
/// `A†F = G*(GG*)⁻¹` and `GA† = (F*F)⁻¹F*`.
pub fn reverse_order_pinv(f: &Matrix, g: &Matrix, tol: &Tolerances) -> Result<FactoredPinv> {
    check_inner_dims(f, g)?;
    let f_rank = rank(f, tol)?;
    if f_rank != f.cols() {
        return Err(Error::refused("F does not have full column rank", f_rank as f64));
    }
    let g_rank = rank(g, tol)?;
    if g_rank != g.rows() {
        return Err(Error::refused("G does not have full row rank", g_rank as f64));
    }

    let a = f * g;
    let f_pinv = pseudoinverse(f, tol)?;
    let g_pinv = pseudoinverse(g, tol)?;
    let pinv_reverse = &g_pinv.pinv * &f_pinv.pinv;

    let f_adj = f.adjoint();
    let g_adj = g.adjoint();
    let ff_inv = gram_inverse(&(&f_adj * f), "F*F", tol)?;
    let gg_inv = gram_inverse(&(g * &g_adj), "GG*", tol)?;
    let right_factor = &g_adj * &gg_inv;
    let left_factor = &ff_inv * &f_adj;
    let pinv_closed_form = &right_factor * &left_factor;
    let pinv_oracle = pseudoinverse(&a, tol)?.pinv;

    let discrepancies = [
        distance(&pinv_reverse, &pinv_closed_form)?,
        distance(&pinv_reverse, &pinv_oracle)?,
        distance(&pinv_closed_form, &pinv_oracle)?,
    ];
    let max_pairwise_discrepancy = discrepancies.into_iter().fold(0.0, f64::max);

    // Gram inverses square the condition numbers of F and G.
    let kappa = f_pinv.condition() * g_pinv.condition();
    let scale = [&pinv_reverse, &pinv_closed_form, &pinv_oracle]
        .into_iter()
        .map(spectral_norm)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(1.0, f64::max)
        * kappa.max(1.0);
    if !tol.within(max_pairwise_discrepancy, scale) {
        return Err(Error::invariant(
            "G†F† = G*(GG*)⁻¹(F*F)⁻¹F* = (FG)†",
            max_pairwise_discrepancy,
            tol.slack(scale),
        ));
    }
    let left_residual = distance(&(&pinv_oracle * f), &right_factor)?;
    if !tol.within(left_residual, scale) {
        return Err(Error::invariant("A†F = G*(GG*)⁻¹", left_residual, tol.slack(scale)));
    }
    let right_residual = distance(&(g * &pinv_oracle), &left_factor)?;
    if !tol.within(right_residual, scale) {
        return Err(Error::invariant("GA† = (F*F)⁻¹F*", right_residual, tol.slack(scale)));
    }

    Ok(FactoredPinv {
        a,
        pinv_reverse,
        pinv_closed_form,
        pinv_oracle,
        max_pairwise_discrepancy,
    })
}

/// `‖G†F† − (FG)†‖` with no hypothesis check, for counterexamples.
pub fn reverse_order_gap(f: &Matrix, g: &Matrix, tol: &Tolerances) -> Result<f64> {
    check_inner_dims(f, g)?;
    let reverse = &pseudoinverse(g, tol)?.pinv * &pseudoinverse(f, tol)?.pinv;
    distance(&reverse, &pseudoinverse(&(f * g), tol)?.pinv)
}

/// A fixed pair where `F` lacks full column rank and the reverse-order law
/// fails by `1/√2` in spectral norm.
pub fn counterexample_pair() -> (Matrix, Matrix) {
    let f = Matrix::from_real_rows(&[[1.0, 0.0], [0.0, 0.0]]).expect("fixed data");
    let g = Matrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]]).expect("fixed data");
    (f, g)
}
