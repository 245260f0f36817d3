//! Closed-form perturbed pseudoinverses, the Neumann-series pseudoinverse and
//! the a-priori error and continuity bounds.
//!
//! Every update is returned together with its distance to the direct SVD
//! pseudoinverse of the perturbed operator. A failed hypothesis is reported
//! as [`Error::Refused`]; there is no silent fallback to the direct route.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{
    check_null_inclusion, check_relative_bound, check_stewart_hypotheses, DEFAULT_SAMPLES,
};
use crate::linalg::{distance, inverse, rank, solve_right, solve_square, spectral_norm, Matrix, Tolerances};
use crate::pinv::pseudoinverse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMethod {
    StewartLeft,
    StewartRight,
    RelativeSurjective,
    NeumannSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormsUsed {
    /// ‖T†S‖
    pub tds: f64,
    /// ‖ST†‖
    pub std: f64,
    /// ‖S‖
    pub s: f64,
    /// ‖T†‖
    pub td: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateResult {
    pub pinv_updated: Matrix,
    pub method: UpdateMethod,
    pub bound_apriori: Option<f64>,
    /// ‖updated − pinv(T+S)‖ with the right side from a direct SVD.
    pub oracle_discrepancy: f64,
    /// ‖updated − T†‖, the quantity the a-priori bound controls.
    pub change_from_t: f64,
    /// Distance between the two algebraic forms, where two are computed.
    pub form_discrepancy: f64,
    pub norms_used: NormsUsed,
}

fn norms(s: &Matrix, td: &Matrix) -> Result<NormsUsed> {
    Ok(NormsUsed {
        tds: spectral_norm(&(td * s))?,
        std: spectral_norm(&(s * td))?,
        s: spectral_norm(s)?,
        td: spectral_norm(td)?,
    })
}

fn singular_to_refusal(e: Error, what: &str) -> Error {
    match e {
        Error::Singular { sigma_min, .. } => {
            Error::refused(format!("{what} is numerically singular (smallest singular value)"), sigma_min)
        }
        other => other,
    }
}

/// `(T+S)† = (I + T†S)⁻¹T† = T†(I + ST†)⁻¹` under the Stewart hypotheses
/// `‖T†S‖ < 1`, `TT†S = S`, `ST†T = S`.
///
/// Both forms are computed and must agree, and the recovery identity
/// `T† = (T+S)†(I + ST†)` is checked. The left form is returned.
pub fn update_stewart(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<UpdateResult> {
    let report = check_stewart_hypotheses(t, s, tol)?;
    if let Some((condition, value)) = report.stewart_failure(tol) {
        return Err(Error::refused(condition, value));
    }
    let (m, n) = t.shape();
    let td = pseudoinverse(t, tol)?.pinv;
    let tds = &td * s;
    let std = s * &td;
    let left_op = &Matrix::identity(n) + &tds;
    let right_op = &Matrix::identity(m) + &std;
    let left = solve_square(&left_op, &td, tol).map_err(|e| singular_to_refusal(e, "I + T†S"))?;
    let right = solve_right(&td, &right_op, tol).map_err(|e| singular_to_refusal(e, "I + ST†"))?;

    let norms_used = norms(s, &td)?;
    let scale = norms_used.td.max(1.0);
    let form_discrepancy = distance(&left, &right)?;
    if !tol.within(form_discrepancy, scale) {
        return Err(Error::invariant("(I+T†S)⁻¹T† = T†(I+ST†)⁻¹", form_discrepancy, tol.slack(scale)));
    }
    let recovery = distance(&(&left * &right_op), &td)?;
    if !tol.within(recovery, scale) {
        return Err(Error::invariant("T† = (T+S)†(I+ST†)", recovery, tol.slack(scale)));
    }
    let oracle = pseudoinverse(&(t + s), tol)?.pinv;
    Ok(UpdateResult {
        oracle_discrepancy: distance(&left, &oracle)?,
        change_from_t: distance(&left, &td)?,
        bound_apriori: Some(stewart_bound_value(&norms_used)),
        pinv_updated: left,
        method: UpdateMethod::StewartLeft,
        form_discrepancy,
        norms_used,
    })
}

/// Same update, returning the right form `T†(I + ST†)⁻¹`.
pub fn update_stewart_right(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<UpdateResult> {
    let mut r = update_stewart(t, s, tol)?;
    let td = pseudoinverse(t, tol)?.pinv;
    let right_op = &Matrix::identity(t.rows()) + &(s * &td);
    let right = solve_right(&td, &right_op, tol).map_err(|e| singular_to_refusal(e, "I + ST†"))?;
    let oracle = pseudoinverse(&(t + s), tol)?.pinv;
    r.oracle_discrepancy = distance(&right, &oracle)?;
    r.change_from_t = distance(&right, &td)?;
    r.pinv_updated = right;
    r.method = UpdateMethod::StewartRight;
    Ok(r)
}

fn stewart_bound_value(n: &NormsUsed) -> f64 {
    n.s * n.td * n.td / (1.0 - n.tds)
}

/// `(T+S)† = T†(I + ST†)⁻¹` for surjective `T` and `S` relatively bounded by
/// `‖Sx‖ ≤ λ₁‖Tx‖ + λ₂‖(S+T)x‖` with `λ₁ < 1`.
///
/// Also asserts that `T+S` is surjective and that
/// `‖(T+S)†‖ ≤ (1+λ₂)/(1−λ₁)·‖T†‖`.
pub fn update_relative_surjective(
    t: &Matrix,
    s: &Matrix,
    lambda1: f64,
    lambda2: f64,
    tol: &Tolerances,
) -> Result<UpdateResult> {
    t.same_shape(s, "update_relative_surjective")?;
    if lambda1.is_nan() || lambda1 >= 1.0 {
        return Err(Error::refused("λ₁ ≥ 1", lambda1));
    }
    if lambda2.is_nan() || lambda2 <= -1.0 {
        return Err(Error::refused("λ₂ ≤ −1", lambda2));
    }
    let m = t.rows();
    let tp = pseudoinverse(t, tol)?;
    if tp.rank != m {
        return Err(Error::refused("T is not surjective (rank < rows)", tp.rank as f64));
    }
    let check = check_relative_bound(t, s, lambda1, lambda2, DEFAULT_SAMPLES, tol)?;
    if !check.holds {
        return Err(Error::refused(
            "relative bound ‖Sx‖ ≤ λ₁‖Tx‖ + λ₂‖(S+T)x‖ violated",
            check.worst_slack,
        ));
    }
    let td = &tp.pinv;
    let op = &Matrix::identity(m) + &(s * td);
    let updated = solve_right(td, &op, tol).map_err(|e| match e {
        Error::Singular { sigma_min, cutoff } => {
            Error::invariant("I + ST† invertible under the relative bound", cutoff, sigma_min)
        }
        other => other,
    })?;

    let oracle = pseudoinverse(&(t + s), tol)?;
    if oracle.rank != m {
        return Err(Error::invariant("T+S surjective", (m - oracle.rank) as f64, 0.0));
    }
    let norms_used = norms(s, td)?;
    let growth = (1.0 + lambda2) / (1.0 - lambda1) * norms_used.td;
    let measured = oracle.pinv_norm();
    if measured > growth + tol.slack(growth) {
        return Err(Error::invariant("‖(T+S)†‖ ≤ (1+λ₂)/(1−λ₁)‖T†‖", measured, growth));
    }
    let bound_apriori = if lambda2 == 0.0 {
        Some(error_bound_lambda2_zero(t, s, tol)?.bound)
    } else {
        None
    };
    Ok(UpdateResult {
        oracle_discrepancy: distance(&updated, &oracle.pinv)?,
        change_from_t: distance(&updated, td)?,
        form_discrepancy: 0.0,
        pinv_updated: updated,
        method: UpdateMethod::RelativeSurjective,
        bound_apriori,
        norms_used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeumannOptions {
    /// Stop once the next term has norm below this; `None` means
    /// `1e-12·‖T†‖`.
    pub eps_series: Option<f64>,
    pub max_terms: usize,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        Self {
            eps_series: None,
            max_terms: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannResult {
    pub pinv_s: Matrix,
    pub terms_used: usize,
    /// Norm of the first term left out of the sum.
    pub last_term_norm: f64,
    /// ‖(S−T)T†‖
    pub ratio: f64,
    /// ‖T†‖·ratio^terms_used/(1−ratio), the geometric tail bound.
    pub residual_bound: f64,
    pub converged: bool,
    pub eps_series: f64,
    /// ‖series − pinv(S)‖ against a direct SVD.
    pub oracle_discrepancy: f64,
    /// ‖series − T†(I + (S−T)T†)⁻¹‖
    pub closed_form_discrepancy: f64,
}

/// Partial sums `T†·Σ_{k<n} (−A)^k` with `A = (S−T)T†`.
///
/// Since `(I + A)⁻¹ = Σ (−A)^k`, these converge to `S† = T†(I + A)⁻¹`
/// whenever `‖A‖ < 1`.
#[derive(Debug, Clone)]
pub struct NeumannPartialSums {
    neg_a: Matrix,
    next_term: Matrix,
    partial: Matrix,
    terms: usize,
}

impl NeumannPartialSums {
    pub fn new(t_pinv: &Matrix, t: &Matrix, s: &Matrix) -> Result<Self> {
        t.same_shape(s, "neumann")?;
        let a = &(s - t) * t_pinv;
        Ok(Self {
            neg_a: -&a,
            next_term: t_pinv.clone(),
            partial: Matrix::zeros(t_pinv.rows(), t_pinv.cols()),
            terms: 0,
        })
    }

    /// Adds the next term to the running sum.
    pub fn advance(&mut self) {
        self.partial = &self.partial + &self.next_term;
        self.next_term = &self.next_term * &self.neg_a;
        self.terms += 1;
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn partial_sum(&self) -> &Matrix {
        &self.partial
    }

    pub fn next_term(&self) -> &Matrix {
        &self.next_term
    }
}

/// `‖a‖₂ < eps`, deciding from the Frobenius norm when it is conclusive.
fn spectral_norm_below(a: &Matrix, eps: f64) -> Result<(bool, f64)> {
    let fro = a.frobenius_norm();
    let k = a.rows().min(a.cols()).max(1) as f64;
    if fro < eps {
        return Ok((true, fro));
    }
    if fro / k.sqrt() >= eps {
        return Ok((false, fro / k.sqrt()));
    }
    let s = spectral_norm(a)?;
    Ok((s < eps, s))
}

/// `S† = T†(I + (S−T)T†)⁻¹` as a truncated Neumann series, for surjective `T`
/// and `‖(S−T)x‖ ≤ λ₁‖Tx‖` with `λ₁ = ‖(S−T)T†‖ < 1`.
pub fn neumann_pinv(
    t: &Matrix,
    s: &Matrix,
    opts: &NeumannOptions,
    tol: &Tolerances,
) -> Result<NeumannResult> {
    t.same_shape(s, "neumann_pinv")?;
    if opts.max_terms == 0 {
        return Err(Error::InvalidArgument("max_terms must be positive".into()));
    }
    let m = t.rows();
    let tp = pseudoinverse(t, tol)?;
    if tp.rank != m {
        return Err(Error::refused("T is not surjective (rank < rows)", tp.rank as f64));
    }
    let diff = s - t;
    let null = check_null_inclusion(t, &diff, tol)?;
    if !null.holds {
        return Err(Error::refused("N(T) ⊄ N(S−T): no λ₁ bounds ‖(S−T)x‖ by ‖Tx‖", null.residual));
    }
    let td = &tp.pinv;
    let a = &diff * td;
    let ratio = spectral_norm(&a)?;
    if !tol.strictly_below(ratio, 1.0) {
        return Err(Error::refused("‖(S−T)T†‖ ≥ 1", ratio));
    }
    let rb = check_relative_bound(t, &diff, ratio, 0.0, DEFAULT_SAMPLES, tol)?;
    if !rb.holds {
        return Err(Error::invariant(
            "‖(S−T)x‖ ≤ ‖(S−T)T†‖·‖Tx‖",
            -rb.worst_slack,
            0.0,
        ));
    }

    let td_norm = tp.pinv_norm();
    let eps_series = opts.eps_series.unwrap_or(1e-12 * td_norm);
    let mut sums = NeumannPartialSums::new(td, t, s)?;
    let mut converged = false;
    let mut last_term_norm = td_norm;
    while sums.terms() < opts.max_terms {
        sums.advance();
        let (below, nrm) = spectral_norm_below(sums.next_term(), eps_series)?;
        last_term_norm = nrm;
        if below {
            converged = true;
            break;
        }
    }
    let terms_used = sums.terms();
    let residual_bound = td_norm * ratio.powi(terms_used as i32) / (1.0 - ratio);
    let pinv_s = sums.partial_sum().clone();

    let closed = solve_right(td, &(&Matrix::identity(m) + &a), tol)
        .map_err(|e| singular_to_refusal(e, "I + (S−T)T†"))?;
    let oracle = pseudoinverse(s, tol)?.pinv;
    let oracle_discrepancy = distance(&pinv_s, &oracle)?;
    let closed_form_discrepancy = distance(&pinv_s, &closed)?;
    let limit = residual_bound + tol.slack(td_norm);
    if oracle_discrepancy > limit {
        return Err(Error::invariant("‖Σ − S†‖ ≤ geometric tail bound", oracle_discrepancy, limit));
    }
    Ok(NeumannResult {
        pinv_s,
        terms_used,
        last_term_norm,
        ratio,
        residual_bound,
        converged,
        eps_series,
        oracle_discrepancy,
        closed_form_discrepancy,
    })
}

/// `‖(T+S)† − T†‖ ≤ ‖S‖‖T†‖²/(1 − ‖T†S‖)`, valid under the Stewart hypotheses.
pub fn error_bound_stewart(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<f64> {
    t.same_shape(s, "error_bound_stewart")?;
    let td = pseudoinverse(t, tol)?.pinv;
    let n = norms(s, &td)?;
    if !tol.strictly_below(n.tds, 1.0) {
        return Err(Error::refused("‖T†S‖ ≥ 1", n.tds));
    }
    Ok(stewart_bound_value(&n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaZeroBound {
    /// ‖T†‖²‖S‖/(1 − ‖ST†‖)
    pub bound: f64,
    /// ‖(I + ST†)⁻¹‖
    pub inverse_norm: f64,
    /// 1/(1 − ‖ST†‖)
    pub inverse_norm_bound: f64,
}

/// Error bound for surjective `T` with `‖Sx‖ ≤ λ₁‖Tx‖` (λ₂ = 0): requires
/// `N(T) ⊆ N(S)` and `‖ST†‖ < 1`. Also certifies
/// `‖(I + ST†)⁻¹‖ ≤ 1/(1 − ‖ST†‖)`.
pub fn error_bound_lambda2_zero(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<LambdaZeroBound> {
    t.same_shape(s, "error_bound_lambda2_zero")?;
    let m = t.rows();
    let tp = pseudoinverse(t, tol)?;
    if tp.rank != m {
        return Err(Error::refused("T is not surjective (rank < rows)", tp.rank as f64));
    }
    let null = check_null_inclusion(t, s, tol)?;
    if !null.holds {
        return Err(Error::refused("N(T) ⊄ N(S): no λ₁ with λ₂ = 0", null.residual));
    }
    let n = norms(s, &tp.pinv)?;
    if !tol.strictly_below(n.std, 1.0) {
        return Err(Error::refused("‖ST†‖ ≥ 1", n.std));
    }
    let op = &Matrix::identity(m) + &(s * &tp.pinv);
    let inv = inverse(&op, tol).map_err(|e| singular_to_refusal(e, "I + ST†"))?;
    let inverse_norm = spectral_norm(&inv)?;
    let inverse_norm_bound = 1.0 / (1.0 - n.std);
    if inverse_norm > inverse_norm_bound + tol.slack(inverse_norm_bound) {
        return Err(Error::invariant("‖(I+ST†)⁻¹‖ ≤ 1/(1−‖ST†‖)", inverse_norm, inverse_norm_bound));
    }
    Ok(LambdaZeroBound {
        bound: n.td * n.td * n.s / (1.0 - n.std),
        inverse_norm,
        inverse_norm_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaContinuity {
    /// |γ(T+S) − γ(T)|
    pub gap: f64,
    /// β‖S‖
    pub bound: f64,
    /// ‖T†‖ / (‖(T+S)†‖·(1 − ‖T†S‖))
    pub beta: f64,
}

/// `|γ(T+S) − γ(T)| ≤ β‖S‖` under the Stewart hypotheses.
pub fn gamma_continuity_bound(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<GammaContinuity> {
    let report = check_stewart_hypotheses(t, s, tol)?;
    if let Some((condition, value)) = report.stewart_failure(tol) {
        return Err(Error::refused(condition, value));
    }
    let tp = pseudoinverse(t, tol)?;
    let sp = pseudoinverse(&(t + s), tol)?;
    let gap = (sp.gamma - tp.gamma).abs();
    let sum_pinv_norm = sp.pinv_norm();
    let beta = if sum_pinv_norm == 0.0 {
        0.0
    } else {
        tp.pinv_norm() / (sum_pinv_norm * (1.0 - report.norm_tds))
    };
    let bound = beta * report.norm_s;
    if gap > bound + tol.slack(tp.gamma.max(sp.gamma)) {
        return Err(Error::invariant("|γ(T+S) − γ(T)| ≤ β‖S‖", gap, bound));
    }
    Ok(GammaContinuity { gap, bound, beta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DingHuangCase {
    Injective,
    Surjective,
    General,
}

impl std::str::FromStr for DingHuangCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "injective" => Ok(Self::Injective),
            "surjective" => Ok(Self::Surjective),
            "general" => Ok(Self::General),
            other => Err(Error::InvalidArgument(format!("unknown case {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DingHuangBounds {
    pub case: DingHuangCase,
    /// Bound on ‖(T+S)†‖.
    pub pinv_norm_bound: f64,
    /// Bound on ‖(T+S)† − T†‖ (injective and surjective cases only).
    pub difference_bound: Option<f64>,
    pub measured_pinv_norm: f64,
    pub measured_difference: f64,
}

/// Norm bounds for `(T+S)†` in the injective, surjective and general
/// closed-range cases.
///
/// - injective: `R(S) ⊆ R(T)`, `‖T†S‖ < 1`; bound `‖T†‖/(1 − ‖T†S‖)`.
/// - surjective: `N(T) ⊆ N(S)`, `‖ST†‖ < 1`; bound `‖T†‖/(1 − ‖ST†‖)`.
/// - general: `N(T) ⊆ N(S)`, `‖S‖‖T†‖ < 1`; bound `‖T†‖/(1 − ‖S‖‖T†‖)`.
pub fn norm_bounds_ding_huang(
    t: &Matrix,
    s: &Matrix,
    case: DingHuangCase,
    tol: &Tolerances,
) -> Result<DingHuangBounds> {
    let report = check_stewart_hypotheses(t, s, tol)?;
    let (m, n) = t.shape();
    let tp = pseudoinverse(t, tol)?;
    let td_norm = tp.pinv_norm();
    let slack = tol.slack(report.norm_s);
    let (pinv_norm_bound, difference_bound) = match case {
        DingHuangCase::Injective => {
            if tp.rank != n {
                return Err(Error::refused("injective case: T is not injective", tp.rank as f64));
            }
            if report.ttds_residual > slack {
                return Err(Error::refused("injective case: R(S) ⊄ R(T)", report.ttds_residual));
            }
            if !tol.strictly_below(report.norm_tds, 1.0) {
                return Err(Error::refused("injective case: ‖T†S‖ ≥ 1", report.norm_tds));
            }
            let q = report.norm_tds;
            (td_norm / (1.0 - q), Some(q * td_norm / (1.0 - q)))
        }
        DingHuangCase::Surjective => {
            if tp.rank != m {
                return Err(Error::refused("surjective case: T is not surjective", tp.rank as f64));
            }
            if report.stdt_residual > slack {
                return Err(Error::refused("surjective case: N(T) ⊄ N(S)", report.stdt_residual));
            }
            if !tol.strictly_below(report.norm_std, 1.0) {
                return Err(Error::refused("surjective case: ‖ST†‖ ≥ 1", report.norm_std));
            }
            let q = report.norm_std;
            (td_norm / (1.0 - q), Some(q * td_norm / (1.0 - q)))
        }
        DingHuangCase::General => {
            if report.stdt_residual > slack {
                return Err(Error::refused("general case: N(T) ⊄ N(S)", report.stdt_residual));
            }
            let q = report.norm_s * td_norm;
            if !tol.strictly_below(q, 1.0) {
                return Err(Error::refused("general case: ‖S‖‖T†‖ ≥ 1", q));
            }
            (td_norm / (1.0 - q), None)
        }
    };

    let sum = t + s;
    let sp = pseudoinverse(&sum, tol)?;
    match case {
        DingHuangCase::Injective if sp.rank != n => {
            return Err(Error::invariant("T+S injective", (n - sp.rank) as f64, 0.0))
        }
        DingHuangCase::Surjective if sp.rank != m => {
            return Err(Error::invariant("T+S surjective", (m - sp.rank) as f64, 0.0))
        }
        _ => {}
    }
    let measured_pinv_norm = sp.pinv_norm();
    let measured_difference = distance(&sp.pinv, &tp.pinv)?;
    let scale = pinv_norm_bound.max(1.0);
    if measured_pinv_norm > pinv_norm_bound + tol.slack(scale) {
        return Err(Error::invariant("‖(T+S)†‖ bound", measured_pinv_norm, pinv_norm_bound));
    }
    if let Some(db) = difference_bound {
        if measured_difference > db + tol.slack(scale) {
            return Err(Error::invariant("‖(T+S)† − T†‖ bound", measured_difference, db));
        }
    }
    Ok(DingHuangBounds {
        case,
        pinv_norm_bound,
        difference_bound,
        measured_pinv_norm,
        measured_difference,
    })
}

/// Numerical rank of `T+S`, exposed for range-preservation checks.
pub fn perturbed_rank(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<usize> {
    rank(&t.checked_add(s)?, tol)
}
