//! Quantified checks of the perturbation hypotheses for a pair `(T, S)`.
//!
//! Each inclusion test is computed twice: once from an SVD basis and once from
//! the algebraic identity that characterises it. The two must agree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{random_unit_vector, rng_from_seed};
use crate::linalg::{
    distance, null_space_basis, projector, spectral_norm, svd, Matrix, Tolerances, C64,
};
use crate::pinv::{pseudoinverse, PinvResult};

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_SAMPLE_SEED: u64 = 0x5EED_0F5A_3B1E;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclusionCheck {
    pub holds: bool,
    /// Algebraic residual (`‖TT†S − S‖` or `‖ST†T − S‖`).
    pub residual: f64,
    /// Basis residual (`‖(I − P_R(T))S‖` or `‖S·Z_T‖`).
    pub projection_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub norm_tds: f64,
    pub norm_std: f64,
    pub norm_s: f64,
    pub gamma_t: f64,
    pub range_incl_residual: f64,
    pub null_incl_residual: f64,
    pub ttds_residual: f64,
    pub stdt_residual: f64,
    /// Smallest λ₁ with `‖Sx‖ ≤ λ₁‖Tx‖` for all x, if one exists.
    pub lambda1_min: Option<f64>,
    pub verdict_stewart: bool,
    pub verdict_norm_gamma: bool,
    pub verdict_relative: bool,
}

impl HypothesisReport {
    /// First failing Stewart condition, phrased for a refusal message.
    pub fn stewart_failure(&self, tol: &Tolerances) -> Option<(String, f64)> {
        let slack = tol.slack(self.norm_s);
        if !tol.strictly_below(self.norm_tds, 1.0) {
            Some(("‖T†S‖ ≥ 1".into(), self.norm_tds))
        } else if self.ttds_residual > slack {
            Some(("TT†S ≠ S (R(S) ⊄ R(T))".into(), self.ttds_residual))
        } else if self.stdt_residual > slack {
            Some(("ST†T ≠ S (N(T) ⊄ N(S))".into(), self.stdt_residual))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeBoundCheck {
    pub holds: bool,
    /// min over probed unit x of `λ₁‖Tx‖ + λ₂‖(S+T)x‖ − ‖Sx‖`.
    pub worst_slack: f64,
    pub directions: usize,
}

fn require_same_shape(t: &Matrix, s: &Matrix, op: &'static str) -> Result<()> {
    t.same_shape(s, op)
}

/// Shared per-pair quantities.
pub(crate) struct PairAnalysis {
    pub t_pinv: PinvResult,
    pub norm_s: f64,
}

impl PairAnalysis {
    pub fn new(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<Self> {
        Ok(Self {
            t_pinv: pseudoinverse(t, tol)?,
            norm_s: spectral_norm(s)?,
        })
    }

    fn range_inclusion(&self, t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<InclusionCheck> {
        let (m, _) = t.shape();
        let complement = &Matrix::identity(m) - &self.t_pinv.proj_range;
        let projection_residual = spectral_norm(&(&complement * s))?;
        let residual = distance(&(&(t * &self.t_pinv.pinv) * s), s)?;
        self.combine("R(S) ⊆ R(T)", residual, projection_residual, tol)
    }

    fn null_inclusion(&self, t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<InclusionCheck> {
        let z = null_space_basis(t, tol)?;
        let projection_residual = if z.cols() == 0 { 0.0 } else { spectral_norm(&(s * &z))? };
        let residual = distance(&(&(s * &self.t_pinv.pinv) * t), s)?;
        self.combine("N(T) ⊆ N(S)", residual, projection_residual, tol)
    }

    fn combine(
        &self,
        name: &str,
        residual: f64,
        projection_residual: f64,
        tol: &Tolerances,
    ) -> Result<InclusionCheck> {
        let slack = tol.slack(self.norm_s);
        let by_algebra = residual <= slack;
        let by_basis = projection_residual <= slack;
        if by_algebra != by_basis {
            return Err(Error::invariant(
                format!("{name}: basis and algebraic verdicts disagree (basis residual {projection_residual:e})"),
                residual,
                slack,
            ));
        }
        Ok(InclusionCheck {
            holds: by_algebra,
            residual,
            projection_residual,
        })
    }
}

/// `TT†S = S ⇔ R(S) ⊆ R(T)`.
pub fn check_range_inclusion(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<InclusionCheck> {
    require_same_shape(t, s, "check_range_inclusion")?;
    PairAnalysis::new(t, s, tol)?.range_inclusion(t, s, tol)
}

/// `ST†T = S ⇔ N(T) ⊆ N(S)`.
pub fn check_null_inclusion(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<InclusionCheck> {
    require_same_shape(t, s, "check_null_inclusion")?;
    PairAnalysis::new(t, s, tol)?.null_inclusion(t, s, tol)
}

/// Full hypothesis report for the pair.
pub fn check_stewart_hypotheses(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<HypothesisReport> {
    require_same_shape(t, s, "check_stewart_hypotheses")?;
    let pa = PairAnalysis::new(t, s, tol)?;
    let td = &pa.t_pinv.pinv;
    let range = pa.range_inclusion(t, s, tol)?;
    let null = pa.null_inclusion(t, s, tol)?;
    let norm_tds = spectral_norm(&(td * s))?;
    let norm_std = spectral_norm(&(s * td))?;
    let gamma_t = pa.t_pinv.gamma;
    let lambda1_min = null.holds.then_some(norm_std);

    let slack = tol.slack(pa.norm_s);
    let verdict_stewart =
        tol.strictly_below(norm_tds, 1.0) && range.residual <= slack && null.residual <= slack;
    let verdict_norm_gamma = pa.norm_s < gamma_t * (1.0 - tol.margin_strict) && null.projection_residual <= slack;
    let verdict_relative = lambda1_min.is_some_and(|l| tol.strictly_below(l, 1.0));
    Ok(HypothesisReport {
        norm_tds,
        norm_std,
        norm_s: pa.norm_s,
        gamma_t,
        range_incl_residual: range.projection_residual,
        null_incl_residual: null.projection_residual,
        ttds_residual: range.residual,
        stdt_residual: null.residual,
        lambda1_min,
        verdict_stewart,
        verdict_norm_gamma,
        verdict_relative,
    })
}

/// Minimal λ₁ with `‖Sx‖ ≤ λ₁‖Tx‖` for all x (λ₂ = 0), namely `‖ST†‖`.
/// Absent when some x has `Tx = 0` but `Sx ≠ 0`.
pub fn estimate_lambda1(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<Option<f64>> {
    require_same_shape(t, s, "estimate_lambda1")?;
    let pa = PairAnalysis::new(t, s, tol)?;
    if !pa.null_inclusion(t, s, tol)?.holds {
        return Ok(None);
    }
    Ok(Some(spectral_norm(&(s * &pa.t_pinv.pinv))?))
}

/// Probes `‖Sx‖ ≤ λ₁‖Tx‖ + λ₂‖(S+T)x‖` on `samples` random unit vectors plus
/// structured directions; see [`check_relative_bound_seeded`].
pub fn check_relative_bound(
    t: &Matrix,
    s: &Matrix,
    lambda1: f64,
    lambda2: f64,
    samples: usize,
    tol: &Tolerances,
) -> Result<RelativeBoundCheck> {
    check_relative_bound_seeded(t, s, lambda1, lambda2, samples, DEFAULT_SAMPLE_SEED, tol)
}

/// Structured directions are the right singular vectors (row space and null
/// space) of `T`, `S` and `T+S`, and the preimages `T†w` of the right singular
/// vectors `w` of `ST†`, where the λ₂ = 0 ratio `‖Sx‖/‖Tx‖` peaks.
pub fn check_relative_bound_seeded(
    t: &Matrix,
    s: &Matrix,
    lambda1: f64,
    lambda2: f64,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<RelativeBoundCheck> {
    require_same_shape(t, s, "check_relative_bound")?;
    if lambda1.is_nan() || lambda1 >= 1.0 {
        return Err(Error::InvalidArgument(format!("lambda1 must be < 1, got {lambda1}")));
    }
    if !lambda2.is_finite() || lambda2 <= -1.0 {
        return Err(Error::InvalidArgument(format!("lambda2 must be finite and > -1, got {lambda2}")));
    }
    let n = t.cols();
    let sum = t + s;
    let mut directions: Vec<Vec<C64>> = Vec::new();
    for op in [t, s, &sum] {
        directions.extend(right_singular_directions(op)?);
    }
    let td = pseudoinverse(t, tol)?.pinv;
    let std = s * &td;
    if !std.is_empty() {
        for w in svd(&std)?.v.columns() {
            let x = td.mul_vec(&w)?;
            let nrm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nrm > 0.0 {
                directions.push(x.into_iter().map(|z| z / nrm).collect());
            }
        }
    }
    let mut rng = rng_from_seed(seed);
    directions.extend((0..samples).map(|_| random_unit_vector(n, &mut rng)));

    let vnorm = |v: Vec<C64>| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut worst = f64::INFINITY;
    for x in &directions {
        let tx = vnorm(t.mul_vec(x)?);
        let sx = vnorm(s.mul_vec(x)?);
        let px = vnorm(sum.mul_vec(x)?);
        worst = worst.min(lambda1 * tx + lambda2 * px - sx);
    }
    if directions.is_empty() {
        worst = 0.0;
    }
    let scale = spectral_norm(t)?.max(spectral_norm(s)?);
    Ok(RelativeBoundCheck {
        holds: worst >= -tol.slack(scale),
        worst_slack: worst,
        directions: directions.len(),
    })
}

/// All right singular vectors of `a`, completed to a basis of the domain.
fn right_singular_directions(a: &Matrix) -> Result<Vec<Vec<C64>>> {
    let n = a.cols();
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.rows() >= n {
        return Ok(svd(a)?.v.columns());
    }
    let v = svd(a)?.v;
    let mut cols = v.columns();
    cols.extend(crate::linalg::complete_orthonormal(&v, n - v.cols()).columns());
    Ok(cols)
}

/// Projector onto `N(T)` from an SVD null basis.
pub fn null_projector(t: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    Ok(projector(&null_space_basis(t, tol)?))
}
