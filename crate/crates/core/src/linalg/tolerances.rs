use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical slack used by every certificate in the crate.
///
/// Identities that hold exactly in exact arithmetic are accepted when
/// `‖A − B‖ ≤ eq_abs + eq_rel·scale`. Strict inequalities such as
/// `‖T†S‖ < 1` are accepted only below `1 − margin_strict`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// σᵢ counts as nonzero iff σᵢ > rank_rel · max(rows, cols) · σ_max.
    pub rank_rel: f64,
    pub eq_abs: f64,
    pub eq_rel: f64,
    pub margin_strict: f64,
}

/// 64 ulps of 1.0.
pub const DEFAULT_RANK_REL: f64 = 64.0 * f64::EPSILON;
pub const DEFAULT_EQ_ABS: f64 = 1e-10;
pub const DEFAULT_EQ_REL: f64 = 1e-10;
pub const DEFAULT_MARGIN_STRICT: f64 = 1e-8;

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_rel: DEFAULT_RANK_REL,
            eq_abs: DEFAULT_EQ_ABS,
            eq_rel: DEFAULT_EQ_REL,
            margin_strict: DEFAULT_MARGIN_STRICT,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.rank_rel, self.eq_abs, self.eq_rel, self.margin_strict];
        if all.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be finite and strictly positive: {self:?}"
            )));
        }
        if self.rank_rel >= 1.0 || self.margin_strict >= 1.0 {
            return Err(Error::InvalidArgument(
                "rank_rel and margin_strict must be < 1".into(),
            ));
        }
        Ok(())
    }

    /// Singular values at or below this value are treated as zero.
    pub fn rank_cutoff(&self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        self.rank_rel * rows.max(cols) as f64 * sigma_max
    }

    /// Allowed deviation for an identity whose sides have magnitude `scale`.
    pub fn slack(&self, scale: f64) -> f64 {
        self.eq_abs + self.eq_rel * scale
    }

    pub fn within(&self, residual: f64, scale: f64) -> bool {
        residual <= self.slack(scale)
    }

    /// `value < bound` with the strictness margin applied.
    pub fn strictly_below(&self, value: f64, bound: f64) -> bool {
        value < bound * (1.0 - self.margin_strict)
    }
}
