//! Operators and perturbations built to satisfy (or to violate) a chosen set
//! of hypotheses. All randomness flows from an explicit seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    complete_orthonormal, distance, null_space_basis, orthonormal_range_basis, projector,
    solve_right, solve_square, spectral_norm, Matrix, Tolerances, C64,
};
use crate::pinv::pseudoinverse;

pub type Rng64 = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape and spectrum requested from [`random_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// Smallest nonzero singular value.
    pub gamma_target: f64,
    /// Largest singular value.
    pub norm_target: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("{msg}: {self:?}")));
        if self.rows == 0 || self.cols == 0 {
            return bad("rows and cols must be positive");
        }
        if self.rank > self.rows.min(self.cols) {
            return bad("rank exceeds min(rows, cols)");
        }
        if self.rank == 0 {
            return Ok(());
        }
        if !(self.gamma_target.is_finite() && self.gamma_target > 0.0 && self.norm_target.is_finite()) {
            return bad("gamma_target and norm_target must be finite and positive");
        }
        if self.gamma_target > self.norm_target {
            return bad("gamma_target exceeds norm_target");
        }
        if self.rank == 1 && self.gamma_target != self.norm_target {
            return bad("a rank-1 operator has gamma equal to its norm");
        }
        Ok(())
    }
}

pub fn complex_gaussian(rng: &mut Rng64) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Unit vector with independent complex Gaussian components, normalised.
pub fn random_unit_vector(n: usize, rng: &mut Rng64) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-8 {
            return v.into_iter().map(|z| z / nrm).collect();
        }
    }
}

/// Unitary from orthonormalising a complex Gaussian matrix (modified
/// Gram-Schmidt, two passes).
pub fn random_unitary(n: usize, rng: &mut Rng64) -> Matrix {
    let g = gaussian_matrix(n, n, rng);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(n);
    for mut col in g.columns() {
        for _ in 0..2 {
            for prev in &q {
                let h: C64 = prev.iter().zip(&col).map(|(a, b)| a.conj() * b).sum();
                for (c, p) in col.iter_mut().zip(prev) {
                    *c -= h * p;
                }
            }
        }
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm < 1e-10 {
            // Gaussian columns are dependent with probability zero.
            let patch = complete_orthonormal(&Matrix::from_columns(n, &q), 1);
            q.push(patch.column(0));
        } else {
            q.push(col.into_iter().map(|z| z / nrm).collect());
        }
    }
    Matrix::from_columns(n, &q)
}

/// `U·diag(d)·V*` with `dᵢ` uniform in `[0, 1]`, so `‖W‖ ≤ 1`.
pub fn random_contraction(n: usize, rng: &mut Rng64) -> Matrix {
    let u = random_unitary(n, rng);
    let v = random_unitary(n, rng);
    let d: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let ud = Matrix::from_fn(n, n, |i, j| u[(i, j)] * d[j]);
    &ud * &v.adjoint()
}

/// Matrix with exactly the requested rank and extreme nonzero singular values.
pub fn random_operator(spec: &GenSpec) -> Result<Matrix> {
    spec.validate()?;
    let GenSpec { rows, cols, rank, .. } = *spec;
    if rank == 0 {
        return Ok(Matrix::zeros(rows, cols));
    }
    let mut rng = rng_from_seed(spec.seed);
    let u = random_unitary(rows, &mut rng).select_columns(0..rank);
    let v = random_unitary(cols, &mut rng).select_columns(0..rank);
    let mut sigma = vec![spec.norm_target; rank];
    sigma[rank - 1] = spec.gamma_target;
    for s in sigma.iter_mut().take(rank - 1).skip(1) {
        *s = rng.random_range(spec.gamma_target..=spec.norm_target);
    }
    sigma[1..rank.saturating_sub(1).max(1)].sort_by(|a, b| b.total_cmp(a));
    let us = Matrix::from_fn(rows, rank, |i, j| u[(i, j)] * sigma[j]);
    Ok(&us * &v.adjoint())
}

/// Spectrum used for randomized batches: `‖T‖` uniform in `[0.5, 3]` and
/// `‖T‖/γ(T)` log-uniform in `[1, 100]`. The seed for the operator itself is
/// drawn from `rng`.
pub fn random_spec(rows: usize, cols: usize, rank: usize, rng: &mut Rng64) -> GenSpec {
    let norm_target = rng.random_range(0.5..=3.0);
    let condition = if rank <= 1 { 1.0 } else { 100f64.powf(rng.random::<f64>()) };
    GenSpec {
        rows,
        cols,
        rank,
        gamma_target: norm_target / condition,
        norm_target,
        seed: rng.random(),
    }
}

/// `T(I + T*T)⁻¹`, via the Hermitian solve `(I + T*T)·Y = T*`.
pub fn resolvent_t(t: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let n = t.cols();
    let t_adj = t.adjoint();
    let m = &Matrix::identity(n) + &(&t_adj * t);
    Ok(solve_square(&m, &t_adj, tol)?.adjoint())
}

/// `S_α = α·T·(I + T*T)⁻¹`, admissible for `0 < α < 2/‖T†‖`.
///
/// Such an `S_α` satisfies all three hypotheses of the Stewart-type update
/// against `T` and has `‖S_α‖ ≤ α/2`.
pub fn s_alpha(t: &Matrix, alpha: f64, tol: &Tolerances) -> Result<Matrix> {
    let pinv_norm = pseudoinverse(t, tol)?.pinv_norm();
    let upper = if pinv_norm == 0.0 { f64::INFINITY } else { 2.0 / pinv_norm };
    if !(alpha > 0.0 && alpha < upper) {
        return Err(Error::refused(
            format!("alpha must lie in (0, 2/‖T†‖) = (0, {upper:e})"),
            alpha,
        ));
    }
    Ok(resolvent_t(t, tol)?.scale(alpha))
}

/// `‖(I + TT*)⁻¹T − T(I + T*T)⁻¹‖`, asserted to vanish within tolerance.
pub fn commute_identity_check(t: &Matrix, tol: &Tolerances) -> Result<f64> {
    let m = t.rows();
    let left_op = &Matrix::identity(m) + &(t * &t.adjoint());
    let left = solve_square(&left_op, t, tol)?;
    let right = resolvent_t(t, tol)?;
    let gap = distance(&left, &right)?;
    let limit = tol.slack(spectral_norm(t)?.max(1.0));
    if gap > limit {
        return Err(Error::invariant("(I+TT*)⁻¹T = T(I+T*T)⁻¹", gap, limit));
    }
    Ok(gap)
}

/// `(I + T*T)⁻¹`, for checks of the closure relations.
pub fn resolvent(t: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let n = t.cols();
    let m = &Matrix::identity(n) + &(&t.adjoint() * t);
    solve_right(&Matrix::identity(n), &m, tol)
}

/// `S = λ₁·W·T` for a random contraction `W`; then `‖Sx‖ ≤ λ₁‖Tx‖` for all x.
pub fn random_relative_perturbation(t: &Matrix, lambda1: f64, seed: u64) -> Result<Matrix> {
    let mut rng = rng_from_seed(seed);
    let w = random_contraction(t.rows(), &mut rng);
    relative_perturbation_with(t, lambda1, &w)
}

/// `S = λ₁·W·T` for a caller-supplied `W` with `‖W‖ ≤ 1`.
pub fn relative_perturbation_with(t: &Matrix, lambda1: f64, w: &Matrix) -> Result<Matrix> {
    if !(0.0..1.0).contains(&lambda1) {
        return Err(Error::refused("lambda1 must lie in [0, 1)", lambda1));
    }
    if w.shape() != (t.rows(), t.rows()) {
        return Err(Error::DimensionMismatch {
            op: "relative_perturbation_with",
            left: t.shape(),
            right: w.shape(),
        });
    }
    let wn = spectral_norm(w)?;
    if wn > 1.0 + 1e-12 {
        return Err(Error::refused("W must be a contraction", wn));
    }
    Ok((w * t).scale(lambda1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversarialKind {
    RangeViolation,
    NullViolation,
    NormViolation,
}

impl std::str::FromStr for AdversarialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "range" | "range_violation" => Ok(Self::RangeViolation),
            "null" | "null_violation" => Ok(Self::NullViolation),
            "norm" | "norm_violation" => Ok(Self::NormViolation),
            other => Err(Error::InvalidArgument(format!("unknown adversarial kind {other:?}"))),
        }
    }
}

/// `(T, S)` violating exactly the named Stewart hypothesis.
///
/// `T` is square, rank-deficient by one, with well-separated spectrum.
/// - range: `S = (I − P_R(T))·X·P_{N(T)^⊥}`, so `T†S = 0` and `N(T) ⊆ N(S)`.
/// - null: `S = P_R(T)·X·P_{N(T)}` scaled to `‖T†S‖ = 1/2`.
/// - norm: `S = P_R(T)·X·P_{N(T)^⊥}` scaled to `‖T†S‖ = 2`.
pub fn adversarial_pair(kind: AdversarialKind, seed: u64) -> Result<(Matrix, Matrix)> {
    let tol = Tolerances::default();
    let mut rng = rng_from_seed(seed ^ 0xAD7E_5A1A_0000_0000);
    let n = rng.random_range(2..=5usize);
    let t = random_operator(&GenSpec {
        rows: n,
        cols: n,
        rank: n - 1,
        gamma_target: 0.5,
        norm_target: if n == 2 { 0.5 } else { 2.0 },
        seed: rng.random(),
    })?;
    let x = gaussian_matrix(n, n, &mut rng);
    let p_range = projector(&orthonormal_range_basis(&t, &tol)?);
    let p_null = projector(&null_space_basis(&t, &tol)?);
    let p_row = &Matrix::identity(n) - &p_null;
    let td = pseudoinverse(&t, &tol)?.pinv;
    let scaled_to = |s: Matrix, target: f64| -> Result<Matrix> {
        let k = spectral_norm(&(&td * &s))?;
        Ok(s.scale(target / k))
    };
    let s = match kind {
        AdversarialKind::RangeViolation => {
            let s = &(&(&Matrix::identity(n) - &p_range) * &x) * &p_row;
            let k = spectral_norm(&s)?;
            s.scale(0.5 / k)
        }
        AdversarialKind::NullViolation => scaled_to(&(&p_range * &x) * &p_null, 0.5)?,
        AdversarialKind::NormViolation => scaled_to(&(&p_range * &x) * &p_row, 2.0)?,
    };
    Ok((t, s))
}
