//! Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Columns of `A·V` are rotated pairwise until mutually orthogonal; the
//! column norms are then the singular values. The method computes small
//! singular values to high relative accuracy, which matters here because the
//! reduced minimum modulus is the smallest nonzero one.

use crate::error::{Error, Result};
use crate::linalg::matrix::{Matrix, C64};
use crate::linalg::subspace::complete_orthonormal;
use crate::linalg::tolerances::Tolerances;

pub const MAX_SWEEPS: usize = 80;

/// `A = U · diag(sigma) · V*` with `k = min(rows, cols)` columns in `U`, `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// Numerical rank under the crate's rank-cutoff convention.
    pub fn rank(&self, tol: &Tolerances) -> usize {
        let cutoff = tol.rank_cutoff(self.u.rows(), self.v.rows(), self.sigma_max());
        self.sigma.iter().take_while(|&&s| s > cutoff).count()
    }

    pub fn reconstruct(&self) -> Matrix {
        let k = self.sigma.len();
        let us = Matrix::from_fn(self.u.rows(), k, |i, j| self.u[(i, j)] * self.sigma[j]);
        &us * &self.v.adjoint()
    }
}

/// Thin SVD. Deterministic for identical input.
pub fn svd(a: &Matrix) -> Result<SvdFactors> {
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let f = svd_tall(&a.adjoint())?;
        Ok(SvdFactors {
            u: f.v,
            sigma: f.sigma,
            v: f.u,
        })
    }
}

/// Largest singular value; zero for empty or zero matrices.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(svd(a)?.sigma_max())
}

fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Rotates columns `p < q` of `cols` in place: with `y = conj(phase)·x_q`,
/// `x_p ← c·x_p − s·y` and `x_q ← s·x_p + c·y`.
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let (head, tail) = cols.split_at_mut(q);
    let xp = &mut head[p];
    let xq = &mut tail[0];
    let ph = phase.conj();
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let u = *a;
        let w = *b * ph;
        *a = u * c - w * s;
        *b = u * s + w * c;
    }
}

fn svd_tall(a: &Matrix) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    let mut g = a.columns();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();

    let threshold = (m.max(1) as f64) * f64::EPSILON;
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let alpha = norm_sqr(&g[p]);
                let beta = norm_sqr(&g[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&g[p], &g[q]);
                let abs_gamma = gamma.norm();
                if abs_gamma <= threshold * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let phase = gamma / abs_gamma;
                let zeta = (beta - alpha) / (2.0 * abs_gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate(&mut g, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::SvdNoConvergence { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = g.iter().map(|c| norm_sqr(c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ties in column order, so the output is deterministic.
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let tiny = sigma_max * (m.max(n) as f64) * f64::EPSILON;

    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut deficient = 0;
    for (&j, &s) in order.iter().zip(&sigma) {
        if s == 0.0 {
            deficient += 1;
            continue;
        }
        let mut col: Vec<C64> = g[j].iter().map(|z| z / s).collect();
        if s <= tiny {
            // Noise-level columns: re-orthogonalise against what we have.
            for _ in 0..2 {
                for prev in &u_cols {
                    let h = dot(prev, &col);
                    for (c, p) in col.iter_mut().zip(prev) {
                        *c -= h * p;
                    }
                }
            }
            let nrm = norm_sqr(&col).sqrt();
            if nrm < 0.5 {
                deficient += 1;
                continue;
            }
            col.iter_mut().for_each(|z| *z /= nrm);
        }
        u_cols.push(col);
    }
    let mut u = Matrix::from_columns(m, &u_cols);
    if deficient > 0 {
        // Exactly-zero singular values: any orthonormal completion is valid.
        let extra = complete_orthonormal(&u, deficient);
        let mut all = u.columns();
        all.extend(extra.columns());
        u = Matrix::from_columns(m, &all);
    }
    // Columns of `u` for zero sigma were appended at the end, matching the
    // sorted order because zero sigmas sort last.
    let v_sorted: Vec<Vec<C64>> = order.iter().map(|&j| v[j].clone()).collect();
    Ok(SvdFactors {
        u,
        sigma,
        v: Matrix::from_columns(n, &v_sorted),
    })
}
