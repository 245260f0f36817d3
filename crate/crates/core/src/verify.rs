//! Randomized invariant suite behind the `verify` command.
//!
//! Each trial draws its own seed from the master seed by stream index, so the
//! outcome does not depend on how trials are scheduled across threads.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{
    adversarial_pair, commute_identity_check, random_contraction, random_operator,
    random_relative_perturbation, random_spec, relative_perturbation_with, resolvent, resolvent_t,
    rng_from_seed, s_alpha, AdversarialKind, Rng64,
};
use crate::linalg::{distance, null_space_basis, principal_angle_gap, rank, spectral_norm, Matrix, Tolerances};
use crate::perturb::{
    error_bound_stewart, gamma_continuity_bound, neumann_pinv, update_relative_surjective, update_stewart,
    update_stewart_right, NeumannOptions,
};
use crate::pinv::{pseudoinverse, verify_mp_axioms};
use crate::reverse_order::reverse_order_pinv;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
    pub max_dim: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            max_dim: 8,
        }
    }
}

/// Aggregate over all trials for one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub runs: usize,
    pub failures: usize,
    /// Largest measured/allowed ratio seen; a pass has ratio ≤ 1.
    pub worst_ratio: f64,
    pub first_failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub config: VerifyConfig,
    pub checks: Vec<CheckSummary>,
    pub all_passed: bool,
}

/// One check in one trial: `Ok(ratio)` with ratio ≤ 1 on success.
type Outcome = (&'static str, Result<f64>);

pub fn trial_seed(master: u64, index: usize) -> u64 {
    let mut rng = rng_from_seed(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Runs the suite; with `jobs` the trials are spread over a thread pool of
/// that size.
pub fn run_verify(config: &VerifyConfig, jobs: Option<usize>, tol: &Tolerances) -> Result<VerifySummary> {
    if config.max_dim == 0 {
        return Err(Error::InvalidArgument("max_dim must be positive".into()));
    }
    let run = |i: usize| run_trial(trial_seed(config.seed, i), config.max_dim, tol);
    let per_trial: Vec<Vec<Outcome>> = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| (0..config.trials).into_par_iter().map(run).collect()),
        None => (0..config.trials).map(run).collect(),
    };

    let mut checks: Vec<CheckSummary> = Vec::new();
    for (trial, outcomes) in per_trial.into_iter().enumerate() {
        for (name, outcome) in outcomes {
            let idx = match checks.iter().position(|c| c.name == name) {
                Some(i) => i,
                None => {
                    checks.push(CheckSummary {
                        name: name.to_string(),
                        runs: 0,
                        failures: 0,
                        worst_ratio: 0.0,
                        first_failure: None,
                    });
                    checks.len() - 1
                }
            };
            let c = &mut checks[idx];
            c.runs += 1;
            let failure = match outcome {
                Ok(ratio) => {
                    c.worst_ratio = c.worst_ratio.max(ratio);
                    (ratio > 1.0 || ratio.is_nan()).then(|| format!("ratio {ratio:e}"))
                }
                Err(e) => Some(e.to_string()),
            };
            if let Some(msg) = failure {
                c.failures += 1;
                c.first_failure.get_or_insert(format!("trial {trial}: {msg}"));
            }
        }
    }
    let all_passed = checks.iter().all(|c| c.failures == 0);
    Ok(VerifySummary {
        config: *config,
        checks,
        all_passed,
    })
}

fn ratio(measured: f64, allowed: f64) -> f64 {
    if allowed > 0.0 {
        measured / allowed
    } else if measured == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn dims(rng: &mut Rng64, max_dim: usize) -> (usize, usize) {
    (rng.random_range(1..=max_dim), rng.random_range(1..=max_dim))
}

fn run_trial(seed: u64, max_dim: usize, tol: &Tolerances) -> Vec<Outcome> {
    let mut rng = rng_from_seed(seed);
    let mut out: Vec<Outcome> = Vec::new();

    let (m, n) = dims(&mut rng, max_dim);
    let r = rng.random_range(0..=m.min(n));
    let t = random_operator(&random_spec(m, n, r, &mut rng));
    let t = match t {
        Ok(t) => t,
        Err(e) => return vec![("generate", Err(e))],
    };
    out.push(("mp_axioms", check_axioms(&t, tol)));
    if r > 0 {
        out.push(("gamma_identity", check_gamma_identity(&t, tol)));
    }
    out.push(("closure_relations", check_closure(&t, tol)));
    if r > 0 {
        let alpha_unit = rng.random_range(0.01..0.99);
        out.push(("stewart_update", check_stewart(&t, alpha_unit, tol)));
        out.push(("gamma_continuity", check_continuity(&t, alpha_unit, tol)));
    }

    // Surjective operator for the relative-bound and Neumann checks.
    let rows = rng.random_range(1..=max_dim);
    let cols = rng.random_range(rows..=max_dim.max(rows));
    match random_operator(&random_spec(rows, cols, rows, &mut rng)) {
        Ok(ts) => {
            let lambda1 = rng.random_range(0.0..=0.9);
            out.push(("relative_update", check_relative(&ts, lambda1, rng.random(), tol)));
            let target = rng.random_range(0.1..=0.9);
            let w = random_contraction(rows, &mut rng);
            out.push(("neumann_series", check_neumann(&ts, target, &w, tol)));
        }
        Err(e) => out.push(("generate", Err(e))),
    }

    let k = rng.random_range(1..=max_dim);
    let fr = rng.random_range(k..=max_dim.max(k));
    let gc = rng.random_range(k..=max_dim.max(k));
    let factors = random_operator(&random_spec(fr, k, k, &mut rng))
        .and_then(|f| Ok((f, random_operator(&random_spec(k, gc, k, &mut rng))?)));
    out.push(("reverse_order", factors.and_then(|(f, g)| check_reverse_order(&f, &g, tol))));

    let kind = match rng.random_range(0..3) {
        0 => AdversarialKind::RangeViolation,
        1 => AdversarialKind::NullViolation,
        _ => AdversarialKind::NormViolation,
    };
    out.push(("adversarial_refusal", check_adversarial(kind, rng.random(), tol)));
    out
}

fn check_axioms(t: &Matrix, tol: &Tolerances) -> Result<f64> {
    let p = pseudoinverse(t, tol)?;
    let report = verify_mp_axioms(t, &p.pinv, tol)?;
    let scale = 1f64.max(p.norm()).max(p.pinv_norm());
    let mut worst = ratio(report.max_residual(), 1e-9 * scale);
    let pp = pseudoinverse(&p.pinv, tol)?.pinv;
    worst = worst.max(ratio(distance(&pp, t)?, 1e-9 * scale));
    let adj = pseudoinverse(&t.adjoint(), tol)?.pinv;
    worst = worst.max(ratio(distance(&adj, &p.pinv.adjoint())?, 1e-9 * scale));
    Ok(worst)
}

fn check_gamma_identity(t: &Matrix, tol: &Tolerances) -> Result<f64> {
    let p = pseudoinverse(t, tol)?;
    let product = spectral_norm(&p.pinv)? * p.gamma;
    Ok(ratio((product - 1.0).abs(), 1e-10))
}

fn check_closure(t: &Matrix, tol: &Tolerances) -> Result<f64> {
    let rt = spectral_norm(&resolvent_t(t, tol)?)?;
    let rs = spectral_norm(&resolvent(t, tol)?)?;
    commute_identity_check(t, tol)?;
    let adj_gap = distance(
        &resolvent_t(t, tol)?.adjoint(),
        &resolvent_t(&t.adjoint(), tol)?,
    )?;
    Ok((rt / (0.5 + 1e-12))
        .max(rs / (1.0 + 1e-12))
        .max(ratio(adj_gap, tol.slack(1.0))))
}

fn check_stewart(t: &Matrix, alpha_unit: f64, tol: &Tolerances) -> Result<f64> {
    let p = pseudoinverse(t, tol)?;
    let alpha = alpha_unit * 2.0 / p.pinv_norm();
    let s = s_alpha(t, alpha, tol)?;
    let left = update_stewart(t, &s, tol)?;
    let right = update_stewart_right(t, &s, tol)?;
    let mut worst = ratio(left.oracle_discrepancy, 1e-8 * p.pinv_norm());
    worst = worst.max(ratio(distance(&left.pinv_updated, &right.pinv_updated)?, 1e-9 * p.pinv_norm().max(1.0)));
    let sum = t + &s;
    if rank(&sum, tol)? != p.rank {
        return Err(Error::invariant("rank(T+S) = rank(T)", rank(&sum, tol)? as f64, p.rank as f64));
    }
    let gap = principal_angle_gap(&null_space_basis(t, tol)?, &null_space_basis(&sum, tol)?)?;
    worst = worst.max(ratio(gap, 1e-8));
    let bound = error_bound_stewart(t, &s, tol)?;
    Ok(worst.max(ratio(left.change_from_t, bound + 1e-10)))
}

fn check_continuity(t: &Matrix, alpha_unit: f64, tol: &Tolerances) -> Result<f64> {
    let p = pseudoinverse(t, tol)?;
    let s = s_alpha(t, alpha_unit * 2.0 / p.pinv_norm(), tol)?;
    let mut worst: f64 = 0.0;
    for k in 1..=5 {
        let g = gamma_continuity_bound(t, &s.scale(1.0 / k as f64), tol)?;
        worst = worst.max(ratio(g.gap, g.bound + 1e-10));
    }
    Ok(worst)
}

fn check_relative(t: &Matrix, lambda1: f64, seed: u64, tol: &Tolerances) -> Result<f64> {
    let s = random_relative_perturbation(t, lambda1, seed)?;
    let r = update_relative_surjective(t, &s, lambda1, 0.0, tol)?;
    let p = pseudoinverse(t, tol)?;
    let sum = pseudoinverse(&(t + &s), tol)?;
    let mut worst = ratio(r.oracle_discrepancy, 1e-8 * p.pinv_norm().max(1.0));
    let growth = p.pinv_norm() / (1.0 - lambda1);
    worst = worst.max(ratio(sum.pinv_norm(), growth * (1.0 + 1e-10)));
    // γ(T+S) ≥ (1 − λ₁)·γ(T)
    worst = worst.max(ratio((1.0 - lambda1) * p.gamma, sum.gamma * (1.0 + 1e-10)));
    if let Some(bound) = r.bound_apriori {
        worst = worst.max(ratio(r.change_from_t, bound + 1e-10));
    }
    Ok(worst)
}

fn check_neumann(t: &Matrix, target: f64, w: &Matrix, tol: &Tolerances) -> Result<f64> {
    let w = w.scale(1.0 / spectral_norm(w)?);
    let s = t + &relative_perturbation_with(t, target, &w)?;
    let res = neumann_pinv(t, &s, &NeumannOptions::default(), tol)?;
    let td_norm = pseudoinverse(t, tol)?.pinv_norm();
    let worst = ratio(res.oracle_discrepancy, res.residual_bound + 1e-10);
    let limit = ((res.eps_series / td_norm).ln() / res.ratio.ln()).ceil() + 2.0;
    Ok(worst.max(ratio(res.terms_used as f64, limit)))
}

fn check_reverse_order(f: &Matrix, g: &Matrix, tol: &Tolerances) -> Result<f64> {
    let r = reverse_order_pinv(f, g, tol)?;
    let scale = spectral_norm(&r.pinv_oracle)?.max(1.0);
    Ok(ratio(r.max_pairwise_discrepancy, 1e-9 * scale))
}

fn check_adversarial(kind: AdversarialKind, seed: u64, tol: &Tolerances) -> Result<f64> {
    let (t, s) = adversarial_pair(kind, seed)?;
    let expected = match kind {
        AdversarialKind::RangeViolation => "TT†S",
        AdversarialKind::NullViolation => "ST†T",
        AdversarialKind::NormViolation => "‖T†S‖",
    };
    match update_stewart(&t, &s, tol) {
        Err(Error::Refused { condition, .. }) if condition.starts_with(expected) => Ok(0.0),
        Err(e) => Err(e),
        Ok(_) => Err(Error::invariant(format!("{kind:?} pair refused"), 1.0, 0.0)),
    }
}
