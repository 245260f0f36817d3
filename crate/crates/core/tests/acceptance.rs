//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails or exceeds its 60 s budget.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use pinvpert::generators::{
    adversarial_pair, random_contraction, random_operator, random_relative_perturbation, random_spec,
    relative_perturbation_with, rng_from_seed, s_alpha, AdversarialKind, GenSpec, Rng64,
};
use pinvpert::linalg::{distance, null_space_basis, principal_angle_gap, rank, spectral_norm};
use pinvpert::matrix_market::{write_matrix, MtxLayout};
use pinvpert::perturb::{
    error_bound_lambda2_zero, error_bound_stewart, gamma_continuity_bound, neumann_pinv,
    update_relative_surjective, update_stewart, update_stewart_right, NeumannOptions, NeumannPartialSums,
};
use pinvpert::pinv::{pseudoinverse, verify_mp_axioms};
use pinvpert::report::Report;
use pinvpert::reverse_order::{counterexample_pair, reverse_order_gap, reverse_order_pinv};
use pinvpert::{Error, Matrix, Tolerances};

const BUDGET: Duration = Duration::from_secs(60);

type Criterion = fn() -> Result<String, String>;

fn main() {
    let criteria: [(u32, &str, Criterion); 10] = [
        (1, "Moore-Penrose axiom suite", criterion_1),
        (2, "gamma identity ‖T†‖·γ(T) = 1", criterion_2),
        (3, "Stewart update oracle equivalence", criterion_3),
        (4, "Stewart error-bound domination", criterion_4),
        (5, "relative-bound surjective update", criterion_5),
        (6, "Neumann series truncation", criterion_6),
        (7, "reverse-order law", criterion_7),
        (8, "gamma continuity", criterion_8),
        (9, "inequality direction and update form regressions", criterion_9),
        (10, "CLI contract", criterion_10),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > BUDGET => Err(format!("{detail}; exceeded {BUDGET:?}")),
            other => other,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] criterion {id:>2}: {name} ({:.2}s) {detail}", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: Error) -> String {
    e.to_string()
}

/// Operator of random shape up to `max_dim` and rank at least `min_rank`.
fn random_t(rng: &mut Rng64, max_dim: usize, min_rank: usize) -> Matrix {
    let m = rng.random_range(min_rank.max(1)..=max_dim);
    let n = rng.random_range(min_rank.max(1)..=max_dim);
    let r = rng.random_range(min_rank..=m.min(n));
    random_operator(&random_spec(m, n, r, rng)).expect("valid spec")
}

/// Well-conditioned operator: `‖T‖ ∈ [0.5, 2]`, `‖T‖/γ(T) ≤ 10`.
fn well_conditioned(rows: usize, cols: usize, rank: usize, rng: &mut Rng64) -> Matrix {
    let norm = rng.random_range(0.5..=2.0);
    let gamma = if rank == 1 { norm } else { norm / rng.random_range(1.0..=10.0) };
    random_operator(&GenSpec {
        rows,
        cols,
        rank,
        gamma_target: gamma,
        norm_target: norm,
        seed: rng.random(),
    })
    .expect("valid spec")
}

/// Surjective `T` (rows ≤ cols).
fn surjective(rng: &mut Rng64, max_dim: usize) -> Matrix {
    let rows = rng.random_range(1..=max_dim);
    let cols = rng.random_range(rows..=max_dim);
    random_operator(&random_spec(rows, cols, rows, rng)).expect("valid spec")
}

fn criterion_1() -> Result<String, String> {
    let tol = tol();
    let mut rng = rng_from_seed(1);
    let mut worst_axiom: f64 = 0.0;
    let mut worst_identity: f64 = 0.0;
    for i in 0..1000 {
        let t = random_t(&mut rng, 30, 0);
        let p = pseudoinverse(&t, &tol).map_err(e2s)?;
        let scale = 1f64.max(p.norm()).max(p.pinv_norm());
        let axioms = verify_mp_axioms(&t, &p.pinv, &tol).map_err(e2s)?;
        let a = axioms.max_residual() / scale;
        ensure(a <= 1e-9, || format!("matrix {i}: axiom residual {a:e} (relative)"))?;
        worst_axiom = worst_axiom.max(a);

        let rel = |d: f64, r: f64| d / r.max(1.0);
        let pp = pseudoinverse(&p.pinv, &tol).map_err(e2s)?.pinv;
        let adj = pseudoinverse(&t.adjoint(), &tol).map_err(e2s)?.pinv;
        let gram = pseudoinverse(&(&t.adjoint() * &t), &tol).map_err(e2s)?.pinv;
        let checks = [
            ("T†† = T", rel(distance(&pp, &t).map_err(e2s)?, p.norm())),
            ("(T*)† = (T†)*", rel(distance(&adj, &p.pinv.adjoint()).map_err(e2s)?, p.pinv_norm())),
            (
                "(T*T)† = T†T*†",
                rel(
                    distance(&gram, &(&p.pinv * &p.pinv.adjoint())).map_err(e2s)?,
                    p.pinv_norm().powi(2),
                ),
            ),
        ];
        for (name, v) in checks {
            ensure(v <= 1e-9, || format!("matrix {i}: {name} off by {v:e} (relative)"))?;
            worst_identity = worst_identity.max(v);
        }
    }
    Ok(format!(
        "1000 matrices; worst axiom residual {worst_axiom:.2e}, worst identity {worst_identity:.2e} (limit 1e-9)"
    ))
}

fn criterion_2() -> Result<String, String> {
    let tol = tol();
    let mut rng = rng_from_seed(1);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 0..1000 {
        let t = random_t(&mut rng, 30, 0);
        let p = pseudoinverse(&t, &tol).map_err(e2s)?;
        if p.rank == 0 {
            continue;
        }
        count += 1;
        // ‖T†‖ from a fresh SVD of T†, not from 1/γ.
        let product = spectral_norm(&p.pinv).map_err(e2s)? * p.gamma;
        let dev = (product - 1.0).abs();
        ensure(dev <= 1e-10, || format!("matrix {i}: ‖T†‖γ(T) = {product}"))?;
        worst = worst.max(dev);
    }
    Ok(format!("{count} nonzero matrices; worst |‖T†‖γ − 1| = {worst:.2e} (limit 1e-10)"))
}

/// The 500 `(T, S_α)` pairs shared by criteria 3 and 4.
fn stewart_pairs() -> Vec<(Matrix, Matrix)> {
    let tol = tol();
    let mut rng = rng_from_seed(3);
    (0..500)
        .map(|_| {
            let t = random_t(&mut rng, 12, 1);
            let pinv_norm = pseudoinverse(&t, &tol).expect("svd").pinv_norm();
            let upper = 2.0 / pinv_norm;
            let mut alpha = rng.random_range(0.0..upper);
            while alpha == 0.0 {
                alpha = rng.random_range(0.0..upper);
            }
            let s = s_alpha(&t, alpha, &tol).expect("admissible alpha");
            (t, s)
        })
        .collect()
}

fn criterion_3() -> Result<String, String> {
    let tol = tol();
    let (mut worst_oracle, mut worst_forms, mut worst_gap) = (0f64, 0f64, 0f64);
    for (i, (t, s)) in stewart_pairs().iter().enumerate() {
        let td_norm = pseudoinverse(t, &tol).map_err(e2s)?.pinv_norm();
        let left = update_stewart(t, s, &tol).map_err(|e| format!("pair {i}: {e}"))?;
        let right = update_stewart_right(t, s, &tol).map_err(|e| format!("pair {i}: {e}"))?;
        let oracle = left.oracle_discrepancy / td_norm;
        ensure(oracle <= 1e-8, || format!("pair {i}: oracle discrepancy {oracle:e}·‖T†‖"))?;
        let forms = distance(&left.pinv_updated, &right.pinv_updated).map_err(e2s)?;
        ensure(forms <= 1e-9, || format!("pair {i}: left/right forms differ by {forms:e}"))?;
        let sum = t + s;
        let (rt, rs) = (rank(t, &tol).map_err(e2s)?, rank(&sum, &tol).map_err(e2s)?);
        ensure(rt == rs, || format!("pair {i}: rank(T) = {rt}, rank(T+S) = {rs}"))?;
        let gap = principal_angle_gap(
            &null_space_basis(t, &tol).map_err(e2s)?,
            &null_space_basis(&sum, &tol).map_err(e2s)?,
        )
        .map_err(e2s)?;
        ensure(gap <= 1e-8, || format!("pair {i}: null-space gap {gap:e}"))?;
        worst_oracle = worst_oracle.max(oracle);
        worst_forms = worst_forms.max(forms);
        worst_gap = worst_gap.max(gap);
    }
    Ok(format!(
        "500 pairs; oracle {worst_oracle:.2e}·‖T†‖ (1e-8), forms {worst_forms:.2e} (1e-9), null gap {worst_gap:.2e} (1e-8)"
    ))
}

fn criterion_4() -> Result<String, String> {
    let tol = tol();
    let mut best_ratio: f64 = 0.0;
    for (i, (t, s)) in stewart_pairs().iter().enumerate() {
        let td = pseudoinverse(t, &tol).map_err(e2s)?.pinv;
        let sum = pseudoinverse(&(t + s), &tol).map_err(e2s)?.pinv;
        let measured = distance(&sum, &td).map_err(e2s)?;
        let bound = error_bound_stewart(t, s, &tol).map_err(e2s)?;
        ensure(measured <= bound + 1e-10, || {
            format!("pair {i}: measured {measured:e} > bound {bound:e}")
        })?;
        if bound > 0.0 {
            best_ratio = best_ratio.max(measured / bound);
        }
    }
    ensure(best_ratio >= 0.25, || format!("bound never exercised: best ratio {best_ratio}"))?;
    Ok(format!("500 pairs dominated; best measured/bound ratio {best_ratio:.3} (≥ 0.25)"))
}

/// The 300 relative-bound trials shared by criteria 5 and 9(a).
fn relative_trials() -> Vec<(Matrix, Matrix, f64)> {
    let mut rng = rng_from_seed(5);
    (0..300)
        .map(|_| {
            let t = surjective(&mut rng, 10);
            let lambda1 = rng.random_range(0.0..=0.9);
            let s = random_relative_perturbation(&t, lambda1, rng.random()).expect("λ₁ < 1");
            (t, s, lambda1)
        })
        .collect()
}

fn criterion_5() -> Result<String, String> {
    let tol = tol();
    let (mut worst_oracle, mut worst_growth, mut worst_bound) = (0f64, 0f64, 0f64);
    for (i, (t, s, lambda1)) in relative_trials().iter().enumerate() {
        let r = update_relative_surjective(t, s, *lambda1, 0.0, &tol).map_err(|e| format!("trial {i}: {e}"))?;
        ensure(r.oracle_discrepancy <= 1e-8, || {
            format!("trial {i}: oracle discrepancy {:e}", r.oracle_discrepancy)
        })?;
        let tp = pseudoinverse(t, &tol).map_err(e2s)?;
        let sp = pseudoinverse(&(t + s), &tol).map_err(e2s)?;
        let growth = sp.pinv_norm() / (tp.pinv_norm() / (1.0 - lambda1));
        ensure(growth <= 1.0 + 1e-10, || format!("trial {i}: ‖(T+S)†‖ exceeds bound by factor {growth}"))?;
        let measured = distance(&sp.pinv, &tp.pinv).map_err(e2s)?;
        let bound = error_bound_lambda2_zero(t, s, &tol).map_err(e2s)?.bound;
        ensure(measured <= bound + 1e-10, || {
            format!("trial {i}: measured {measured:e} > λ₂=0 bound {bound:e}")
        })?;
        worst_oracle = worst_oracle.max(r.oracle_discrepancy);
        worst_growth = worst_growth.max(growth);
        if bound > 0.0 {
            worst_bound = worst_bound.max(measured / bound);
        }
    }
    Ok(format!(
        "300 trials; oracle {worst_oracle:.2e} (1e-8), norm growth ratio ≤ {worst_growth:.3}, error/bound ≤ {worst_bound:.3}"
    ))
}

fn criterion_6() -> Result<String, String> {
    let tol = tol();
    let mut rng = rng_from_seed(6);
    let mut max_terms = 0;
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let rows = rng.random_range(1..=8);
        let cols = rng.random_range(rows..=8);
        let t = well_conditioned(rows, cols, rows, &mut rng);
        let target = rng.random_range(0.1..=0.9);
        let w = random_contraction(rows, &mut rng);
        let w = w.scale(1.0 / spectral_norm(&w).map_err(e2s)?);
        let s = &t + &relative_perturbation_with(&t, target, &w).map_err(e2s)?;

        let res = neumann_pinv(&t, &s, &NeumannOptions::default(), &tol).map_err(|e| format!("trial {i}: {e}"))?;
        ensure((0.1 - 1e-12..=0.9 + 1e-12).contains(&res.ratio), || {
            format!("trial {i}: ratio {} outside [0.1, 0.9]", res.ratio)
        })?;
        let tp = pseudoinverse(&t, &tol).map_err(e2s)?;
        let td_norm = tp.pinv_norm();
        let oracle = pseudoinverse(&s, &tol).map_err(e2s)?.pinv;
        let mut sums = NeumannPartialSums::new(&tp.pinv, &t, &s).map_err(e2s)?;
        for k in 1..=res.terms_used {
            sums.advance();
            let err = distance(sums.partial_sum(), &oracle).map_err(e2s)?;
            let tail = td_norm * res.ratio.powi(k as i32) / (1.0 - res.ratio);
            ensure(err <= tail + 1e-10, || {
                format!("trial {i}, order {k}: error {err:e} > tail bound {tail:e}")
            })?;
            worst = worst.max(err / (tail + 1e-10));
        }
        let limit = ((res.eps_series / td_norm).ln() / res.ratio.ln()).ceil() as usize + 2;
        ensure(res.terms_used <= limit, || {
            format!("trial {i}: {} terms > {limit}", res.terms_used)
        })?;
        max_terms = max_terms.max(res.terms_used);
    }
    Ok(format!(
        "200 trials; every order within tail bound (worst error/bound {worst:.3}); max terms {max_terms}"
    ))
}

fn criterion_7() -> Result<String, String> {
    let tol = tol();
    let mut rng = rng_from_seed(7);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let k = rng.random_range(1..=6);
        let f = well_conditioned(rng.random_range(k..=8), k, k, &mut rng);
        let g = well_conditioned(k, rng.random_range(k..=8), k, &mut rng);
        let r = reverse_order_pinv(&f, &g, &tol).map_err(|e| format!("pair {i}: {e}"))?;
        ensure(r.max_pairwise_discrepancy <= 1e-9, || {
            format!("pair {i}: three-way discrepancy {:e}", r.max_pairwise_discrepancy)
        })?;
        worst = worst.max(r.max_pairwise_discrepancy);
    }
    let (f, g) = counterexample_pair();
    let gap = reverse_order_gap(&f, &g, &tol).map_err(e2s)?;
    ensure(gap > 1e-3, || format!("counterexample gap only {gap:e}"))?;
    Ok(format!("200 pairs; worst three-way discrepancy {worst:.2e} (1e-9); counterexample gap {gap:.3}"))
}

fn criterion_8() -> Result<String, String> {
    let tol = tol();
    let mut rng = rng_from_seed(8);
    let slack = 1e-12;
    for i in 0..50 {
        let t = random_t(&mut rng, 10, 1);
        let td_norm = pseudoinverse(&t, &tol).map_err(e2s)?.pinv_norm();
        let alpha = rng.random_range(0.05..0.95) * 2.0 / td_norm;
        let s = s_alpha(&t, alpha, &tol).map_err(e2s)?;
        let (mut prev_gap, mut prev_bound) = (f64::INFINITY, f64::INFINITY);
        for n in 1..=20 {
            let g = gamma_continuity_bound(&t, &s.scale(1.0 / n as f64), &tol).map_err(e2s)?;
            ensure(g.gap <= g.bound + 1e-10, || {
                format!("T {i}, n = {n}: gap {:e} > bound {:e}", g.gap, g.bound)
            })?;
            ensure(g.gap <= prev_gap + slack && g.bound <= prev_bound + slack, || {
                format!("T {i}, n = {n}: not monotone ({prev_gap:e} → {:e}, {prev_bound:e} → {:e})", g.gap, g.bound)
            })?;
            prev_gap = g.gap;
            prev_bound = g.bound;
        }
    }
    Ok("50 operators × 20 scalings; bound holds and both sides decrease".to_string())
}

fn criterion_9() -> Result<String, String> {
    let tol = tol();
    // (a) γ(T+S) ≥ (1−λ₁)/(1+λ₂)·γ(T) with λ₂ = 0; the reversed "≤" must fail somewhere.
    let mut reversed_failures = 0;
    let trials = relative_trials();
    for (i, (t, s, lambda1)) in trials.iter().enumerate() {
        let gt = pseudoinverse(t, &tol).map_err(e2s)?.gamma;
        let gs = pseudoinverse(&(t + s), &tol).map_err(e2s)?.gamma;
        let rhs = (1.0 - lambda1) * gt;
        ensure(gs >= rhs * (1.0 - 1e-10), || {
            format!("trial {i}: γ(T+S) = {gs:e} < (1−λ₁)γ(T) = {rhs:e}")
        })?;
        if gs > rhs * (1.0 + 1e-10) {
            reversed_failures += 1;
        }
    }
    ensure(reversed_failures > 0, || "reversed direction never fails".into())?;

    // (b) wide surjective T: T†(I+ST†)⁻¹ matches the oracle, while
    // T†(I+T†S)⁻¹ multiplies an n×m matrix by an n×n one.
    let mut rng = rng_from_seed(9);
    let t = random_operator(&GenSpec {
        rows: 2,
        cols: 4,
        rank: 2,
        gamma_target: 0.8,
        norm_target: 1.5,
        seed: rng.random(),
    })
    .map_err(e2s)?;
    let s = random_relative_perturbation(&t, 0.4, rng.random()).map_err(e2s)?;
    let r = update_relative_surjective(&t, &s, 0.4, 0.0, &tol).map_err(e2s)?;
    ensure(r.oracle_discrepancy <= 1e-10, || format!("T†(I+ST†)⁻¹ off by {:e}", r.oracle_discrepancy))?;
    let td = pseudoinverse(&t, &tol).map_err(e2s)?.pinv;
    let swapped_op = &Matrix::identity(4) + &(&td * &s);
    let ill_formed = matches!(td.matmul(&swapped_op), Err(Error::DimensionMismatch { .. }));
    ensure(ill_formed, || "swapped form unexpectedly well-formed".into())?;
    Ok(format!(
        "(a) ≥ held on 300 trials, reversed ≤ failed on {reversed_failures}; (b) T†(I+ST†)⁻¹ off by {:.1e}, T†(I+T†S)⁻¹ is 4×2·4×4 and ill-formed",
        r.oracle_discrepancy
    ))
}

fn cli(args: &[&str], dir: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pinvpert"))
        .args(args)
        .current_dir(dir)
        .env_remove("PINVPERT_TOL_ABS")
        .env_remove("PINVPERT_TOL_REL")
        .env_remove("PINVPERT_RANK_REL")
        .env_remove("PINVPERT_MARGIN")
        .env_remove("PINVPERT_SEED")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn criterion_10() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let tol = tol();
    let put = |name: &str, m: &Matrix| write_matrix(m, d.join(name), MtxLayout::Array).map_err(|e| e.to_string());

    let mut rng = rng_from_seed(10);
    put("id2.mtx", &Matrix::identity(2))?;
    let t = random_operator(&random_spec(5, 4, 3, &mut rng)).map_err(e2s)?;
    let alpha = 1.0 / pseudoinverse(&t, &tol).map_err(e2s)?.pinv_norm();
    put("t.mtx", &t)?;
    put("s_alpha.mtx", &s_alpha(&t, alpha, &tol).map_err(e2s)?)?;
    let ts = random_operator(&random_spec(3, 5, 3, &mut rng)).map_err(e2s)?;
    put("ts.mtx", &ts)?;
    put("rs.mtx", &random_relative_perturbation(&ts, 0.5, 11).map_err(e2s)?)?;
    put("ns.mtx", &(&ts + &ts.scale(0.3)))?;
    put("f.mtx", &random_operator(&random_spec(4, 3, 3, &mut rng)).map_err(e2s)?)?;
    put("g.mtx", &random_operator(&random_spec(3, 5, 3, &mut rng)).map_err(e2s)?)?;
    let (cf, cg) = counterexample_pair();
    put("cf.mtx", &cf)?;
    put("cg.mtx", &cg)?;
    for (kind, tag) in [
        (AdversarialKind::RangeViolation, "range"),
        (AdversarialKind::NullViolation, "null"),
        (AdversarialKind::NormViolation, "norm"),
    ] {
        let (at, as_) = adversarial_pair(kind, 5).map_err(e2s)?;
        put(&format!("t_{tag}.mtx"), &at)?;
        put(&format!("s_{tag}.mtx"), &as_)?;
    }
    let malformed = [
        ("bad_header.mtx", "%%MatrixMarket tensor array real general\n1 1\n1\n"),
        ("bad_symmetry.mtx", "%%MatrixMarket matrix array real symmetric\n1 1\n1\n"),
        ("bad_range.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n"),
        ("bad_token.mtx", "%%MatrixMarket matrix array real general\n1 1\nx\n"),
        ("bad_count.mtx", "%%MatrixMarket matrix array real general\n2 2\n1\n"),
    ];
    for (name, text) in malformed {
        std::fs::write(d.join(name), text).map_err(|e| e.to_string())?;
    }

    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["pinv", "id2.mtx"], 0),
        (vec!["pinv", "t.mtx"], 0),
        (vec!["check", "t.mtx", "s_alpha.mtx"], 0),
        (vec!["update", "t.mtx", "s_alpha.mtx", "--method", "stewart"], 0),
        (vec!["update", "t.mtx", "s_alpha.mtx", "--method", "stewart", "--right"], 0),
        (vec!["update", "ts.mtx", "rs.mtx", "--method", "relative"], 0),
        (vec!["update", "ts.mtx", "ns.mtx", "--method", "neumann"], 0),
        (vec!["bounds", "t.mtx", "s_alpha.mtx"], 0),
        (vec!["rol", "f.mtx", "g.mtx"], 0),
        (vec!["gen", "operator", "--rows", "3", "--cols", "2", "--rank", "1", "--gamma", "2", "--norm", "2", "--out", "gen.mtx"], 0),
        (vec!["gen", "salpha", "t.mtx", "--alpha", "0.1", "--out", "gen_s.mtx"], 0),
        (vec!["gen", "relperturb", "ts.mtx", "--lambda1", "0.3", "--out", "gen_r.mtx"], 0),
        (vec!["gen", "adversarial", "--kind", "null", "--out-t", "a_t.mtx", "--out-s", "a_s.mtx"], 0),
        (vec!["check", "t_range.mtx", "s_range.mtx"], 1),
        (vec!["check", "t_null.mtx", "s_null.mtx"], 1),
        (vec!["check", "t_norm.mtx", "s_norm.mtx"], 1),
        (vec!["update", "t_range.mtx", "s_range.mtx", "--method", "stewart"], 1),
        (vec!["update", "t_null.mtx", "s_null.mtx", "--method", "stewart"], 1),
        (vec!["update", "t_norm.mtx", "s_norm.mtx", "--method", "stewart"], 1),
        (vec!["bounds", "t_null.mtx", "s_null.mtx"], 1),
        (vec!["rol", "cf.mtx", "cg.mtx"], 1),
        (vec!["gen", "salpha", "t.mtx", "--alpha", "1e6", "--out", "x.mtx"], 1),
        (vec!["pinv", "bad_header.mtx"], 2),
        (vec!["pinv", "bad_symmetry.mtx"], 2),
        (vec!["pinv", "bad_range.mtx"], 2),
        (vec!["pinv", "bad_token.mtx"], 2),
        (vec!["pinv", "bad_count.mtx"], 2),
        (vec!["pinv", "missing.mtx"], 2),
        (vec!["check", "t.mtx", "id2.mtx"], 2),
        (vec!["update", "t.mtx", "s_alpha.mtx"], 2),
        (vec![], 2),
    ];
    for (args, expected) in &cases {
        let (code, _) = cli(args, d);
        ensure(code == *expected, || format!("`{}` exited {code}, expected {expected}", args.join(" ")))?;
    }

    let (code, out) = cli(&["update", "t_norm.mtx", "s_norm.mtx", "--method", "stewart", "--json"], d);
    ensure(code == 1 && out.contains("‖T†S‖ ≥ 1"), || format!("norm refusal not named: {out}"))?;
    let (_, out) = cli(&["check", "t.mtx", "s_alpha.mtx", "--json"], d);
    let r = Report::from_json(&out).map_err(|e| e.to_string())?;
    ensure(r.verdicts["hypotheses"]["verdict_stewart"] == true, || "verdict_stewart not true".into())?;

    let verify = |extra: &[&str]| -> Result<Report, String> {
        let mut args = vec!["verify", "--seed", "42", "--json", "--trials", "40"];
        args.extend_from_slice(extra);
        let (code, out) = cli(&args, d);
        ensure(code == 0, || format!("verify exited {code}: {out}"))?;
        Report::from_json(&out).map_err(|e| e.to_string())
    };
    let first = verify(&[])?;
    let second = verify(&[])?;
    let threaded = verify(&["--jobs", "4"])?;
    ensure(first.without_timings() == second.without_timings(), || "verify not deterministic".into())?;
    ensure(first.verdicts == threaded.verdicts, || "verify depends on --jobs".into())?;
    Ok(format!("{} fixture runs with expected exit codes; verify --seed 42 reproducible", cases.len()))
}
