use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use pinvpert::generators::{
    random_operator, random_relative_perturbation, random_spec, resolvent, resolvent_t, rng_from_seed, s_alpha,
    GenSpec,
};
use pinvpert::hypothesis::{check_relative_bound, check_stewart_hypotheses};
use pinvpert::linalg::{distance, spectral_norm, svd};
use pinvpert::matrix_market::{format_matrix, parse_matrix, MtxLayout};
use pinvpert::perturb::{update_stewart, NeumannPartialSums};
use pinvpert::pinv::{pseudoinverse, verify_mp_axioms};
use pinvpert::report::Report;
use pinvpert::{Matrix, Tolerances};

fn to_nalgebra(m: &Matrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn operator_strategy(max_dim: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_dim, 1..=max_dim, any::<u64>()).prop_flat_map(|(m, n, seed)| {
        (0..=m.min(n)).prop_map(move |r| {
            let mut rng = rng_from_seed(seed);
            random_operator(&random_spec(m, n, r, &mut rng)).unwrap()
        })
    })
}

fn gaussian_strategy(max_dim: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_dim, 1..=max_dim, any::<u64>()).prop_map(|(m, n, seed)| {
        let mut rng = rng_from_seed(seed);
        pinvpert::generators::gaussian_matrix(m, n, &mut rng)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn singular_values_match_nalgebra(a in gaussian_strategy(9)) {
        let ours = svd(&a).unwrap().sigma;
        let mut theirs: Vec<f64> = to_nalgebra(&a).singular_values().iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        prop_assert_eq!(ours.len(), theirs.len());
        let scale = theirs[0].max(1.0);
        for (x, y) in ours.iter().zip(&theirs) {
            prop_assert!((x - y).abs() <= 1e-12 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn pseudoinverse_matches_nalgebra(a in gaussian_strategy(8)) {
        let ours = pseudoinverse(&a, &Tolerances::default()).unwrap();
        let theirs = to_nalgebra(&a).pseudo_inverse(1e-12).unwrap();
        let theirs = Matrix::from_fn(theirs.nrows(), theirs.ncols(), |i, j| theirs[(i, j)]);
        let d = distance(&ours.pinv, &theirs).unwrap();
        prop_assert!(d <= 1e-9 * ours.pinv_norm().max(1.0), "distance {d}");
    }

    #[test]
    fn svd_reconstructs_and_is_orthonormal(a in operator_strategy(10)) {
        let f = svd(&a).unwrap();
        prop_assert!(distance(&f.reconstruct(), &a).unwrap() <= 1e-12 * f.sigma_max().max(1.0));
        let k = f.sigma.len();
        prop_assert!((&(&f.u.adjoint() * &f.u) - &Matrix::identity(k)).max_abs() <= 1e-12);
        prop_assert!((&(&f.v.adjoint() * &f.v) - &Matrix::identity(k)).max_abs() <= 1e-12);
        prop_assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn axioms_hold_for_generated_operators(t in operator_strategy(12)) {
        let tol = Tolerances::default();
        let p = pseudoinverse(&t, &tol).unwrap();
        let report = verify_mp_axioms(&t, &p.pinv, &tol).unwrap();
        prop_assert!(report.passed, "{report:?}");
        prop_assert!(p.projection_consistency(&t).unwrap() <= 1e-10);
    }

    #[test]
    fn generator_hits_prescribed_spectrum(
        m in 1usize..10, n in 1usize..10, seed in any::<u64>(), r_frac in 0.0f64..=1.0,
    ) {
        let r = ((m.min(n) as f64) * r_frac).round() as usize;
        let mut rng = rng_from_seed(seed);
        let spec = random_spec(m, n, r, &mut rng);
        let p = pseudoinverse(&random_operator(&spec).unwrap(), &Tolerances::default()).unwrap();
        prop_assert_eq!(p.rank, r);
        if r > 0 {
            prop_assert!((p.gamma - spec.gamma_target).abs() <= 1e-12 * spec.norm_target);
            prop_assert!((p.norm() - spec.norm_target).abs() <= 1e-12 * spec.norm_target);
        }
    }

    #[test]
    fn s_alpha_satisfies_stewart_and_closure_relations(t in operator_strategy(8), unit in 0.01f64..0.99) {
        let tol = Tolerances::default();
        let p = pseudoinverse(&t, &tol).unwrap();
        prop_assume!(p.rank > 0);
        let alpha = unit * 2.0 / p.pinv_norm();
        let s = s_alpha(&t, alpha, &tol).unwrap();
        prop_assert!(spectral_norm(&s).unwrap() <= alpha / 2.0 + 1e-12);
        let h = check_stewart_hypotheses(&t, &s, &tol).unwrap();
        prop_assert!(h.verdict_stewart, "{h:?}");
        let u = update_stewart(&t, &s, &tol).unwrap();
        prop_assert!(u.oracle_discrepancy <= 1e-8 * p.pinv_norm());

        let rt = resolvent_t(&t, &tol).unwrap();
        prop_assert!(spectral_norm(&rt).unwrap() <= 0.5 + 1e-12);
        prop_assert!(spectral_norm(&resolvent(&t, &tol).unwrap()).unwrap() <= 1.0 + 1e-12);
        let adj = resolvent_t(&t.adjoint(), &tol).unwrap();
        prop_assert!(distance(&rt.adjoint(), &adj).unwrap() <= 1e-10);
    }

    #[test]
    fn relative_perturbation_satisfies_its_bound(t in operator_strategy(8), lambda1 in 0.0f64..0.95, seed in any::<u64>()) {
        let tol = Tolerances::default();
        let s = random_relative_perturbation(&t, lambda1, seed).unwrap();
        let check = check_relative_bound(&t, &s, lambda1, 0.0, 200, &tol).unwrap();
        prop_assert!(check.holds, "{check:?}");
    }

    #[test]
    fn neumann_partial_sums_obey_tail_bound(seed in any::<u64>(), rho in 0.05f64..0.9, rows in 1usize..5, extra in 0usize..3) {
        let tol = Tolerances::default();
        let mut rng = rng_from_seed(seed);
        let cols = rows + extra;
        let t = random_operator(&GenSpec { rows, cols, rank: rows, gamma_target: 0.5, norm_target: if rows == 1 { 0.5 } else { 1.5 }, seed }).unwrap();
        let w = pinvpert::generators::random_contraction(rows, &mut rng);
        let w = w.scale(1.0 / spectral_norm(&w).unwrap());
        let s = &t + &(&w * &t).scale(rho);
        let tp = pseudoinverse(&t, &tol).unwrap();
        let oracle = pseudoinverse(&s, &tol).unwrap().pinv;
        let mut sums = NeumannPartialSums::new(&tp.pinv, &t, &s).unwrap();
        for k in 1..40 {
            sums.advance();
            let tail = tp.pinv_norm() * rho.powi(k) / (1.0 - rho);
            prop_assert!(distance(sums.partial_sum(), &oracle).unwrap() <= tail + 1e-10);
        }
    }

    #[test]
    fn matrix_market_round_trip(a in gaussian_strategy(6), coordinate in any::<bool>(), real in any::<bool>()) {
        let a = if real { a.map(|z| Complex64::new(z.re, 0.0)) } else { a };
        let layout = if coordinate { MtxLayout::Coordinate } else { MtxLayout::Array };
        let mut buf = Vec::new();
        format_matrix(&a, layout, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        prop_assert_eq!(text.contains(" complex "), a.has_nonzero_imag());
        prop_assert_eq!(parse_matrix(buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn report_round_trip(values in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..8)) {
        let mut r = Report::new("test", Tolerances::default());
        r.input("values", &values).verdict("values", &values);
        let back = Report::from_json(&r.to_json()).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn generators_are_bit_reproducible(seed in any::<u64>()) {
        let mut a = rng_from_seed(seed);
        let mut b = rng_from_seed(seed);
        let ta = random_operator(&random_spec(4, 6, 3, &mut a)).unwrap();
        let tb = random_operator(&random_spec(4, 6, 3, &mut b)).unwrap();
        prop_assert_eq!(&ta, &tb);
        prop_assert_eq!(
            random_relative_perturbation(&ta, 0.5, seed).unwrap(),
            random_relative_perturbation(&tb, 0.5, seed).unwrap()
        );
    }
}
