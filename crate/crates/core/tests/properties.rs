use nalgebra::DVector;
use num_complex::Complex64;
use num_rational::Ratio;
use proptest::prelude::*;

use hermsq_core::certificates::{certify, diagonal_shift_maximize, verify_sos, CertifyOptions, ShiftOptions, Verdict};
use hermsq_core::clifford::{gram_error, realize_correlation, CorrelationMatrix, DEFAULT_CHAIN_CAP};
use hermsq_core::group_algebra::QuadraticForm;
use hermsq_core::linalg::{haar_sample, stream_rng, CMatrix};
use hermsq_core::positivity::{
    convex_combine, infimum_search, trace_evaluate, wang_check, weighted_gram, SearchOptions, UnitaryTuple,
};
use hermsq_core::random::{random_hermitian, random_unit_vector, random_unitary_tuple};
use hermsq_core::Tolerances;

const T: Tolerances = Tolerances::DEFAULT;

fn form(a: CMatrix) -> QuadraticForm {
    QuadraticForm::from_coefficient_matrix(a, 1e-12).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certified_forms_are_nonnegative_on_random_tuples(seed in any::<u64>(), n in 1usize..=4, eps in 0.0f64..3.0) {
        let mut rng = stream_rng(seed, 0);
        let q = form(random_hermitian(n, &mut rng));
        let opts = CertifyOptions { dims: vec![1, 2], restarts: 4, seed, tol: T };
        if let Verdict::Certificate { certificate, .. } = certify(&q, eps, &opts).unwrap() {
            prop_assert!(verify_sos(&certificate, &q, &T));
            for m in [1, 2, 3] {
                let t = random_unitary_tuple(n, m, &mut rng);
                prop_assert!(trace_evaluate(&q, &t, &T).unwrap() >= -eps - 1e-9);
            }
        }
    }

    #[test]
    fn descent_value_is_bounded_by_the_shift_optimum(seed in any::<u64>(), n in 2usize..=4, m in 1usize..=3) {
        let mut rng = stream_rng(seed, 0);
        let q = form(random_hermitian(n, &mut rng));
        let lambda = diagonal_shift_maximize(q.matrix(), &ShiftOptions::default()).unwrap().lambda_star;
        let r = infimum_search(&q, &SearchOptions::new(m, 3, seed)).unwrap();
        prop_assert!(r.value >= n as f64 * lambda - 1e-8);
        prop_assert!(r.monotone);
        prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs())));
        prop_assert!((trace_evaluate(&q, &r.witness, &T).unwrap() - r.value).abs() < 1e-9);
    }

    #[test]
    fn trace_is_invariant_under_conjugation_and_phase(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4, theta in 0.0f64..6.3) {
        let mut rng = stream_rng(seed, 0);
        let q = form(random_hermitian(n, &mut rng));
        let t = random_unitary_tuple(n, m, &mut rng);
        let w = haar_sample(m, &mut rng);
        let phase = Complex64::from_polar(1.0, theta);
        let moved: Vec<CMatrix> = t
            .matrices()
            .iter()
            .map(|v| w.matrix() * v.matrix() * w.matrix().adjoint() * phase)
            .collect();
        let moved = UnitaryTuple::new(moved, &T).unwrap();
        let a = trace_evaluate(&q, &t, &T).unwrap();
        let b = trace_evaluate(&q, &moved, &T).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn realization_matches_random_correlations(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = stream_rng(seed, 0);
        // rank-deficient on purpose: vectors live in a 2-dimensional subspace
        let vs: Vec<DVector<f64>> = (0..n)
            .map(|_| {
                let v = random_unit_vector(2, &mut rng);
                DVector::from_fn(n.max(2), |i, _| if i < 2 { v[i] } else { 0.0 })
            })
            .collect();
        let p = CorrelationMatrix::from_vectors(&vs).unwrap();
        let t = realize_correlation(&p, DEFAULT_CHAIN_CAP, &T).unwrap();
        prop_assert!(gram_error(&t, &p) <= 1e-10);
    }

    #[test]
    fn convex_combination_is_exact(seed in any::<u64>(), n in 1usize..=3, parts in prop::collection::vec(1u64..=4, 1..=3)) {
        let mut rng = stream_rng(seed, 0);
        let q: u64 = parts.iter().sum();
        let weights: Vec<Ratio<u64>> = parts.iter().map(|&p| Ratio::new(p, q)).collect();
        let tuples: Vec<UnitaryTuple> = (0..parts.len())
            .map(|k| random_unitary_tuple(n, 1 + k % 3, &mut rng))
            .collect();
        let c = convex_combine(&tuples, &weights, 4096).unwrap();
        let diff = c.gram_matrix() - weighted_gram(&tuples, &weights);
        prop_assert!(diff.iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn trace_inequality_on_haar_pairs(seed in any::<u64>(), m in 1usize..=6) {
        let mut rng = stream_rng(seed, 0);
        let u = haar_sample(m, &mut rng);
        let v = haar_sample(m, &mut rng);
        prop_assert!(wang_check(&u, &v, &T).unwrap().holds);
    }
}
