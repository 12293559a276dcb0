//! Seeded end-to-end checks, one per acceptance criterion, with a
//! deterministic plain-text report.

use num_complex::Complex64;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::certificates::{
    build_lemma_element, coefficient_recovery, diagonal_shift_maximize, psd_to_sos, verify_sos,
    DiagonalShift, LemmaDecomposition, ShiftOptions,
};
use crate::clifford::{pauli_chain, realize_correlation, gram_error, DEFAULT_CHAIN_CAP};
use crate::error::Result;
use crate::group_algebra::{coefficient_matrix_to_element, cyc_equivalent, QuadraticForm};
use crate::linalg::{haar_sample, max_abs, mul_skip_zeros, stream_rng, CMatrix, UnitaryMatrix};
use crate::positivity::{
    convex_combine, infimum_search, infimum_sweep, sample_k3, trace_evaluate, wang_check,
    weighted_gram, SearchOptions, UnitaryTuple, DEFAULT_COMBINE_CAP, DEFAULT_DIMENSIONS,
    DEFAULT_RESTARTS,
};
use crate::random::{random_correlation, random_hermitian, random_psd, random_real_symmetric, random_word};
use crate::tolerances::Tolerances;

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<22} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

pub const CRITERIA: [(u32, &str); 10] = [
    (1, "clifford-realization"),
    (2, "pauli-chain-algebra"),
    (3, "sos-expansion"),
    (4, "refutation-oracle"),
    (5, "duality-cross-check"),
    (6, "convex-combination"),
    (7, "coefficient-recovery"),
    (8, "trace-inequality"),
    (9, "cyclic-equivalence"),
    (10, "determinism"),
];

/// Runs one of criteria 1 to 9. Errors become a failing line.
pub fn run_criterion(id: u32, seed: u64, tol: &Tolerances) -> CriterionReport {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, n)| *n)
        .unwrap_or("unknown");
    let outcome = match id {
        1 => clifford_realization(seed, tol),
        2 => pauli_algebra(),
        3 => sos_expansion(seed, tol),
        4 => refutation_oracle(seed, tol),
        5 => duality_cross_check(seed, tol),
        6 => convex_combination(seed),
        7 => recovery(seed, tol),
        8 => trace_inequality(seed, tol),
        9 => cyclic_equivalence(seed),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionReport {
        id,
        name,
        passed,
        detail,
    }
}

/// Criteria 1 to 9 in order.
pub fn run_criteria(seed: u64, tol: &Tolerances) -> Vec<CriterionReport> {
    (1..=9).map(|id| run_criterion(id, seed, tol)).collect()
}

/// Criteria 1 to 9, then criterion 10 which reruns them and compares the
/// rendered reports byte for byte.
pub fn selftest(seed: u64, tol: &Tolerances) -> Vec<CriterionReport> {
    let mut first = run_criteria(seed, tol);
    let second = run_criteria(seed, tol);
    let a = render_report(seed, &first);
    let b = render_report(seed, &second);
    first.push(CriterionReport {
        id: 10,
        name: "determinism",
        passed: a == b,
        detail: if a == b {
            format!("two runs rendered identically ({} bytes)", a.len())
        } else {
            "two runs with the same seed differ".to_string()
        },
    });
    first
}

pub fn render_report(seed: u64, reports: &[CriterionReport]) -> String {
    let mut out = format!("selftest seed {seed:#x}\n");
    for r in reports {
        out.push_str(&r.line());
        out.push('\n');
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    out.push_str(&format!("{passed}/{} criteria passed\n", reports.len()));
    out
}

fn trial_rng(seed: u64, criterion: u64, trial: u64) -> rand_chacha::ChaCha8Rng {
    stream_rng(seed, (criterion << 32) | trial)
}

type Outcome = Result<(bool, String)>;

fn clifford_realization(seed: u64, tol: &Tolerances) -> Outcome {
    let errors = (2..=8usize)
        .flat_map(|n| (0..100u64).map(move |k| (n, k)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(n, k)| {
            let mut rng = trial_rng(seed, 1, (n as u64) << 16 | k);
            let p = random_correlation(n, &mut rng);
            Ok(gram_error(&realize_correlation(&p, DEFAULT_CHAIN_CAP, tol)?, &p))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = errors.iter().copied().fold(0.0, f64::max);
    Ok((
        worst <= 1e-10,
        format!("{} matrices, n = 2..8, max Gram error {worst:.3e} (bound 1e-10)", errors.len()),
    ))
}

fn pauli_algebra() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=DEFAULT_CHAIN_CAP {
        let chain = pauli_chain(n, DEFAULT_CHAIN_CAP)?;
        let m = chain.dim();
        let id = CMatrix::identity(m, m);
        let defects: Vec<f64> = (1..=n)
            .flat_map(|i| (i..=n).map(move |j| (i, j)))
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&(i, j)| {
                let (qi, qj) = (chain.generator(i), chain.generator(j));
                let anti = mul_skip_zeros(qi, qj) + mul_skip_zeros(qj, qi);
                let expected = if i == j { &id * Complex64::new(2.0, 0.0) } else { CMatrix::zeros(m, m) };
                let mut d = max_abs(&(anti - expected));
                if i == j {
                    d = d.max(max_abs(&(qi - qi.adjoint())));
                    d = d.max(max_abs(&(mul_skip_zeros(qi, qi) - &id)));
                }
                d
            })
            .collect();
        worst = defects.into_iter().fold(worst, f64::max);
    }
    Ok((
        worst <= 1e-12,
        format!("n = 1..9, max defect {worst:.3e} (bound 1e-12)"),
    ))
}

fn sos_expansion(seed: u64, tol: &Tolerances) -> Outcome {
    let results = (0..100u64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let mut rng = trial_rng(seed, 3, k);
            let n = rng.random_range(1..=6);
            let rank = rng.random_range(1..=n);
            let b = random_psd(n, rank, &mut rng);
            let cert = psd_to_sos(&b, 0.0, DiagonalShift::zero(n), tol)?;
            let diff = &cert.expand() - &coefficient_matrix_to_element(&b);
            let err = diff.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max);
            let q = QuadraticForm::from_coefficient_matrix(b, tol.hermitian)?;
            Ok((err, verify_sos(&cert, &q, tol)))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let verified = results.iter().filter(|r| r.1).count();
    Ok((
        worst <= 1e-9 && verified == results.len(),
        format!(
            "{} PSD matrices, n <= 6, max coefficient error {worst:.3e} (bound 1e-9), verified {verified}/{}",
            results.len(),
            results.len()
        ),
    ))
}

fn refutation_oracle(seed: u64, tol: &Tolerances) -> Outcome {
    let one = Complex64::new(1.0, 0.0);
    let coupling = QuadraticForm::from_terms(2, 0.0, &[(1, 2, one)], tol.hermitian)?;
    let shifted = QuadraticForm::from_terms(2, 2.0, &[(1, 2, one)], tol.hermitian)?;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (q, target, label) in [(&coupling, -2.0, "f"), (&shifted, 0.0, "2e+f")] {
        let mut values = Vec::new();
        for m in DEFAULT_DIMENSIONS {
            let mut opts = SearchOptions::new(m, DEFAULT_RESTARTS, seed ^ m as u64);
            opts.tol = tol.clone();
            let r = infimum_search(q, &opts)?;
            worst = worst.max((r.value - target).abs());
            values.push(format!("{:.9}", r.value));
        }
        parts.push(format!("{label}: [{}]", values.join(", ")));
    }
    Ok((
        worst <= 1e-6,
        format!("{}; max deviation {worst:.3e} (bound 1e-6)", parts.join("; ")),
    ))
}

fn duality_cross_check(seed: u64, tol: &Tolerances) -> Outcome {
    let shift_opts = ShiftOptions {
        seed,
        tol: tol.clone(),
        ..ShiftOptions::default()
    };
    let results = (0..50u64)
        .map(|k| {
            let mut rng = trial_rng(seed, 5, k);
            let n = rng.random_range(2..=5);
            let mut a = random_real_symmetric(n, &mut rng);
            // plant λ* = δ away from zero so that both outcomes occur
            let base = diagonal_shift_maximize(&a, &shift_opts)?.lambda_star;
            let delta = rng.random_range(0.05..0.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            for i in 0..n {
                a[(i, i)] += Complex64::new(delta - base, 0.0);
            }
            let lambda = diagonal_shift_maximize(&a, &shift_opts)?.lambda_star;
            let q = QuadraticForm::from_coefficient_matrix(a, tol.hermitian)?;
            let search = infimum_sweep(&q, &DEFAULT_DIMENSIONS, DEFAULT_RESTARTS, seed ^ k, tol)?;
            let certified = lambda >= -1e-9;
            let violated = search.value < -1e-6;
            Ok((certified, violated))
        })
        .collect::<Result<Vec<_>>>()?;
    let certified = results.iter().filter(|r| r.0).count();
    let mismatches = results.iter().filter(|r| r.0 == r.1).count();
    Ok((
        mismatches == 0,
        format!(
            "{} real instances, n <= 5: {certified} with lambda* >= 0, {} refuted, {mismatches} disagreements",
            results.len(),
            results.len() - certified
        ),
    ))
}

fn convex_combination(seed: u64) -> Outcome {
    let errors = (0..100u64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let mut rng = trial_rng(seed, 6, k);
            let q: u64 = rng.random_range(1..=12);
            let parts = rng.random_range(1..=q.min(4)) as usize;
            // random composition of q into `parts` positive integers
            let mut cuts: Vec<u64> = (1..q).collect();
            cuts.shuffle(&mut rng);
            let mut cuts: Vec<u64> = cuts.into_iter().take(parts - 1).collect();
            cuts.sort_unstable();
            let mut bounds = vec![0];
            bounds.extend(cuts);
            bounds.push(q);
            let weights: Vec<Ratio<u64>> = bounds.windows(2).map(|w| Ratio::new(w[1] - w[0], q)).collect();
            let n = rng.random_range(1..=4);
            let tuples: Vec<UnitaryTuple> = (0..parts)
                .map(|_| {
                    let m = rng.random_range(1..=3);
                    UnitaryTuple::from_trusted((0..n).map(|_| haar_sample(m, &mut rng)).collect())
                })
                .collect::<Result<_>>()?;
            let combined = convex_combine(&tuples, &weights, DEFAULT_COMBINE_CAP)?;
            Ok(max_abs(&(combined.gram_matrix() - weighted_gram(&tuples, &weights))))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = errors.iter().copied().fold(0.0, f64::max);
    Ok((
        worst <= 1e-12,
        format!("{} combinations, q <= 12, max Gram error {worst:.3e} (bound 1e-12)", errors.len()),
    ))
}

fn recovery(seed: u64, tol: &Tolerances) -> Outcome {
    let errors = (0..20u64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let mut rng = trial_rng(seed, 7, k);
            let n = rng.random_range(1..=4);
            let q = QuadraticForm::from_coefficient_matrix(random_hermitian(n, &mut rng), tol.hermitian)?;
            let r = coefficient_recovery(|t| trace_evaluate(&q, t, tol), n, tol)?;
            Ok(max_abs(&(r.matrix() - q.matrix())))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = errors.iter().copied().fold(0.0, f64::max);
    let zero = (1..=4)
        .map(|n| coefficient_recovery(|_| Ok(0.0), n, tol).map(|r| max_abs(r.matrix()) == 0.0))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .all(|z| z);
    Ok((
        worst <= 1e-8 && zero,
        format!(
            "{} planted forms, n <= 4, max coefficient error {worst:.3e} (bound 1e-8), zero evaluator gives zero: {zero}",
            errors.len()
        ),
    ))
}

fn trace_inequality(seed: u64, tol: &Tolerances) -> Outcome {
    let per_m = [2usize, 3, 4]
        .par_iter()
        .map(|&m| {
            let records = sample_k3(100_000, m, seed ^ ((m as u64) << 40), tol)?;
            let violations = records.iter().filter(|r| !r.wang.holds).count();
            let margin = records.iter().map(|r| r.wang.lhs - r.wang.rhs).fold(f64::NEG_INFINITY, f64::max);
            let mut rng = trial_rng(seed, 8, m as u64);
            let mut equalities = 0;
            for _ in 0..100 {
                let v = haar_sample(m, &mut rng);
                let w = wang_check(&UnitaryMatrix::identity(m), &v, tol)?;
                if w.holds && w.is_equality(tol.wang) {
                    equalities += 1;
                }
            }
            Ok((m, records.len(), violations, margin, equalities))
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = per_m.iter().all(|r| r.2 == 0 && r.4 == 100);
    let detail = per_m
        .iter()
        .map(|(m, count, bad, margin, eq)| {
            format!("m={m}: {count} pairs, {bad} violations, max lhs-rhs {margin:.3e}, U=I equality {eq}/100")
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok((passed, detail))
}

fn cyclic_equivalence(seed: u64) -> Outcome {
    let results = (0..100u64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let mut rng = trial_rng(seed, 9, k);
            let n = rng.random_range(1..=4);
            let pieces = rng.random_range(1..=4);
            let target = random_hermitian(n, &mut rng);
            let mut pairs = Vec::new();
            let mut rest = target.clone();
            for p in 0..pieces {
                let a = if p + 1 == pieces {
                    // the last piece absorbs the remainder plus a traceless diagonal
                    let mut last = rest.clone();
                    let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let shift = DiagonalShift::project(&d);
                    last = shift.apply(&last);
                    last
                } else {
                    let a = random_hermitian(n, &mut rng);
                    rest -= &a;
                    a
                };
                pairs.push((random_word(4, n as u32, &mut rng), a));
            }
            let l = LemmaDecomposition { pairs };
            let target_element = coefficient_matrix_to_element(&target);
            let accepted = cyc_equivalent(&build_lemma_element(&l), &target_element, 1e-10);

            let mut bad = l.clone();
            let piece = rng.random_range(0..bad.pairs.len());
            let size = rng.random_range(0.01..1.0);
            let a = &mut bad.pairs[piece].1;
            if n == 1 || rng.random_bool(0.3) {
                let i = rng.random_range(0..n);
                a[(i, i)] += Complex64::new(size, 0.0);
            } else {
                let i = rng.random_range(0..n);
                let j = (i + rng.random_range(1..n)) % n;
                let z = Complex64::from_polar(size, rng.random_range(0.0..std::f64::consts::TAU));
                a[(i, j)] += z;
                a[(j, i)] += z.conj();
            }
            let rejected = !cyc_equivalent(&build_lemma_element(&bad), &target_element, 1e-10);
            (accepted, rejected)
        })
        .collect::<Vec<_>>();
    let accepted = results.iter().filter(|r| r.0).count();
    let rejected = results.iter().filter(|r| r.1).count();
    Ok((
        accepted == 100 && rejected == 100,
        format!("decompositions accepted {accepted}/100, perturbations rejected {rejected}/100"),
    ))
}
