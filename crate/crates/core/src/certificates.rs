//! Sum-of-Hermitian-squares certificates for quadratic elements, up to
//! cyclic equivalence.
//!
//! A quadratic `f` with coefficient matrix `A` has `ε e + f` cyclically
//! equivalent to `Σ_s h_s* h_s`, `h_s = Σ_j β_{s,j} u_j`, whenever some
//! matrix diagonally equivalent to `A + (ε/n) I` is positive semidefinite:
//! each rank-one term `β̄_s β_sᵀ` of that matrix expands to one square.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::clifford::{realize_correlation, CorrelationMatrix, DEFAULT_CHAIN_CAP};
use crate::error::{Error, Result};
use crate::group_algebra::{
    check_hermitian, coefficient_matrix_to_element, cyc_equivalent, AlgebraElement,
    QuadraticForm, Word,
};
use crate::linalg::{hermitian_eig, max_abs, stream_rng, CMatrix, ZERO};
use crate::positivity::{
    infimum_sweep, trace_evaluate, UnitaryTuple, DEFAULT_DIMENSIONS, DEFAULT_RESTARTS,
};
use crate::tolerances::Tolerances;

/// Real traceless diagonal `D`; `A` and `A + Diag(D)` encode the same element.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalShift(Vec<f64>);

impl DiagonalShift {
    pub fn new(d: Vec<f64>, tol: f64) -> Result<Self> {
        let sum: f64 = d.iter().sum();
        let scale = d.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        if sum.abs() > tol * scale {
            return Err(Error::invariant(
                "traceless diagonal shift",
                format!("entries sum to {sum:.3e}"),
            ));
        }
        Ok(DiagonalShift(d))
    }

    pub fn zero(n: usize) -> Self {
        DiagonalShift(vec![0.0; n])
    }

    /// Projects an arbitrary vector onto the traceless hyperplane.
    pub fn project(d: &[f64]) -> Self {
        let mean = d.iter().sum::<f64>() / d.len().max(1) as f64;
        DiagonalShift(d.iter().map(|x| x - mean).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        let mut b = a.clone();
        for (i, d) in self.0.iter().enumerate() {
            b[(i, i)] += Complex64::new(*d, 0.0);
        }
        b
    }
}

/// Witness that `ε e + f` is cyclically equivalent to `Σ_s h_s* h_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SosCertificate {
    pub epsilon: f64,
    pub shift: DiagonalShift,
    /// `β_s`, one coefficient vector per square.
    pub squares: Vec<DVector<Complex64>>,
}

impl SosCertificate {
    pub fn n(&self) -> usize {
        self.shift.values().len()
    }

    /// `Σ_s β̄_s β_sᵀ`, the coefficient matrix of the expansion.
    pub fn coefficient_matrix(&self) -> CMatrix {
        let n = self.n();
        let mut b = CMatrix::zeros(n, n);
        for beta in &self.squares {
            for i in 0..n {
                for j in 0..n {
                    b[(i, j)] += beta[i].conj() * beta[j];
                }
            }
        }
        b
    }

    /// `h_s = Σ_j β_{s,j} u_j`.
    pub fn linear_forms(&self) -> Vec<AlgebraElement> {
        self.squares
            .iter()
            .map(|beta| {
                AlgebraElement::from_terms(
                    beta.iter()
                        .enumerate()
                        .map(|(j, b)| (Word::generator(j as u32 + 1), *b)),
                )
            })
            .collect()
    }

    /// Symbolic `Σ_s h_s* h_s`.
    pub fn expand(&self) -> AlgebraElement {
        self.linear_forms()
            .iter()
            .fold(AlgebraElement::zero(), |acc, h| &acc + &h.hermitian_square())
    }
}

/// Expands the certificate and compares it with `ε e + f` modulo commutators.
pub fn verify_sos(cert: &SosCertificate, q: &QuadraticForm, tol: &Tolerances) -> bool {
    if cert.n() != q.n() || cert.squares.iter().any(|b| b.len() != q.n()) {
        return false;
    }
    let target = q.shifted(cert.epsilon).to_element();
    cyc_equivalent(&cert.expand(), &target, tol.certificate)
}

/// Certificate from `tr A ≥ Σ_{i≠j} |a_ij|` (with `A` the coefficient matrix
/// of `f + ε e`): move the trace onto a diagonally dominant representative
/// and split it into rank-one 2×2 pieces plus a diagonal remainder.
pub fn diagonally_dominant_cert(q: &QuadraticForm, epsilon: f64, tol: &Tolerances) -> Option<SosCertificate> {
    let a = q.shifted(epsilon).matrix().clone();
    let n = a.nrows();
    let row_sums: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| a[(i, j)].norm()).sum())
        .collect();
    let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
    let slack = trace - row_sums.iter().sum::<f64>();
    if slack < -tol.diagonal_dominance * trace.abs().max(1.0) {
        return None;
    }
    let share = slack.max(0.0) / n as f64;
    let shift: Vec<f64> = (0..n).map(|i| row_sums[i] + share - a[(i, i)].re).collect();

    let mut squares = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let z = a[(i, j)];
            let r = z.norm();
            if r == 0.0 {
                continue;
            }
            let mut beta = DVector::from_element(n, ZERO);
            beta[i] = Complex64::new(r.sqrt(), 0.0);
            beta[j] = z / r.sqrt();
            squares.push(beta);
        }
    }
    if share > 0.0 {
        for i in 0..n {
            let mut beta = DVector::from_element(n, ZERO);
            beta[i] = Complex64::new(share.sqrt(), 0.0);
            squares.push(beta);
        }
    }
    Some(SosCertificate {
        epsilon,
        shift: DiagonalShift::project(&shift),
        squares,
    })
}

/// Rank-one decomposition of a positive semidefinite `B`:
/// `β_s = √λ_s · v̄_s` for each eigenpair. Eigenvalues in
/// `[-psd_accept, 0]` are clipped to zero.
pub fn psd_to_sos(b: &CMatrix, epsilon: f64, shift: DiagonalShift, tol: &Tolerances) -> Result<SosCertificate> {
    let eig = hermitian_eig(b, tol.hermitian)?;
    if eig.min() < -tol.psd_accept {
        return Err(Error::invariant(
            "positive semidefinite matrix",
            format!("smallest eigenvalue {:.3e}", eig.min()),
        ));
    }
    if shift.values().len() != b.nrows() {
        return Err(Error::Dimension(format!(
            "shift of length {} for a {}x{} matrix",
            shift.values().len(),
            b.nrows(),
            b.nrows()
        )));
    }
    let squares = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.0)
        .map(|(k, &l)| eig.vector(k).map(|z| z.conj() * l.sqrt()))
        .collect();
    Ok(SosCertificate {
        epsilon,
        shift,
        squares,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftMethod {
    InteriorPoint,
    Supergradient,
}

#[derive(Clone, Debug)]
pub struct ShiftResult {
    pub shift: DiagonalShift,
    /// `λ_min(A + Diag(shift))`, computed exactly at the returned shift.
    pub lambda_star: f64,
    /// `⟨A, X⟩ / n` for the best unit-diagonal PSD `X` seen; `λ* ≤ upper_bound`.
    /// Infinite when no primal point is available.
    pub upper_bound: f64,
    pub converged: bool,
    pub method: ShiftMethod,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct ShiftOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub tol: Tolerances,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        ShiftOptions {
            restarts: 8,
            max_iterations: 10_000,
            seed: 0,
            tol: Tolerances::DEFAULT,
        }
    }
}

/// Maximizes `λ_min(A + Diag(d))` over real traceless `d`.
///
/// A primal-dual interior-point solve of the pair
/// `max Σ y  s.t. A − Diag(y) ⪰ 0` / `min ⟨A, X⟩  s.t. diag X = 1, X ⪰ 0`
/// runs first; its duality gap certifies convergence. If it stalls,
/// supergradient ascent (warm-started from the interior-point iterate plus
/// random traceless starts) takes over and the result is flagged
/// unconverged unless a zero supergradient is reached.
pub fn diagonal_shift_maximize(a: &CMatrix, opts: &ShiftOptions) -> Result<ShiftResult> {
    check_hermitian(a, opts.tol.hermitian)?;
    let n = a.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if n == 1 {
        let l = a[(0, 0)].re;
        return Ok(ShiftResult {
            shift: DiagonalShift::zero(1),
            lambda_star: l,
            upper_bound: l,
            converged: true,
            method: ShiftMethod::InteriorPoint,
            iterations: 0,
        });
    }
    let ipm = interior_point(a, 200, &opts.tol);
    let mut best = match &ipm {
        Some(out) => {
            let shift = DiagonalShift::project(&out.y.iter().map(|y| -y).collect::<Vec<_>>());
            let lambda_star = lambda_min_shifted(a, &shift, &opts.tol)?;
            ShiftResult {
                converged: out.upper_bound - lambda_star <= opts.tol.shift_gap,
                shift,
                lambda_star,
                upper_bound: out.upper_bound,
                method: ShiftMethod::InteriorPoint,
                iterations: out.iterations,
            }
        }
        None => {
            let shift = DiagonalShift::zero(n);
            let lambda_star = lambda_min_shifted(a, &shift, &opts.tol)?;
            ShiftResult {
                shift,
                lambda_star,
                upper_bound: f64::INFINITY,
                converged: false,
                method: ShiftMethod::InteriorPoint,
                iterations: 0,
            }
        }
    };
    if best.converged {
        return Ok(best);
    }

    let restarts = opts.restarts.max(1);
    let per_restart = (opts.max_iterations / restarts).max(1);
    let mut rng = stream_rng(opts.seed, 0);
    let spread = max_abs(a).max(1e-300);
    for r in 0..restarts {
        let start: Vec<f64> = if r == 0 {
            best.shift.values().to_vec()
        } else {
            (0..n).map(|_| rng.random_range(-spread..spread)).collect()
        };
        let sg = supergradient_ascent(a, &DiagonalShift::project(&start), per_restart, &opts.tol)?;
        if sg.lambda_star > best.lambda_star {
            let upper_bound = best.upper_bound;
            best = ShiftResult {
                converged: sg.converged || upper_bound - sg.lambda_star <= opts.tol.shift_gap,
                upper_bound,
                ..sg
            };
        }
        if best.converged {
            break;
        }
    }
    Ok(best)
}

fn lambda_min_shifted(a: &CMatrix, shift: &DiagonalShift, tol: &Tolerances) -> Result<f64> {
    Ok(hermitian_eig(&shift.apply(a), tol.hermitian)?.min())
}

/// Projected supergradient ascent on `d ↦ λ_min(A + Diag(d))` with steps
/// `s_t = s_0 / √t`, `s_0 = max |A_ij|`. The supergradient is the traceless
/// part of `diag(P)`, `P` the averaged projector onto the bottom eigenspace.
pub fn supergradient_ascent(
    a: &CMatrix,
    start: &DiagonalShift,
    iterations: usize,
    tol: &Tolerances,
) -> Result<ShiftResult> {
    let n = a.nrows();
    let s0 = max_abs(a);
    let mut d = start.values().to_vec();
    let mut best_d = d.clone();
    let mut best = f64::NEG_INFINITY;
    let mut converged = false;
    let mut used = 0;
    for t in 1..=iterations {
        used = t;
        let shift = DiagonalShift(d.clone());
        let eig = hermitian_eig(&shift.apply(a), tol.hermitian)?;
        let lmin = eig.min();
        if lmin > best {
            best = lmin;
            best_d = d.clone();
        }
        let cluster = 1e-9 * s0.max(1.0);
        let bottom: Vec<usize> = (0..n).filter(|&k| eig.values[k] <= lmin + cluster).collect();
        let mut g: Vec<f64> = (0..n)
            .map(|i| {
                bottom.iter().map(|&k| eig.vectors[(i, k)].norm_sqr()).sum::<f64>() / bottom.len() as f64
            })
            .collect();
        let mean = g.iter().sum::<f64>() / n as f64;
        g.iter_mut().for_each(|x| *x -= mean);
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-14 || s0 == 0.0 {
            converged = true;
            break;
        }
        let step = s0 / (t as f64).sqrt();
        for (di, gi) in d.iter_mut().zip(&g) {
            *di += step * gi / norm;
        }
    }
    Ok(ShiftResult {
        shift: DiagonalShift::project(&best_d),
        lambda_star: best,
        upper_bound: f64::INFINITY,
        converged,
        method: ShiftMethod::Supergradient,
        iterations: used,
    })
}

struct IpmOutcome {
    y: Vec<f64>,
    upper_bound: f64,
    iterations: usize,
}

/// Primal-dual path following (HKM direction) for
/// `min ⟨C, X⟩, diag X = 1, X ⪰ 0` and its dual `max Σ y, C − Diag(y) ⪰ 0`.
fn interior_point(c: &CMatrix, max_iter: usize, tol: &Tolerances) -> Option<IpmOutcome> {
    let n = c.nrows();
    let nf = n as f64;
    let scale = max_abs(c).max(1.0);
    let lmin = hermitian_eig(c, tol.hermitian).ok()?.min();
    let mut y = vec![lmin - scale; n];
    let mut x = CMatrix::identity(n, n);
    let dual_slack = |y: &[f64]| {
        let mut z = c.clone();
        for i in 0..n {
            z[(i, i)] -= Complex64::new(y[i], 0.0);
        }
        z
    };
    let mut iterations = 0;
    let mut sigma = 0.3;
    for it in 0..max_iter {
        iterations = it;
        let z = dual_slack(&y);
        let gap = (&z * &x).trace().re;
        let dual_obj: f64 = y.iter().sum();
        if gap <= 1e-13 * (1.0 + dual_obj.abs()) * scale {
            break;
        }
        let mu = sigma * gap / nf;
        let Some(zi) = z.clone().cholesky().map(|ch| ch.inverse()) else { break };
        let m = DMatrix::<f64>::from_fn(n, n, |i, j| (x[(i, j)] * zi[(j, i)]).re);
        let rhs = DVector::<f64>::from_fn(n, |i, _| 1.0 - mu * zi[(i, i)].re);
        let Some(dy) = m.cholesky().map(|ch| ch.solve(&rhs)) else { break };
        let dy_c = CMatrix::from_diagonal(&dy.map(|v| Complex64::new(v, 0.0)));
        let raw = &zi * Complex64::new(mu, 0.0) - &x + &x * &dy_c * &zi;
        let dx = (&raw + raw.adjoint()).scale(0.5);
        let dz = -dy_c;
        let (Some(ap), Some(ad)) = (max_step(&x, &dx), max_step(&z, &dz)) else { break };
        x += dx * Complex64::new(ap, 0.0);
        x = (&x + x.adjoint()).scale(0.5);
        for i in 0..n {
            y[i] += ad * dy[i];
            // primal feasibility is preserved up to rounding; pin it
            x[(i, i)] = Complex64::new(1.0, 0.0);
        }
        sigma = if ap.min(ad) > 0.8 { 0.1 } else { 0.3 };
    }
    let x = nearest_correlation(&x)?;
    let upper_bound = (c * &x).trace().re / nf;
    Some(IpmOutcome {
        y,
        upper_bound,
        iterations,
    })
}

/// Clips negative eigenvalues and rescales to unit diagonal, so that the
/// primal bound is taken at a feasible point.
fn nearest_correlation(x: &CMatrix) -> Option<CMatrix> {
    let eig = hermitian_eig(x, 1e-6).ok()?;
    let n = x.nrows();
    let mut p = CMatrix::zeros(n, n);
    for (k, &l) in eig.values.iter().enumerate() {
        if l > 0.0 {
            let v = eig.vector(k);
            p += (&v * v.adjoint()) * Complex64::new(l, 0.0);
        }
    }
    let d: Vec<f64> = (0..n).map(|i| p[(i, i)].re.sqrt()).collect();
    if d.iter().any(|&di| !(di > 0.0)) {
        return None;
    }
    Some(CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            p[(i, j)] / (d[i] * d[j])
        }
    }))
}

/// Step in `[0, 1]` keeping `S + α dS` positive definite (95% of the boundary).
fn max_step(s: &CMatrix, ds: &CMatrix) -> Option<f64> {
    let l = s.clone().cholesky()?.l();
    let w = l.solve_lower_triangular(ds)?;
    let w2 = l.solve_lower_triangular(&w.adjoint())?;
    let sym = (&w2 + w2.adjoint()).scale(0.5);
    let lmin = hermitian_eig(&sym, 1e-6).ok()?.min();
    Some(if lmin >= 0.0 { 1.0 } else { (0.95 / -lmin).min(1.0) })
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub dims: Vec<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub tol: Tolerances,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            dims: DEFAULT_DIMENSIONS.to_vec(),
            restarts: DEFAULT_RESTARTS,
            seed: crate::DEFAULT_SEED,
            tol: Tolerances::DEFAULT,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Certificate {
        certificate: SosCertificate,
        lambda_star: f64,
    },
    Refutation {
        witness: UnitaryTuple,
        value: f64,
        lambda_star: f64,
    },
    Inconclusive {
        lambda_star: f64,
        best_value: f64,
    },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Certificate { .. } => "certificate",
            Verdict::Refutation { .. } => "refutation",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn lambda_star(&self) -> f64 {
        match self {
            Verdict::Certificate { lambda_star, .. }
            | Verdict::Refutation { lambda_star, .. }
            | Verdict::Inconclusive { lambda_star, .. } => *lambda_star,
        }
    }
}

/// Decides `ε e + f` by, in order: the diagonal-dominance bound, a PSD
/// representative found by diagonal-shift maximization, and a multistart
/// unitary search for a negative trace. Every certificate is re-verified
/// symbolically and every refutation re-evaluated before it is returned.
pub fn certify(q: &QuadraticForm, epsilon: f64, opts: &CertifyOptions) -> Result<Verdict> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    let tol = &opts.tol;
    let target = q.shifted(epsilon);
    let shift_opts = ShiftOptions {
        seed: opts.seed,
        tol: tol.clone(),
        ..ShiftOptions::default()
    };
    let shift = diagonal_shift_maximize(target.matrix(), &shift_opts)?;
    let lambda_star = shift.lambda_star;

    if let Some(cert) = diagonally_dominant_cert(q, epsilon, tol) {
        if verify_sos(&cert, q, tol) {
            return Ok(Verdict::Certificate {
                certificate: cert,
                lambda_star,
            });
        }
    }

    if lambda_star >= -tol.psd_accept {
        let b = shift.shift.apply(target.matrix());
        let cert = psd_to_sos(&b, epsilon, shift.shift.clone(), tol)?;
        if verify_sos(&cert, q, tol) {
            return Ok(Verdict::Certificate {
                certificate: cert,
                lambda_star,
            });
        }
    }

    let search = infimum_sweep(q, &opts.dims, opts.restarts, opts.seed, tol)?;
    if search.value < -epsilon - tol.refute_margin {
        let value = trace_evaluate(q, &search.witness, tol)?;
        if value < -epsilon - tol.refute_margin {
            return Ok(Verdict::Refutation {
                witness: search.witness,
                value,
                lambda_star,
            });
        }
    }
    Ok(Verdict::Inconclusive {
        lambda_star,
        best_value: search.value,
    })
}

/// Pairs `(g_k, A_k)` standing for `Σ_k g_k^{-1} (u^{-1})ᵀ A_k u g_k`.
#[derive(Clone, Debug, Default)]
pub struct LemmaDecomposition {
    pub pairs: Vec<(Word, CMatrix)>,
}

impl LemmaDecomposition {
    pub fn matrix_sum(&self) -> Option<CMatrix> {
        let (first, rest) = self.pairs.split_first()?;
        Some(rest.iter().fold(first.1.clone(), |acc, (_, a)| acc + a))
    }

    /// `Σ_k A_k` is diagonally equivalent to `a`.
    pub fn sums_to(&self, a: &CMatrix, tol: f64) -> bool {
        self.matrix_sum()
            .is_some_and(|s| crate::group_algebra::diagonally_equivalent(&s, a, tol))
    }
}

pub fn build_lemma_element(l: &LemmaDecomposition) -> AlgebraElement {
    l.pairs.iter().fold(AlgebraElement::zero(), |acc, (g, a)| {
        &acc + &coefficient_matrix_to_element(a).conjugate_by(&g.inverse())
    })
}

/// One tuple at which the unknown form is evaluated during recovery.
#[derive(Clone, Debug)]
pub struct RecoveryProbe {
    pub label: String,
    pub tuple: UnitaryTuple,
}

const PROBE_T: f64 = 0.5;

/// Probe order: the identity tuple; then for every pair `k < j` the
/// realization of `I + t(E_kj + E_jk)` and the same tuple with `V_j`
/// multiplied by `i`; finally, as consistency checks, the realization at
/// `-t` for every pair.
pub fn recovery_probes(n: usize, tol: &Tolerances) -> Result<Vec<RecoveryProbe>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let realize_pair = |k: usize, j: usize, t: f64| -> Result<UnitaryTuple> {
        let mut p = DMatrix::<f64>::identity(n, n);
        p[(k, j)] = t;
        p[(j, k)] = t;
        realize_correlation(&CorrelationMatrix::new(p, tol)?, DEFAULT_CHAIN_CAP.max(n), tol)
    };
    let mut probes = vec![RecoveryProbe {
        label: "identity".into(),
        tuple: UnitaryTuple::identity(n, 1),
    }];
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|k| (k + 1..n).map(move |j| (k, j))).collect();
    for &(k, j) in &pairs {
        let real = realize_pair(k, j, PROBE_T)?;
        let imag = real.with_phase(j, Complex64::new(0.0, 1.0));
        probes.push(RecoveryProbe {
            label: format!("real({},{})", k + 1, j + 1),
            tuple: real,
        });
        probes.push(RecoveryProbe {
            label: format!("imag({},{})", k + 1, j + 1),
            tuple: imag,
        });
    }
    for &(k, j) in &pairs {
        probes.push(RecoveryProbe {
            label: format!("check({},{})", k + 1, j + 1),
            tuple: realize_pair(k, j, -PROBE_T)?,
        });
    }
    Ok(probes)
}

/// Solves for the form from evaluations at [`recovery_probes`], in order.
///
/// At the real probe the value is `α + 2t Re α_kj`, at the imaginary probe
/// `α − 2t Im α_kj`, and at the identity `α + 2 Σ Re α_kj`.
pub fn solve_recovery(n: usize, values: &[f64], tol: &Tolerances) -> Result<QuadraticForm> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|k| (k + 1..n).map(move |j| (k, j))).collect();
    let np = pairs.len();
    let expected = 1 + 3 * np;
    if values.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "expected {expected} evaluations for n = {n}, got {}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite evaluation {v}")));
    }
    let v0 = values[0];
    let real: Vec<f64> = (0..np).map(|p| values[1 + 2 * p]).collect();
    let imag: Vec<f64> = (0..np).map(|p| values[2 + 2 * p]).collect();
    let check = &values[1 + 2 * np..];

    // v0 = α + Σ_p (v_real_p − α) / t
    let alpha = if np == 0 {
        v0
    } else {
        (real.iter().sum::<f64>() / PROBE_T - v0) / (np as f64 / PROBE_T - 1.0)
    };
    let mut a = CMatrix::zeros(n, n);
    let mut residual: f64 = 0.0;
    for (p, &(k, j)) in pairs.iter().enumerate() {
        let re = (real[p] - alpha) / (2.0 * PROBE_T);
        let im = (alpha - imag[p]) / (2.0 * PROBE_T);
        a[(k, j)] = Complex64::new(re, im);
        a[(j, k)] = Complex64::new(re, -im);
        residual = residual.max((alpha - 2.0 * PROBE_T * re - check[p]).abs());
    }
    if residual > tol.recovery_residual {
        return Err(Error::invariant(
            "consistent evaluations of a quadratic form",
            format!("check-probe residual {residual:.3e}"),
        ));
    }
    for i in 0..n {
        a[(i, i)] = Complex64::new(alpha / n as f64, 0.0);
    }
    QuadraticForm::from_coefficient_matrix(a, tol.hermitian)
}

/// Recovers a quadratic form from a black-box trace evaluator.
pub fn coefficient_recovery<F>(mut evaluate: F, n: usize, tol: &Tolerances) -> Result<QuadraticForm>
where
    F: FnMut(&UnitaryTuple) -> Result<f64>,
{
    let values = recovery_probes(n, tol)?
        .iter()
        .map(|p| evaluate(&p.tuple))
        .collect::<Result<Vec<_>>>()?;
    solve_recovery(n, &values, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_algebra::diagonally_equivalent;
    use crate::random::{random_hermitian, random_psd, random_real_symmetric, random_word};

    const T: Tolerances = Tolerances::DEFAULT;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn real(rows: &[&[f64]]) -> CMatrix {
        CMatrix::from_fn(rows.len(), rows[0].len(), |i, j| c(rows[i][j]))
    }

    fn form(a: CMatrix) -> QuadraticForm {
        QuadraticForm::from_coefficient_matrix(a, 1e-12).unwrap()
    }

    fn u(g: u32) -> AlgebraElement {
        AlgebraElement::generator(g)
    }

    #[test]
    fn dd_identity_gives_the_generators() {
        let q = form(real(&[&[1.0, 0.0], &[0.0, 1.0]]));
        let cert = diagonally_dominant_cert(&q, 0.0, &T).unwrap();
        let forms = cert.linear_forms();
        assert_eq!(forms, vec![u(1), u(2)]);
        assert!(verify_sos(&cert, &q, &T));
    }

    #[test]
    fn dd_ones_gives_one_square() {
        let q = form(real(&[&[1.0, 1.0], &[1.0, 1.0]]));
        let cert = diagonally_dominant_cert(&q, 0.0, &T).unwrap();
        assert_eq!(cert.linear_forms(), vec![&u(1) + &u(2)]);
        // (u1+u2)*(u1+u2) = 2e + u1^-1 u2 + u2^-1 u1
        assert_eq!(cert.expand(), q.to_element());
        assert!(verify_sos(&cert, &q, &T));
    }

    #[test]
    fn dd_fails_below_the_bound() {
        let q = form(real(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert!(diagonally_dominant_cert(&q, 0.0, &T).is_none());
        assert!(diagonally_dominant_cert(&q, 2.0, &T).is_some());
    }

    #[test]
    fn dd_handles_complex_and_unequal_rows() {
        let mut rng = stream_rng(31, 0);
        for n in 2..=5 {
            let mut a = random_hermitian(n, &mut rng);
            let bound: f64 = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .map(|(i, j)| a[(i, j)].norm())
                .sum();
            for i in 0..n {
                a[(i, i)] = c(bound / n as f64 + 0.01);
            }
            let q = form(a);
            let cert = diagonally_dominant_cert(&q, 0.0, &T).unwrap();
            assert!(verify_sos(&cert, &q, &T));
            assert!(diagonally_equivalent(&cert.coefficient_matrix(), q.matrix(), 1e-12));
        }
    }

    #[test]
    fn shift_examples() {
        let opts = ShiftOptions::default();
        let r = diagonal_shift_maximize(&real(&[&[0.0, 1.0], &[1.0, 0.0]]), &opts).unwrap();
        assert!((r.lambda_star + 1.0).abs() < 1e-8);
        assert!(r.shift.values().iter().all(|d| d.abs() < 1e-4));
        assert!(r.converged);

        let r = diagonal_shift_maximize(&CMatrix::identity(3, 3), &opts).unwrap();
        assert!((r.lambda_star - 1.0).abs() < 1e-8);
        assert!(r.shift.values().iter().all(|d| d.abs() < 1e-6));

        let r = diagonal_shift_maximize(&real(&[&[1.0, 1.0], &[1.0, 1.0]]), &opts).unwrap();
        assert!(r.lambda_star.abs() < 1e-8 && r.lambda_star >= -1e-9, "{}", r.lambda_star);
    }

    #[test]
    fn shift_analytic_two_by_two() {
        // λ_min([[a+d, b], [b, a-d]]) = a − √(d² + |b|²), maximal at d = 0.
        let r = diagonal_shift_maximize(&real(&[&[0.3, -2.0], &[-2.0, 0.3]]), &ShiftOptions::default()).unwrap();
        assert!((r.lambda_star - (0.3 - 2.0)).abs() < 1e-8);
    }

    #[test]
    fn shift_lambda_is_a_lower_bound_with_small_gap() {
        let mut rng = stream_rng(32, 0);
        for n in 2..=8 {
            let a = random_hermitian(n, &mut rng);
            let r = diagonal_shift_maximize(&a, &ShiftOptions::default()).unwrap();
            assert!(r.converged, "n={n} {r:?}");
            assert!(r.upper_bound - r.lambda_star <= 1e-8);
            assert!(r.upper_bound >= r.lambda_star - 1e-12);
            let check = hermitian_eig(&r.shift.apply(&a), 1e-10).unwrap().min();
            assert_eq!(check, r.lambda_star);
            assert!(r.shift.values().iter().sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn supergradient_improves_and_agrees_roughly() {
        let mut rng = stream_rng(33, 0);
        let a = random_real_symmetric(4, &mut rng);
        let start = DiagonalShift::zero(4);
        let at_zero = hermitian_eig(&a, 1e-10).unwrap().min();
        let sg = supergradient_ascent(&a, &start, 2000, &T).unwrap();
        let exact = diagonal_shift_maximize(&a, &ShiftOptions::default()).unwrap();
        assert!(sg.lambda_star >= at_zero);
        assert!(sg.lambda_star <= exact.lambda_star + 1e-9);
        assert!(exact.lambda_star - sg.lambda_star < 5e-2);
        // optimum with zero supergradient: identity
        let sg = supergradient_ascent(&CMatrix::identity(3, 3), &DiagonalShift::zero(3), 10, &T).unwrap();
        assert!(sg.converged);
    }

    #[test]
    fn psd_examples() {
        let b = real(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let cert = psd_to_sos(&b, 0.0, DiagonalShift::zero(2), &T).unwrap();
        assert_eq!(cert.squares.len(), 1);
        let h = &cert.linear_forms()[0];
        // h = ±(u1 + u2) up to a global phase
        let ratio = h.coefficient(&Word::generator(2)) / h.coefficient(&Word::generator(1));
        assert!((ratio - c(1.0)).norm() < 1e-12);
        assert!((h.coefficient(&Word::generator(1)).norm() - 1.0).abs() < 1e-12);

        let cert = psd_to_sos(&CMatrix::identity(2, 2), 0.0, DiagonalShift::zero(2), &T).unwrap();
        assert_eq!(cert.squares.len(), 2);
        assert!(cert.expand().approx_eq(&AlgebraElement::scalar(c(2.0)), 1e-12));

        assert!(psd_to_sos(&real(&[&[0.0, 1.0], &[1.0, 0.0]]), 0.0, DiagonalShift::zero(2), &T).is_err());
    }

    #[test]
    fn psd_expansion_matches_element() {
        let mut rng = stream_rng(34, 0);
        for n in 1..=5 {
            for rank in 1..=n {
                let b = random_psd(n, rank, &mut rng);
                let cert = psd_to_sos(&b, 0.0, DiagonalShift::zero(n), &T).unwrap();
                let expanded = cert.expand();
                let direct = coefficient_matrix_to_element(&b);
                assert!(expanded.approx_eq(&direct, 1e-9));
                // the form's diagonal is normalized, so compare modulo commutators
                assert!(verify_sos(&cert, &form(b), &T));
            }
        }
    }

    #[test]
    fn tampered_certificate_fails() {
        let mut rng = stream_rng(35, 0);
        let b = random_psd(3, 3, &mut rng);
        let q = form(b.clone());
        let mut cert = psd_to_sos(&b, 0.0, DiagonalShift::zero(3), &T).unwrap();
        assert!(verify_sos(&cert, &q, &T));
        cert.squares[0][1] += c(0.1);
        assert!(!verify_sos(&cert, &q, &T));
    }

    #[test]
    fn shifted_certificate_still_verifies() {
        // [[2, 1], [1, 0]] is not PSD but shifting by diag(-1, 1) gives the ones matrix.
        let a = real(&[&[2.0, 1.0], &[1.0, 0.0]]);
        let shift = DiagonalShift::new(vec![-1.0, 1.0], 1e-12).unwrap();
        let cert = psd_to_sos(&shift.apply(&a), 0.0, shift, &T).unwrap();
        assert!(verify_sos(&cert, &form(a), &T));
    }

    #[test]
    fn certify_examples() {
        let opts = CertifyOptions::default();
        let shifted = form(real(&[&[1.0, 1.0], &[1.0, 1.0]]));
        match certify(&shifted, 0.0, &opts).unwrap() {
            Verdict::Certificate { certificate, .. } => {
                assert_eq!(certificate.squares.len(), 1);
                assert!(verify_sos(&certificate, &shifted, &T));
            }
            other => panic!("expected certificate, got {other:?}"),
        }

        let coupling = form(real(&[&[0.0, 1.0], &[1.0, 0.0]]));
        match certify(&coupling, 0.0, &opts).unwrap() {
            Verdict::Refutation { value, witness, .. } => {
                assert!((value + 2.0).abs() < 1e-9);
                assert!((trace_evaluate(&coupling, &witness, &T).unwrap() - value).abs() < 1e-12);
            }
            other => panic!("expected refutation, got {other:?}"),
        }

        let unit = form(real(&[&[1.0]]));
        assert!(matches!(certify(&unit, 0.0, &opts).unwrap(), Verdict::Certificate { .. }));
        assert!(certify(&unit, -1.0, &opts).is_err());
    }

    #[test]
    fn certify_via_shift_when_not_diagonally_dominant() {
        // rank one and PSD, but tr A = 3 < Σ|a_ij| = 6
        let q = form(real(&[&[1.0, 1.0, -1.0], &[1.0, 1.0, -1.0], &[-1.0, -1.0, 1.0]]));
        assert!(diagonally_dominant_cert(&q, 0.0, &T).is_none());
        match certify(&q, 0.0, &CertifyOptions::default()).unwrap() {
            Verdict::Certificate { certificate, lambda_star } => {
                assert!(lambda_star >= -1e-9);
                assert!(verify_sos(&certificate, &q, &T));
            }
            other => panic!("expected certificate, got {other:?}"),
        }
    }

    #[test]
    fn certify_is_monotone_in_epsilon() {
        let mut rng = stream_rng(36, 0);
        let opts = CertifyOptions {
            dims: vec![1, 2],
            restarts: 4,
            ..CertifyOptions::default()
        };
        for _ in 0..6 {
            let q = form(random_real_symmetric(3, &mut rng));
            let mut certified = false;
            for eps in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
                let v = certify(&q, eps, &opts).unwrap();
                let is_cert = matches!(v, Verdict::Certificate { .. });
                assert!(!certified || is_cert, "lost certificate at eps {eps}");
                certified |= is_cert;
            }
            assert!(certified);
        }
    }

    #[test]
    fn dominance_implies_psd_shift() {
        let mut rng = stream_rng(37, 0);
        for _ in 0..20 {
            let q = form(random_hermitian(4, &mut rng));
            if diagonally_dominant_cert(&q, 0.0, &T).is_some() {
                let r = diagonal_shift_maximize(q.matrix(), &ShiftOptions::default()).unwrap();
                assert!(r.lambda_star >= -1e-9);
            }
            let big = q.shifted(20.0);
            assert!(diagonally_dominant_cert(&q, 20.0, &T).is_some());
            let r = diagonal_shift_maximize(big.matrix(), &ShiftOptions::default()).unwrap();
            assert!(r.lambda_star >= -1e-9);
        }
    }

    #[test]
    fn lemma_examples() {
        let mut rng = stream_rng(38, 0);
        let a = random_hermitian(3, &mut rng);
        let target = coefficient_matrix_to_element(&a);

        let single = LemmaDecomposition { pairs: vec![(Word::unit(), a.clone())] };
        assert_eq!(build_lemma_element(&single), target);

        let half = a.scale(0.5);
        let split = LemmaDecomposition {
            pairs: vec![(Word::unit(), half.clone()), (Word::generator(1), half)],
        };
        assert!(split.sums_to(&a, 1e-12));
        let built = build_lemma_element(&split);
        assert!(!built.approx_eq(&target, 1e-9));
        assert!(cyc_equivalent(&built, &target, 1e-12));

        let mut shifted = a.clone();
        shifted[(0, 0)] += c(1.0);
        shifted[(1, 1)] -= c(1.0);
        let g = random_word(4, 3, &mut rng);
        let l = LemmaDecomposition { pairs: vec![(g, shifted)] };
        assert!(l.sums_to(&a, 1e-12));
        assert!(cyc_equivalent(&build_lemma_element(&l), &target, 1e-12));
    }

    fn planted(q: &QuadraticForm) -> impl FnMut(&UnitaryTuple) -> Result<f64> + '_ {
        move |t| trace_evaluate(q, t, &T)
    }

    #[test]
    fn recovery_of_planted_coupling() {
        let q = form(real(&[&[0.0, 1.0], &[1.0, 0.0]]));
        let r = coefficient_recovery(planted(&q), 2, &T).unwrap();
        assert!(max_abs(&(r.matrix() - q.matrix())) < 1e-12);
    }

    #[test]
    fn recovery_of_zero() {
        let r = coefficient_recovery(|_| Ok(0.0), 3, &T).unwrap();
        assert_eq!(max_abs(r.matrix()), 0.0);
    }

    #[test]
    fn recovery_of_random_forms() {
        let mut rng = stream_rng(39, 0);
        for n in 1..=4 {
            let q = form(random_hermitian(n, &mut rng));
            let r = coefficient_recovery(planted(&q), n, &T).unwrap();
            assert!(max_abs(&(r.matrix() - q.matrix())) < 1e-8, "n={n}");
        }
    }

    #[test]
    fn recovery_rejects_inconsistent_evaluations() {
        let probes = recovery_probes(3, &T).unwrap();
        assert_eq!(probes.len(), 10);
        let mut values = vec![0.0; probes.len()];
        *values.last_mut().unwrap() = 1.0;
        assert!(solve_recovery(3, &values, &T).is_err());
        assert!(solve_recovery(3, &values[..5], &T).is_err());
        // a non-quadratic evaluator: |tr V_1 V_2|^2 is not linear in the Gram matrix
        let bad = |t: &UnitaryTuple| -> Result<f64> {
            let g = t.gram_matrix();
            Ok(10.0 * g[(0, 1)].norm_sqr())
        };
        assert!(coefficient_recovery(bad, 2, &T).is_err());
    }
}
