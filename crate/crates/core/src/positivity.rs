//! Evaluation and numerical minimization of `tr f(V_1, …, V_n)` over tuples
//! of unitary matrices, plus the tuple constructions that move between
//! trace-Gram matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::CheckedAdd;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group_algebra::QuadraticForm;
use crate::linalg::{
    direct_sum, haar_sample, hermitian_eig, identity, kron, max_abs, normalized_trace_inner, polar,
    stream_rng, unitarity_defect, CMatrix, UnitaryMatrix,
};
use crate::tolerances::Tolerances;

/// Default dimension sweep for positivity probing.
pub const DEFAULT_DIMENSIONS: [usize; 4] = [1, 2, 4, 8];
pub const DEFAULT_RESTARTS: usize = 16;
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;
/// Largest matrix `convex_combine` will assemble.
pub const DEFAULT_COMBINE_CAP: usize = 4096;

/// `n` unitary matrices of a common dimension `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryTuple {
    matrices: Vec<UnitaryMatrix>,
}

impl UnitaryTuple {
    /// Validates each matrix for unitarity and the common dimension.
    pub fn new(matrices: Vec<CMatrix>, tol: &Tolerances) -> Result<Self> {
        let matrices = matrices
            .into_iter()
            .map(|m| UnitaryMatrix::new(m, tol.unitary))
            .collect::<Result<Vec<_>>>()?;
        Self::from_trusted(matrices)
    }

    /// Checks only the shape; the matrices are already known to be unitary.
    pub fn from_trusted(matrices: Vec<UnitaryMatrix>) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::InvalidArgument("empty unitary tuple".into()));
        };
        let m = first.dim();
        if let Some(bad) = matrices.iter().find(|u| u.dim() != m) {
            return Err(Error::Dimension(format!(
                "tuple mixes dimensions {m} and {}",
                bad.dim()
            )));
        }
        Ok(UnitaryTuple { matrices })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        UnitaryTuple {
            matrices: vec![UnitaryMatrix::identity(m); n],
        }
    }

    pub fn n(&self) -> usize {
        self.matrices.len()
    }

    pub fn m(&self) -> usize {
        self.matrices[0].dim()
    }

    pub fn matrices(&self) -> &[UnitaryMatrix] {
        &self.matrices
    }

    pub fn into_matrices(self) -> Vec<UnitaryMatrix> {
        self.matrices
    }

    /// Replaces `V_j` (0-based) by `phase · V_j`.
    pub fn with_phase(&self, j: usize, phase: Complex64) -> Self {
        let mut matrices = self.matrices.clone();
        matrices[j] = matrices[j].scale(phase);
        UnitaryTuple { matrices }
    }

    /// Largest `|V*V - I|` entry over the tuple.
    pub fn unitarity_defect(&self) -> f64 {
        self.matrices
            .iter()
            .map(|u| unitarity_defect(u.matrix()))
            .fold(0.0, f64::max)
    }

    /// `[tr(V_i* V_j)]` without validation.
    pub fn gram_matrix(&self) -> CMatrix {
        gram_of(&self.matrices.iter().map(|u| u.matrix()).collect::<Vec<_>>())
    }

    pub fn gram(&self, tol: &Tolerances) -> Result<GramMatrix> {
        GramMatrix::new(self.gram_matrix(), tol)
    }
}

fn gram_of(vs: &[&CMatrix]) -> CMatrix {
    let n = vs.len();
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = normalized_trace_inner(vs[i], vs[i]);
        for j in i + 1..n {
            let z = normalized_trace_inner(vs[i], vs[j]);
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    g
}

/// Trace-Gram matrix `X_ij = tr(V_i* V_j)`: Hermitian, positive semidefinite,
/// unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix(CMatrix);

impl GramMatrix {
    pub fn new(x: CMatrix, tol: &Tolerances) -> Result<Self> {
        let n = x.nrows();
        for i in 0..n {
            if (x[(i, i)] - Complex64::new(1.0, 0.0)).norm() > tol.unitary {
                return Err(Error::invariant(
                    "unit diagonal of a trace-Gram matrix",
                    format!("X[{i}][{i}] = {}", x[(i, i)]),
                ));
            }
        }
        let lambda = hermitian_eig(&x, tol.hermitian)?.min();
        if lambda < -tol.unitary {
            return Err(Error::invariant(
                "positive semidefinite trace-Gram matrix",
                format!("smallest eigenvalue {lambda:.3e}"),
            ));
        }
        Ok(GramMatrix(x))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

pub fn gram(t: &UnitaryTuple, tol: &Tolerances) -> Result<GramMatrix> {
    t.gram(tol)
}

/// Sum of the entries of the Schur product `A ∘ X`.
pub fn schur_sum(a: &CMatrix, x: &CMatrix) -> Complex64 {
    a.iter().zip(x.iter()).map(|(p, q)| p * q).sum()
}

/// `tr f(V_1, …, V_n)` (normalized trace), as the sum of the entries of the
/// Schur product of the coefficient matrix with the trace-Gram matrix.
pub fn trace_evaluate(q: &QuadraticForm, t: &UnitaryTuple, tol: &Tolerances) -> Result<f64> {
    if q.n() != t.n() {
        return Err(Error::Dimension(format!(
            "form on {} generators evaluated at a tuple of length {}",
            q.n(),
            t.n()
        )));
    }
    let z = schur_sum(q.matrix(), &t.gram_matrix());
    if z.im.abs() > tol.imaginary_residue * (1.0 + z.re.abs()) {
        return Err(Error::invariant(
            "real trace of a self-adjoint element",
            format!("imaginary residue {:.3e}", z.im),
        ));
    }
    Ok(z.re)
}

fn objective(a: &CMatrix, vs: &[CMatrix]) -> f64 {
    let refs: Vec<&CMatrix> = vs.iter().collect();
    schur_sum(a, &gram_of(&refs)).re
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub m: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    pub tol: Tolerances,
}

impl SearchOptions {
    pub fn new(m: usize, restarts: usize, seed: u64) -> Self {
        SearchOptions {
            m,
            restarts,
            seed,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            tol: Tolerances::DEFAULT,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InfimumResult {
    /// Best objective found; an upper bound on the infimum over `U(m)^n`.
    pub value: f64,
    pub witness: UnitaryTuple,
    pub m: usize,
    /// Restart that produced the witness.
    pub restart: usize,
    pub sweeps: usize,
    /// Objective after initialization and after each sweep of the winning restart.
    pub history: Vec<f64>,
    /// Block updates (over all restarts) whose polar factor was singular.
    pub singular_updates: usize,
    /// Every restart's objective was non-increasing across sweeps.
    pub monotone: bool,
}

struct RestartOutcome {
    value: f64,
    vs: Vec<CMatrix>,
    sweeps: usize,
    history: Vec<f64>,
    singular_updates: usize,
    monotone: bool,
}

/// `V_k ← -W`, where `W` is the unitary polar factor of
/// `M_k = Σ_{j≠k} A_kj V_j`. This minimizes the objective exactly over `V_k`.
pub(crate) fn block_update(a: &CMatrix, vs: &mut [CMatrix], k: usize, tol: &Tolerances) -> Result<bool> {
    let m = vs[k].nrows();
    let mut mk = CMatrix::zeros(m, m);
    for (j, v) in vs.iter().enumerate() {
        if j != k && a[(k, j)] != Complex64::new(0.0, 0.0) {
            mk += v * a[(k, j)];
        }
    }
    let p = polar(&mk, tol)?;
    vs[k] = -p.unitary.into_matrix();
    Ok(p.singular)
}

fn descend(a: &CMatrix, m: usize, seed: u64, restart: usize, opts: &SearchOptions) -> Result<RestartOutcome> {
    let n = a.nrows();
    let mut rng = stream_rng(seed, restart as u64);
    let mut vs: Vec<CMatrix> = (0..n).map(|_| haar_sample(m, &mut rng).into_matrix()).collect();
    let mut value = objective(a, &vs);
    let mut history = vec![value];
    let mut singular_updates = 0;
    let mut monotone = true;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        for k in 0..n {
            if block_update(a, &mut vs, k, &opts.tol)? {
                singular_updates += 1;
            }
        }
        sweeps += 1;
        let next = objective(a, &vs);
        history.push(next);
        if next > value + 1e-9 * (1.0 + value.abs()) {
            monotone = false;
        }
        debug_assert!(monotone, "block descent increased the objective: {value} -> {next}");
        let improvement = value - next;
        value = next;
        if improvement < opts.tol.descent_improvement {
            break;
        }
    }
    Ok(RestartOutcome {
        value,
        vs,
        sweeps,
        history,
        singular_updates,
        monotone,
    })
}

/// Multistart block coordinate descent for `min tr f(V_1, …, V_n)` over
/// `U(m)^n`. Restarts run in parallel, each on its own RNG stream; the
/// lowest value wins, ties going to the lowest restart index.
pub fn infimum_search(q: &QuadraticForm, opts: &SearchOptions) -> Result<InfimumResult> {
    if opts.m == 0 {
        return Err(Error::InvalidArgument("dimension m must be at least 1".into()));
    }
    let restarts = opts.restarts.max(1);
    let a = q.matrix();
    let outcomes = (0..restarts)
        .into_par_iter()
        .map(|r| descend(a, opts.m, opts.seed, r, opts))
        .collect::<Result<Vec<_>>>()?;
    let singular_updates = outcomes.iter().map(|o| o.singular_updates).sum();
    let monotone = outcomes.iter().all(|o| o.monotone);
    let (restart, best) = outcomes
        .into_iter()
        .enumerate()
        .reduce(|best, cur| if cur.1.value < best.1.value { cur } else { best })
        .expect("at least one restart");
    let witness = UnitaryTuple::from_trusted(best.vs.into_iter().map(UnitaryMatrix::trusted).collect())?;
    Ok(InfimumResult {
        value: best.value,
        witness,
        m: opts.m,
        restart,
        sweeps: best.sweeps,
        history: best.history,
        singular_updates,
        monotone,
    })
}

/// Seed used for dimension `m` inside a sweep, so each dimension draws
/// independent starting points.
pub fn dimension_seed(seed: u64, m: usize) -> u64 {
    seed.wrapping_add((m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs [`infimum_search`] for each dimension and keeps the lowest value.
/// Values equal up to rounding go to the earlier dimension.
pub fn infimum_sweep(
    q: &QuadraticForm,
    dims: &[usize],
    restarts: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<InfimumResult> {
    let mut best: Option<InfimumResult> = None;
    for &m in dims {
        let mut opts = SearchOptions::new(m, restarts, dimension_seed(seed, m));
        opts.tol = tol.clone();
        let r = infimum_search(q, &opts)?;
        // a larger m must beat the smaller one by more than rounding
        if best
            .as_ref()
            .is_none_or(|b| r.value < b.value - 1e-12 * (1.0 + b.value.abs()))
        {
            best = Some(r);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty dimension sweep".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeVerdict {
    /// A tuple with negative trace was found.
    Refuted,
    /// The search found nothing negative. Not a proof of positivity.
    NoViolationFound,
}

impl ProbeVerdict {
    pub fn from_value(value: f64, tol: &Tolerances) -> Self {
        if value < -tol.refute_margin {
            ProbeVerdict::Refuted
        } else {
            ProbeVerdict::NoViolationFound
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ProbeVerdict::Refuted => "refuted",
            ProbeVerdict::NoViolationFound => "no violation found",
        }
    }
}

/// `(W_0, W_1, …, W_n) ↦ (W_0* W_1, …, W_0* W_n)`. The Gram entries of the
/// output equal those of `W_1, …, W_n`, and `tr(V_j) = tr(W_0* W_j)`.
pub fn normalize_tuple(w: &UnitaryTuple) -> Result<UnitaryTuple> {
    if w.n() < 2 {
        return Err(Error::InvalidArgument(
            "normalization needs W_0 and at least one more matrix".into(),
        ));
    }
    let w0 = w.matrices[0].adjoint();
    UnitaryTuple::from_trusted(w.matrices[1..].iter().map(|wj| w0.mul(wj)).collect())
}

/// Realizes the convex combination `Σ_k (p_k/q) gram(T_k)` exactly.
///
/// With `L = lcm(m_k)`, block `k` of `V_j` is `V_{j,k} ⊗ I_{c_k}` where
/// `c_k = p_k L / m_k`; the blocks are stacked diagonally into dimension `qL`.
pub fn convex_combine(tuples: &[UnitaryTuple], weights: &[Ratio<u64>], max_dim: usize) -> Result<UnitaryTuple> {
    if tuples.is_empty() {
        return Err(Error::InvalidArgument("no tuples to combine".into()));
    }
    if tuples.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} tuples but {} weights",
            tuples.len(),
            weights.len()
        )));
    }
    let n = tuples[0].n();
    if let Some(t) = tuples.iter().find(|t| t.n() != n) {
        return Err(Error::Dimension(format!(
            "tuples of lengths {n} and {} cannot be combined",
            t.n()
        )));
    }
    if weights.iter().any(|w| *w.numer() == 0) {
        return Err(Error::InvalidArgument("weights must be positive".into()));
    }
    let total = weights
        .iter()
        .try_fold(Ratio::from_integer(0u64), |acc, w| acc.checked_add(w))
        .ok_or_else(|| Error::InvalidArgument("weight sum overflows".into()))?;
    if total != Ratio::from_integer(1) {
        return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
    }
    let q = weights.iter().fold(1u64, |acc, w| acc.lcm(w.denom()));
    let lcm_dim = tuples.iter().fold(1u64, |acc, t| acc.lcm(&(t.m() as u64)));
    let dim = q.checked_mul(lcm_dim).filter(|&d| d <= max_dim as u64).ok_or_else(|| {
        Error::Resource(format!(
            "combined dimension q·L = {q}·{lcm_dim} exceeds the cap {max_dim}"
        ))
    })? as usize;

    let copies: Vec<usize> = tuples
        .iter()
        .zip(weights)
        .map(|(t, w)| {
            let p = w.numer() * (q / w.denom());
            (p * lcm_dim / t.m() as u64) as usize
        })
        .collect();
    let matrices = (0..n)
        .map(|j| {
            let blocks: Vec<CMatrix> = tuples
                .iter()
                .zip(&copies)
                .map(|(t, &c)| kron(t.matrices[j].matrix(), &identity(c)))
                .collect();
            let refs: Vec<&CMatrix> = blocks.iter().collect();
            let v = direct_sum(&refs);
            debug_assert_eq!(v.nrows(), dim);
            UnitaryMatrix::trusted(v)
        })
        .collect();
    UnitaryTuple::from_trusted(matrices)
}

/// `Σ_k w_k · gram(T_k)`, evaluated in floating point.
pub fn weighted_gram(tuples: &[UnitaryTuple], weights: &[Ratio<u64>]) -> CMatrix {
    let n = tuples[0].n();
    let mut acc = CMatrix::zeros(n, n);
    for (t, w) in tuples.iter().zip(weights) {
        let w = *w.numer() as f64 / *w.denom() as f64;
        acc += t.gram_matrix() * Complex64::new(w, 0.0);
    }
    acc
}

/// `√(1 − |tr UV|²) ≤ √(1 − |tr U|²) + √(1 − |tr V|²)` at one pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WangCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl WangCheck {
    pub fn is_equality(&self, tol: f64) -> bool {
        (self.lhs - self.rhs).abs() <= tol
    }
}

/// `√(1 − |t|²)`. Arguments at rounding level are taken as zero: for a
/// scalar unitary `|t|² = 1` exactly, and the square root would otherwise
/// blow a 1e-16 rounding error up to 1e-8.
fn defect(t: Complex64) -> f64 {
    let x = 1.0 - t.norm_sqr();
    if x <= 16.0 * f64::EPSILON {
        0.0
    } else {
        x.sqrt()
    }
}

pub fn wang_from_traces(tr_u: Complex64, tr_v: Complex64, tr_uv: Complex64, tol: &Tolerances) -> WangCheck {
    let lhs = defect(tr_uv);
    let rhs = defect(tr_u) + defect(tr_v);
    WangCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + tol.wang,
    }
}

pub fn wang_check(u: &UnitaryMatrix, v: &UnitaryMatrix, tol: &Tolerances) -> Result<WangCheck> {
    Ok(k3_record(u, v, tol)?.wang)
}

/// One sample of the triple `(tr U, tr V, tr UV)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct K3Record {
    pub tr_u: Complex64,
    pub tr_v: Complex64,
    pub tr_uv: Complex64,
    pub wang: WangCheck,
}

pub fn k3_record(u: &UnitaryMatrix, v: &UnitaryMatrix, tol: &Tolerances) -> Result<K3Record> {
    if u.dim() != v.dim() {
        return Err(Error::Dimension(format!(
            "U is {0}x{0} but V is {1}x{1}",
            u.dim(),
            v.dim()
        )));
    }
    let tr_u = u.normalized_trace();
    let tr_v = v.normalized_trace();
    // tr(UV) = tr((U*)* V)
    let tr_uv = normalized_trace_inner(&u.matrix().adjoint(), v.matrix());
    Ok(K3Record {
        tr_u,
        tr_v,
        tr_uv,
        wang: wang_from_traces(tr_u, tr_v, tr_uv, tol),
    })
}

/// `count` Haar pairs `(U, V)` in `U(m)`, drawn from one deterministic stream.
pub fn sample_k3(count: usize, m: usize, seed: u64, tol: &Tolerances) -> Result<Vec<K3Record>> {
    if m == 0 {
        return Err(Error::InvalidArgument("dimension m must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| {
            let u = haar_sample(m, &mut rng);
            let v = haar_sample(m, &mut rng);
            k3_record(&u, &v, tol)
        })
        .collect()
}

/// Entrywise distance between two Gram matrices.
pub fn gram_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b))
}

/// Real part of a complex Gram matrix: the point of the real elliptope it
/// induces when the coefficients are real.
pub fn real_part(x: &CMatrix) -> DMatrix<f64> {
    x.map(|z| z.re)
}
