//! Pauli-chain representation of the Clifford algebra and realization of
//! real correlation matrices as trace-Gram matrices of symmetries.
//!
//! With `U = diag(1, -1)` and the flip `Q`, the chain
//! `Q_j = U ⊗ … ⊗ U ⊗ Q ⊗ I ⊗ … ⊗ I` (`j - 1` copies of `U`, `n` factors)
//! consists of pairwise anticommuting symmetries of dimension `2^n`. For a
//! unit vector `x`, `J(x) = Σ x_j Q_j` is again a symmetry and
//! `tr(J(x) J(y)) = <x, y>`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_unit_vectors, hermitian_eig, identity, kron, CMatrix, UnitaryMatrix, ONE, ZERO,
};
use crate::positivity::UnitaryTuple;
use crate::tolerances::Tolerances;

/// Largest chain built unless the caller raises it.
pub const DEFAULT_CHAIN_CAP: usize = 9;

/// Real symmetric positive semidefinite matrix with unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix(DMatrix<f64>);

impl CorrelationMatrix {
    /// Validates symmetry, the unit diagonal and positivity (eigenvalues
    /// below `-correlation_psd` are rejected). The diagonal is then set to
    /// exactly one and the matrix symmetrized.
    pub fn new(p: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let n = p.nrows();
        if n == 0 || p.ncols() != n {
            return Err(Error::Dimension(format!(
                "correlation matrix must be square and non-empty, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::invariant("finite entries", "matrix contains NaN or inf"));
        }
        for i in 0..n {
            if (p[(i, i)] - 1.0).abs() > tol.correlation_entry {
                return Err(Error::invariant(
                    "unit diagonal",
                    format!("P[{i}][{i}] = {}", p[(i, i)]),
                ));
            }
            for j in 0..i {
                if (p[(i, j)] - p[(j, i)]).abs() > tol.correlation_entry {
                    return Err(Error::invariant(
                        "symmetric matrix",
                        format!("P[{i}][{j}] = {} but P[{j}][{i}] = {}", p[(i, j)], p[(j, i)]),
                    ));
                }
            }
        }
        let mut sym = (&p + p.transpose()) * 0.5;
        for i in 0..n {
            sym[(i, i)] = 1.0;
        }
        let complex = sym.map(|v| Complex64::new(v, 0.0));
        let lambda_min = hermitian_eig(&complex, tol.hermitian)?.min();
        if lambda_min < -tol.correlation_psd {
            return Err(Error::invariant(
                "positive semidefinite correlation matrix",
                format!("smallest eigenvalue {lambda_min:.3e}"),
            ));
        }
        Ok(CorrelationMatrix(sym))
    }

    /// Gram matrix of the given vectors after normalizing each.
    pub fn from_vectors(vectors: &[DVector<f64>]) -> Result<Self> {
        let n = vectors.len();
        let units: Vec<DVector<f64>> = vectors
            .iter()
            .map(|v| {
                let norm = v.norm();
                if norm == 0.0 {
                    Err(Error::InvalidArgument("zero vector has no direction".into()))
                } else {
                    Ok(v / norm)
                }
            })
            .collect::<Result<_>>()?;
        let p = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { units[i].dot(&units[j]) });
        Self::new(p, &Tolerances::DEFAULT)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `n` pairwise anticommuting real symmetries of dimension `2^n`.
#[derive(Clone, Debug)]
pub struct PauliChain {
    generators: Vec<CMatrix>,
}

impl PauliChain {
    pub fn n(&self) -> usize {
        self.generators.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    /// `Q_j`, 1-based.
    pub fn generator(&self, j: usize) -> &CMatrix {
        &self.generators[j - 1]
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }
}

pub fn pauli_u() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn pauli_q() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

/// Builds `Q_1, …, Q_n`. Fails with a resource error above `cap`.
pub fn pauli_chain(n: usize, cap: usize) -> Result<PauliChain> {
    if n == 0 {
        return Err(Error::InvalidArgument("chain length must be at least 1".into()));
    }
    if n > cap {
        return Err(Error::Resource(format!(
            "Pauli chain of length {n} needs {0}x{0} matrices; cap is {cap}",
            1u64 << n.min(63)
        )));
    }
    let (u, q, i2) = (pauli_u(), pauli_q(), identity(2));
    let generators = (1..=n)
        .map(|j| {
            let mut acc = identity(1);
            for k in 1..=n {
                let factor = match k.cmp(&j) {
                    std::cmp::Ordering::Less => &u,
                    std::cmp::Ordering::Equal => &q,
                    std::cmp::Ordering::Greater => &i2,
                };
                acc = kron(&acc, factor);
            }
            acc
        })
        .collect();
    Ok(PauliChain { generators })
}

/// Shared chains, built once per length.
pub fn cached_pauli_chain(n: usize, cap: usize) -> Result<Arc<PauliChain>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<PauliChain>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if n <= cap {
        if let Some(chain) = cache.read().expect("chain cache poisoned").get(&n) {
            return Ok(Arc::clone(chain));
        }
    }
    let chain = Arc::new(pauli_chain(n, cap)?);
    cache
        .write()
        .expect("chain cache poisoned")
        .entry(n)
        .or_insert_with(|| Arc::clone(&chain));
    Ok(chain)
}

/// `J(x) = Σ_j x_j Q_j` for a unit vector `x`.
pub fn clifford_element(x: &DVector<f64>, chain: &PauliChain, tol: &Tolerances) -> Result<UnitaryMatrix> {
    if x.len() != chain.n() {
        return Err(Error::Dimension(format!(
            "vector of length {} for a chain of length {}",
            x.len(),
            chain.n()
        )));
    }
    let norm = x.norm();
    if (norm - 1.0).abs() > tol.unit_vector {
        return Err(Error::invariant(
            "unit vector",
            format!("|x| = {norm}"),
        ));
    }
    let d = chain.dim();
    let mut j = CMatrix::zeros(d, d);
    for (k, q) in chain.generators.iter().enumerate() {
        if x[k] != 0.0 {
            j += q * Complex64::new(x[k], 0.0);
        }
    }
    Ok(UnitaryMatrix::trusted(j))
}

/// Symmetries `S_1, …, S_n` of dimension `2^n` with `tr(S_i* S_j) = P_ij`.
pub fn realize_correlation(p: &CorrelationMatrix, cap: usize, tol: &Tolerances) -> Result<UnitaryTuple> {
    let n = p.n();
    let chain = cached_pauli_chain(n, cap)?;
    let vectors = cholesky_unit_vectors(p, tol);
    let matrices = vectors
        .iter()
        .map(|v| {
            // zero-pad R^r into R^n so the chain length stays n
            let mut x = DVector::zeros(n);
            x.rows_mut(0, v.len()).copy_from(v);
            clifford_element(&x, &chain, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    UnitaryTuple::from_trusted(matrices)
}

/// Largest entrywise deviation between the trace-Gram matrix of `t` and `p`.
pub fn gram_error(t: &UnitaryTuple, p: &CorrelationMatrix) -> f64 {
    let g = t.gram_matrix();
    let n = p.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((g[(i, j)] - Complex64::new(p.matrix()[(i, j)], 0.0)).norm());
        }
    }
    worst
}
