//! Dense complex matrix primitives: Hermitian eigendecomposition, pivoted
//! Cholesky, polar decomposition, Kronecker/direct-sum assembly and Haar
//! sampling. Storage and factorizations come from `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::clifford::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::group_algebra::check_hermitian;
use crate::tolerances::Tolerances;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn identity(m: usize) -> CMatrix {
    CMatrix::identity(m, m)
}

/// Normalized trace: `Tr(M) / m`, so `tr(I) = 1`.
pub fn normalized_trace(m: &CMatrix) -> Complex64 {
    m.trace() / m.nrows() as f64
}

/// `tr(A* B)` without forming the product.
pub fn normalized_trace_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.shape(), b.shape());
    let s: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    s / a.nrows() as f64
}

/// Dense product that skips zero entries of the left factor. Exact; fast for
/// the signed-permutation matrices of the Pauli chain.
pub fn mul_skip_zeros(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let mut out = CMatrix::zeros(a.nrows(), b.ncols());
    for k in 0..a.ncols() {
        for i in 0..a.nrows() {
            let aik = a[(i, k)];
            if aik == ZERO {
                continue;
            }
            for j in 0..b.ncols() {
                out[(i, j)] += aik * b[(k, j)];
            }
        }
    }
    out
}

/// Max entry of `U*U - I`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let m = u.nrows();
    max_abs(&(u.adjoint() * u - identity(m)))
}

/// A square matrix validated to be unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(u: CMatrix, tol: f64) -> Result<Self> {
        if u.nrows() != u.ncols() || u.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "unitary must be square and non-empty, got {}x{}",
                u.nrows(),
                u.ncols()
            )));
        }
        let defect = unitarity_defect(&u);
        if defect > tol {
            return Err(Error::invariant(
                "unitarity |U*U - I| <= tol",
                format!("max |U*U - I| = {defect:.3e}"),
            ));
        }
        Ok(UnitaryMatrix(u))
    }

    /// For matrices unitary by construction; skips the `O(m^3)` check.
    pub(crate) fn trusted(u: CMatrix) -> Self {
        debug_assert!(u.nrows() == u.ncols());
        UnitaryMatrix(u)
    }

    pub fn identity(m: usize) -> Self {
        UnitaryMatrix(identity(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        UnitaryMatrix(self.0.adjoint())
    }

    pub fn mul(&self, other: &UnitaryMatrix) -> Self {
        UnitaryMatrix(&self.0 * &other.0)
    }

    pub fn scale(&self, phase: Complex64) -> Self {
        UnitaryMatrix(self.0.map(|z| z * phase))
    }

    pub fn normalized_trace(&self) -> Complex64 {
        normalized_trace(&self.0)
    }
}

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` pairs with `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn vector(&self, k: usize) -> DVector<Complex64> {
        self.vectors.column(k).into_owned()
    }
}

/// Eigendecomposition `H = V diag(values) V*` with values ascending.
pub fn hermitian_eig(h: &CMatrix, tol: f64) -> Result<HermitianEigen> {
    check_hermitian(h, tol)?;
    let n = h.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(HermitianEigen { values, vectors })
}

pub fn min_eigenvalue(h: &CMatrix, tol: f64) -> Result<f64> {
    Ok(hermitian_eig(h, tol)?.min())
}

/// Real pivoted Cholesky: rows `x_i` with `<x_i, x_j> = P_ij`, truncated once
/// the largest remaining pivot drops below `rank_tol * max_diag`.
/// Returns an `n x r` matrix, rows in the original index order.
pub fn pivoted_cholesky(p: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let n = p.nrows();
    let scale = (0..n).map(|i| p[(i, i)]).fold(0.0, f64::max);
    let mut residual = p.clone();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut used = vec![false; n];
    let mut rank = 0;
    for k in 0..n {
        // first index attaining the max keeps ties deterministic
        let mut piv = None;
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            if !used[i] && residual[(i, i)] > best {
                best = residual[(i, i)];
                piv = Some(i);
            }
        }
        let Some(piv) = piv else { break };
        if best <= rank_tol * scale || best <= 0.0 {
            break;
        }
        used[piv] = true;
        let root = best.sqrt();
        for i in 0..n {
            l[(i, k)] = if i == piv {
                root
            } else if used[i] {
                0.0
            } else {
                residual[(i, piv)] / root
            };
        }
        for i in 0..n {
            for j in 0..n {
                residual[(i, j)] -= l[(i, k)] * l[(j, k)];
            }
        }
        rank += 1;
    }
    l.columns(0, rank).into_owned()
}

/// Unit vectors whose Gram matrix is `P`, in `R^r` with `r` the numerical
/// rank. Each row is renormalized to absorb the truncated residual.
pub fn cholesky_unit_vectors(p: &CorrelationMatrix, tol: &Tolerances) -> Vec<DVector<f64>> {
    let l = pivoted_cholesky(p.matrix(), tol.cholesky_rank);
    (0..l.nrows())
        .map(|i| {
            let row: DVector<f64> = l.row(i).transpose();
            let norm = row.norm();
            if norm > 0.0 {
                row / norm
            } else {
                row
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Polar {
    pub unitary: UnitaryMatrix,
    pub positive: CMatrix,
    /// Smallest singular value fell below the singular threshold; the unitary
    /// factor then depends on the SVD's (deterministic) null-space basis.
    pub singular: bool,
}

/// `M = W P` with `W` unitary and `P` positive semidefinite, via the SVD.
pub fn polar(m: &CMatrix, tol: &Tolerances) -> Result<Polar> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "polar decomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 1 {
        let z = m[(0, 0)];
        let r = z.norm();
        let singular = r <= tol.polar_singular;
        let w = if r > 0.0 { z / r } else { ONE };
        return Ok(Polar {
            unitary: UnitaryMatrix(CMatrix::from_element(1, 1, w)),
            positive: CMatrix::from_element(1, 1, Complex64::new(r, 0.0)),
            singular,
        });
    }
    if max_abs(m) == 0.0 {
        return Ok(Polar {
            unitary: UnitaryMatrix::identity(n),
            positive: CMatrix::zeros(n, n),
            singular: true,
        });
    }
    // Singular values from the Hermitian eigensolver; nalgebra's complex SVD
    // is not reliable when singular values cluster.
    let gram = m.adjoint() * m;
    let sq = hermitian_eig(&((&gram + gram.adjoint()).scale(0.5)), f64::INFINITY)?;
    let sigma_max = sq.values.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    let sigma_min = sq.values[0].max(0.0).sqrt();
    let singular = sigma_min <= tol.polar_singular;
    let unitary = if sigma_min > 1e-8 * sigma_max {
        newton_polar(m)
    } else {
        // M = W·H with H null on ker M, so M + εW has polar factor exactly W;
        // the iteration then only polishes the range part.
        let w0 = completed_polar(m, &sq, 1e-8 * sigma_max, tol)?;
        newton_polar(&(m + &w0 * Complex64::new(1e-10 * sigma_max, 0.0))).or(Some(w0))
    }
    .ok_or_else(|| Error::invariant("convergent polar iteration", "matrix inverse failed"))?;
    let positive = unitary.adjoint() * m;
    Ok(Polar {
        unitary: UnitaryMatrix(unitary),
        positive: (&positive + positive.adjoint()).scale(0.5),
        singular,
    })
}

/// Scaled Newton iteration `X ← (ζX + X^{-*}/ζ)/2` for the unitary polar
/// factor of an invertible matrix.
/// Unitary factor of a rank-deficient `m`: `M v / σ` on the range, and on
/// `ker M` the unitary closest to the identity that maps it onto `ker M*`.
/// When the two kernels coincide this is the identity there.
fn completed_polar(m: &CMatrix, gram: &HermitianEigen, cut: f64, tol: &Tolerances) -> Result<CMatrix> {
    let n = m.nrows();
    let k = gram.values.iter().take_while(|&&v| v.max(0.0).sqrt() <= cut).count();
    let mut w = CMatrix::zeros(n, n);
    for i in k..n {
        let v = gram.vectors.column(i);
        let u = m * v / Complex64::new(gram.values[i].sqrt(), 0.0);
        w += u * v.adjoint();
    }
    let co = m * m.adjoint();
    let co = hermitian_eig(&((&co + co.adjoint()).scale(0.5)), f64::INFINITY)?;
    let kernel = gram.vectors.columns(0, k).into_owned();
    let cokernel = co.vectors.columns(0, k).into_owned();
    let overlap = cokernel.adjoint() * &kernel;
    let rotation = if max_abs(&overlap) == 0.0 {
        identity(k)
    } else {
        polar(&overlap, tol)?.unitary.0
    };
    Ok(w + cokernel * rotation * kernel.adjoint())
}

fn newton_polar(m: &CMatrix) -> Option<CMatrix> {
    let mut x = m.clone();
    let mut scaled = true;
    for _ in 0..100 {
        let inv = x.clone().try_inverse()?;
        let zeta = if scaled { (inv.norm() / x.norm()).sqrt() } else { 1.0 };
        let next = (x.scale(zeta) + inv.adjoint().scale(1.0 / zeta)).scale(0.5);
        let step = (&next - &x).norm() / next.norm();
        x = next;
        if step < 1e-2 {
            scaled = false;
        }
        if step < 1e-14 {
            break;
        }
    }
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(x)
}

/// Deterministic RNG for `(seed, stream)`. Independent streams give
/// independent sequences for parallel workers.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Haar-distributed unitary: Ginibre matrix, QR, then each column of `Q`
/// multiplied by the phase of the matching diagonal entry of `R`.
pub fn haar_sample<R: Rng + ?Sized>(m: usize, rng: &mut R) -> UnitaryMatrix {
    assert!(m >= 1, "dimension must be positive");
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(m, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * half, im * half)
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix(q)
}

pub fn haar_sample_seeded(m: usize, seed: u64) -> UnitaryMatrix {
    haar_sample(m, &mut stream_rng(seed, 0))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Block-diagonal assembly.
pub fn direct_sum(blocks: &[&CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}
