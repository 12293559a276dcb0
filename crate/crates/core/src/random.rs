//! Seeded random instances used by the self-test and the test suites.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::clifford::CorrelationMatrix;
use crate::group_algebra::{Letter, Word};
use crate::linalg::{haar_sample, CMatrix};
use crate::positivity::UnitaryTuple;

pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

/// Gram matrix of `n` independent uniformly random unit vectors in `R^n`.
pub fn random_correlation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CorrelationMatrix {
    let vs: Vec<DVector<f64>> = (0..n).map(|_| random_unit_vector(n, rng)).collect();
    CorrelationMatrix::from_vectors(&vs).expect("Gram of unit vectors is a correlation matrix")
}

/// Hermitian matrix with entries uniform in the unit square (off-diagonal)
/// and real uniform in `[-1, 1]` on the diagonal.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
        }
    }
    a
}

pub fn random_real_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    random_hermitian(n, rng).map(|z| Complex64::new(z.re, 0.0))
}

/// `G G*` for a Gaussian `n x rank` matrix.
pub fn random_psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, rank, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let b = &g * g.adjoint();
    (&b + b.adjoint()).scale(0.5)
}

/// Random freely reduced word of length at most `max_len` over `u_1..u_gens`.
pub fn random_word<R: Rng + ?Sized>(max_len: usize, gens: u32, rng: &mut R) -> Word {
    let len = rng.random_range(0..=max_len);
    Word::from_letters((0..len).map(|_| {
        let g = rng.random_range(1..=gens);
        if rng.random_bool(0.5) {
            Letter::pos(g)
        } else {
            Letter::neg(g)
        }
    }))
}

pub fn random_unitary_tuple<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> UnitaryTuple {
    UnitaryTuple::from_trusted((0..n).map(|_| haar_sample(m, rng)).collect())
        .expect("Haar samples share a dimension")
}

pub fn real_matrix(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}
