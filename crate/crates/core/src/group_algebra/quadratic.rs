use nalgebra::DMatrix;
use num_complex::Complex64;

use super::element::AlgebraElement;
use super::word::{Letter, Word};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMatrix};

/// Self-adjoint quadratic element `alpha e + sum_{i != j} alpha_ij u_i^{-1} u_j`
/// stored as its Hermitian coefficient matrix.
///
/// The diagonal is normalized to `alpha / n` on every entry, so two forms
/// that encode the same element compare equal entrywise.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    a: CMatrix,
}

impl QuadraticForm {
    /// Accepts any Hermitian matrix; the diagonal is replaced by its mean,
    /// which stays in the same diagonal-equivalence class.
    pub fn from_coefficient_matrix(a: CMatrix, tol: f64) -> Result<Self> {
        check_hermitian(&a, tol)?;
        let n = a.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "quadratic form needs at least one generator".into(),
            ));
        }
        let mut a = hermitian_part(&a);
        let mean = (0..n).map(|i| a[(i, i)].re).sum::<f64>() / n as f64;
        for i in 0..n {
            a[(i, i)] = Complex64::new(mean, 0.0);
        }
        Ok(QuadraticForm { a })
    }

    /// `alpha e + sum alpha_ij u_i^{-1} u_j` from the constant and the
    /// off-diagonal coefficients `(i, j, alpha_ij)` with 1-based indices.
    /// Missing mirror entries are filled by Hermitian closure; mirrors that
    /// are given must already be conjugate.
    pub fn from_terms(
        n: usize,
        alpha: f64,
        terms: &[(usize, usize, Complex64)],
        tol: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "quadratic form needs at least one generator".into(),
            ));
        }
        let mut a = CMatrix::zeros(n, n);
        let mut set = DMatrix::from_element(n, n, false);
        for &(i, j, v) in terms {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::InvalidArgument(format!(
                    "term ({i}, {j}) outside 1..={n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidArgument(format!(
                    "term ({i}, {j}) is diagonal; use alpha"
                )));
            }
            let (i, j) = (i - 1, j - 1);
            if set[(i, j)] {
                return Err(Error::InvalidArgument(format!(
                    "term ({}, {}) given twice",
                    i + 1,
                    j + 1
                )));
            }
            a[(i, j)] = v;
            set[(i, j)] = true;
        }
        for i in 0..n {
            for j in 0..n {
                if i == j || !set[(i, j)] {
                    continue;
                }
                if set[(j, i)] {
                    if (a[(j, i)] - a[(i, j)].conj()).norm() > tol {
                        return Err(Error::invariant(
                            "Hermitian coefficient matrix",
                            format!(
                                "terms ({}, {}) and ({}, {}) are not conjugate",
                                i + 1,
                                j + 1,
                                j + 1,
                                i + 1
                            ),
                        ));
                    }
                } else {
                    a[(j, i)] = a[(i, j)].conj();
                }
            }
        }
        for i in 0..n {
            a[(i, i)] = Complex64::new(alpha / n as f64, 0.0);
        }
        Ok(QuadraticForm { a })
    }

    /// Reads a quadratic self-adjoint element back into coefficient form.
    /// Every word must be `e` or `u_i^{-1} u_j` with `i != j`. `n` defaults to
    /// the largest generator present.
    pub fn from_element(f: &AlgebraElement, n: Option<usize>, tol: f64) -> Result<Self> {
        let n = n.unwrap_or(f.max_generator() as usize).max(1);
        let mut alpha = Complex64::new(0.0, 0.0);
        let mut terms = Vec::new();
        for (w, c) in f.terms() {
            match w.letters() {
                [] => alpha += c,
                [a, b]
                    if a.exponent() == super::Exponent::Neg
                        && b.exponent() == super::Exponent::Pos =>
                {
                    let (i, j) = (a.generator() as usize, b.generator() as usize);
                    if i > n || j > n {
                        return Err(Error::InvalidArgument(format!(
                            "word {w} uses a generator beyond n = {n}"
                        )));
                    }
                    terms.push((i, j, *c));
                }
                _ => {
                    return Err(Error::invariant(
                        "quadratic element",
                        format!("word {w} is not of the form u_i^-1 u_j"),
                    ))
                }
            }
        }
        if alpha.im.abs() > tol {
            return Err(Error::invariant(
                "self-adjoint element",
                format!("constant term has imaginary part {}", alpha.im),
            ));
        }
        Self::from_terms(n, alpha.re, &terms, tol)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// The constant `alpha` (trace of the coefficient matrix).
    pub fn alpha(&self) -> f64 {
        self.a.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    /// 1-based off-diagonal coefficient `alpha_ij`.
    pub fn coefficient(&self, i: usize, j: usize) -> Complex64 {
        self.a[(i - 1, j - 1)]
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.a.iter().all(|c| c.im.abs() <= tol)
    }

    pub fn to_element(&self) -> AlgebraElement {
        coefficient_matrix_to_element(&self.a)
    }

    /// `f + epsilon e`.
    pub fn shifted(&self, epsilon: f64) -> Self {
        let mut a = self.a.clone();
        let n = self.n() as f64;
        for i in 0..self.n() {
            a[(i, i)] += Complex64::new(epsilon / n, 0.0);
        }
        QuadraticForm { a }
    }
}

/// `sum_ij A_ij u_i^{-1} u_j`; the diagonal collapses to `(tr A) e`.
pub fn coefficient_matrix_to_element(a: &CMatrix) -> AlgebraElement {
    let n = a.nrows();
    let mut out = AlgebraElement::zero();
    for i in 0..n {
        for j in 0..n {
            let w = Word::from_letters([Letter::neg(i as u32 + 1), Letter::pos(j as u32 + 1)]);
            out.add_term(w, a[(i, j)]);
        }
    }
    out
}

/// `A - B` is diagonal with vanishing trace.
pub fn diagonally_equivalent(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    if a.shape() != b.shape() {
        return false;
    }
    let d = a - b;
    let n = d.nrows();
    let off = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .all(|(i, j)| d[(i, j)].norm() <= tol);
    off && d.diagonal().iter().all(|c| c.im.abs() <= tol) && d.trace().norm() <= tol * n as f64
}

pub(crate) fn check_hermitian(a: &CMatrix, tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let dev = max_abs(&(a - a.adjoint()));
    if dev > tol * max_abs(a).max(1.0) {
        return Err(Error::invariant(
            "Hermitian matrix",
            format!("max |A - A*| = {dev:.3e}"),
        ));
    }
    Ok(())
}

pub(crate) fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}
