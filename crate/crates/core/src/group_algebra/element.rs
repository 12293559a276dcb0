use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::word::Word;

/// Finite complex linear combination of free-group words.
///
/// Terms are kept in a sorted map keyed by freely reduced words; exact zeros
/// are pruned after every operation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlgebraElement {
    terms: BTreeMap<Word, Complex64>,
}

impl AlgebraElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The unit `e`.
    pub fn unit() -> Self {
        Self::monomial(Word::unit(), Complex64::new(1.0, 0.0))
    }

    pub fn scalar(c: Complex64) -> Self {
        Self::monomial(Word::unit(), c)
    }

    pub fn monomial(word: Word, c: Complex64) -> Self {
        let mut out = Self::zero();
        out.add_term(word, c);
        out
    }

    pub fn word(word: Word) -> Self {
        Self::monomial(word, Complex64::new(1.0, 0.0))
    }

    pub fn generator(g: u32) -> Self {
        Self::word(Word::generator(g))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Word, Complex64)>) -> Self {
        let mut out = Self::zero();
        for (w, c) in terms {
            out.add_term(w, c);
        }
        out
    }

    /// Adds `c * word` in place.
    pub fn add_term(&mut self, word: Word, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let slot = self.terms.entry(word).or_insert(Complex64::new(0.0, 0.0));
        *slot += c;
        if *slot == Complex64::new(0.0, 0.0) {
            self.prune();
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &Word) -> Complex64 {
        self.terms.get(w).copied().unwrap_or_default()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, a)| (w.clone(), a * c)))
    }

    /// The involution: reverse each word, invert its letters, conjugate the
    /// coefficient.
    pub fn star(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, c)| (w.inverse(), c.conj())))
    }

    /// `a*a`.
    pub fn hermitian_square(&self) -> Self {
        &self.star() * self
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.approx_eq(&self.star(), tol)
    }

    /// True when every coefficient is real. Reporting only; real elements are
    /// not a separate type.
    pub fn has_real_coefficients(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn max_generator(&self) -> u32 {
        self.terms.keys().map(Word::max_generator).max().unwrap_or(0)
    }

    /// Per-coefficient comparison.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self - other).terms.values().all(|c| c.norm() <= tol)
    }

    /// Sums coefficients over conjugacy classes: each word is replaced by its
    /// cyclic canonical form. Two elements are cyclically equivalent exactly
    /// when the residue of their difference vanishes.
    pub fn cyclic_residue(&self) -> BTreeMap<Word, Complex64> {
        let mut out: BTreeMap<Word, Complex64> = BTreeMap::new();
        for (w, c) in &self.terms {
            *out.entry(w.cyclic_canonical()).or_default() += c;
        }
        out
    }

    /// Conjugates every word: `g a g^{-1}`.
    pub fn conjugate_by(&self, g: &Word) -> Self {
        Self::from_terms(self.terms.iter().map(|(w, c)| (w.conjugate_by(g), *c)))
    }
}

/// Outcome of a cyclic-equivalence test.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclicComparison {
    pub equivalent: bool,
    /// First canonical word (in word order) whose accumulated coefficient
    /// exceeds the tolerance, with that coefficient.
    pub first_difference: Option<(Word, Complex64)>,
}

/// `a - b` lies in the span of commutators.
pub fn cyc_equivalent(a: &AlgebraElement, b: &AlgebraElement, tol: f64) -> bool {
    compare_cyclic(a, b, tol).equivalent
}

pub fn compare_cyclic(a: &AlgebraElement, b: &AlgebraElement, tol: f64) -> CyclicComparison {
    let first_difference = (a - b)
        .cyclic_residue()
        .into_iter()
        .find(|(_, c)| c.norm() > tol);
    CyclicComparison {
        equivalent: first_difference.is_none(),
        first_difference,
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), *c);
        }
        out
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), -c);
        }
        out
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        let mut out = AlgebraElement::zero();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &rhs.terms {
                out.add_term(wa.concat(wb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for AlgebraElement {
            type Output = AlgebraElement;
            fn $m(self, rhs: AlgebraElement) -> AlgebraElement {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}·{w}", c.re)?;
            } else {
                write!(f, "({}{:+}i)·{w}", c.re, c.im)?;
            }
        }
        Ok(())
    }
}
