use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Sign of a letter's exponent. The derived order puts `Pos` before `Neg`,
/// which is the tie-break used by the canonical cyclic form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exponent {
    Pos,
    Neg,
}

impl Exponent {
    pub fn flip(self) -> Self {
        match self {
            Exponent::Pos => Exponent::Neg,
            Exponent::Neg => Exponent::Pos,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Exponent::Pos => 1,
            Exponent::Neg => -1,
        }
    }
}

/// A generator `u_g` or its inverse. Generators are 1-based.
///
/// Letters are ordered by generator index, then `+1` before `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    generator: u32,
    exponent: Exponent,
}

impl Letter {
    pub fn new(generator: u32, exponent: i8) -> Result<Self> {
        if generator == 0 {
            return Err(Error::invariant(
                "generator index >= 1",
                "generator 0 is not a generator",
            ));
        }
        let exponent = match exponent {
            1 => Exponent::Pos,
            -1 => Exponent::Neg,
            other => {
                return Err(Error::invariant(
                    "letter exponent in {+1, -1}",
                    format!("got exponent {other}"),
                ))
            }
        };
        Ok(Letter {
            generator,
            exponent,
        })
    }

    /// `u_g`. Panics on `g == 0`.
    pub fn pos(generator: u32) -> Self {
        assert!(generator >= 1, "generators are 1-based");
        Letter {
            generator,
            exponent: Exponent::Pos,
        }
    }

    /// `u_g^{-1}`. Panics on `g == 0`.
    pub fn neg(generator: u32) -> Self {
        assert!(generator >= 1, "generators are 1-based");
        Letter {
            generator,
            exponent: Exponent::Neg,
        }
    }

    pub fn generator(self) -> u32 {
        self.generator
    }

    pub fn exponent(self) -> Exponent {
        self.exponent
    }

    pub fn inverse(self) -> Self {
        Letter {
            generator: self.generator,
            exponent: self.exponent.flip(),
        }
    }

    pub fn cancels(self, other: Letter) -> bool {
        self.generator == other.generator && self.exponent != other.exponent
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exponent {
            Exponent::Pos => write!(f, "u{}", self.generator),
            Exponent::Neg => write!(f, "u{}^-1", self.generator),
        }
    }
}

/// A freely reduced word in the free group. The empty word is the unit `e`.
///
/// Words compare lexicographically letter by letter (a proper prefix sorts
/// first), which gives the term maps of [`AlgebraElement`](super::AlgebraElement)
/// a deterministic order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn unit() -> Self {
        Word(Vec::new())
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            push_reduced(&mut out, l);
        }
        Word(out)
    }

    pub fn generator(g: u32) -> Self {
        Word(vec![Letter::pos(g)])
    }

    /// Builds a word from `(generator, exponent)` pairs, validating each letter.
    pub fn from_pairs(pairs: &[(u32, i8)]) -> Result<Self> {
        let letters = pairs
            .iter()
            .map(|&(g, e)| Letter::new(g, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Word::from_letters(letters))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_generator(&self) -> u32 {
        self.0.iter().map(|l| l.generator).max().unwrap_or(0)
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// Group product followed by free reduction.
    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.0.clone();
        for &l in &other.0 {
            push_reduced(&mut out, l);
        }
        Word(out)
    }

    /// `g w g^{-1}`.
    pub fn conjugate_by(&self, g: &Word) -> Word {
        g.concat(self).concat(&g.inverse())
    }

    /// Strips matching first/last letters while the word's ends cancel.
    pub fn cyclically_reduced(&self) -> Word {
        let l = &self.0;
        let (mut lo, mut hi) = (0usize, l.len());
        while hi - lo >= 2 && l[lo].cancels(l[hi - 1]) {
            lo += 1;
            hi -= 1;
        }
        Word(l[lo..hi].to_vec())
    }

    /// Canonical representative of the conjugacy class: the least rotation of
    /// the cyclic reduction.
    pub fn cyclic_canonical(&self) -> Word {
        let mut reduced = self.cyclically_reduced().0;
        let k = least_rotation(&reduced);
        reduced.rotate_left(k);
        Word(reduced)
    }

    /// All rotations of the word's letters, unreduced. Used by tests.
    pub fn rotations(&self) -> Vec<Word> {
        (0..self.0.len().max(1))
            .map(|k| {
                let mut v = self.0.clone();
                if !v.is_empty() {
                    v.rotate_left(k);
                }
                Word(v)
            })
            .collect()
    }

    pub fn to_pairs(&self) -> Vec<(u32, i8)> {
        self.0
            .iter()
            .map(|l| (l.generator, l.exponent.as_i8()))
            .collect()
    }
}

fn push_reduced(out: &mut Vec<Letter>, l: Letter) {
    match out.last() {
        Some(&last) if last.cancels(l) => {
            out.pop();
        }
        _ => out.push(l),
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Booth's least-rotation algorithm: index `k` such that `s[k..] ++ s[..k]`
/// is lexicographically minimal. Linear time.
pub fn least_rotation<T: Ord>(s: &[T]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    let at = |i: usize| &s[i % n];
    let mut fail: Vec<isize> = vec![-1; 2 * n];
    let mut k = 0usize;
    for j in 1..2 * n {
        let sj = at(j);
        let mut i = fail[j - k - 1];
        while i != -1 && sj != at(k + i as usize + 1) {
            if sj.cmp(at(k + i as usize + 1)) == Ordering::Less {
                k = j - i as usize - 1;
            }
            i = fail[i as usize];
        }
        // here i == -1 or s[j] matches s[k + i + 1]
        if i == -1 && sj != at(k) {
            if sj.cmp(at(k)) == Ordering::Less {
                k = j;
            }
            fail[j - k] = -1;
        } else {
            fail[j - k] = i + 1;
        }
    }
    k % n
}
