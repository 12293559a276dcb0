//! Exact symbolic arithmetic in the group algebra of the free group on
//! countably many generators `u_1, u_2, ...`.

mod element;
mod quadratic;
mod word;

pub use element::{compare_cyclic, cyc_equivalent, AlgebraElement, CyclicComparison};
pub use quadratic::{coefficient_matrix_to_element, diagonally_equivalent, QuadraticForm};
pub(crate) use quadratic::check_hermitian;
pub use word::{least_rotation, Exponent, Letter, Word};

/// Product in the group algebra.
pub fn mul(a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
    a * b
}

pub fn star(a: &AlgebraElement) -> AlgebraElement {
    a.star()
}

pub fn cyclic_canonical(w: &Word) -> Word {
    w.cyclic_canonical()
}

pub fn quadratic_to_element(q: &QuadraticForm) -> AlgebraElement {
    q.to_element()
}
