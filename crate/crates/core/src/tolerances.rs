//! Numerical thresholds shared by every module.

use crate::error::{Error, Result};

/// Every tolerance the library consults, in one place.
///
/// The defaults are the values the rest of the crate is tested against;
/// callers can override individual fields by name through [`Tolerances::set`].
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Max deviation of `H - H*` accepted as Hermitian.
    pub hermitian: f64,
    /// Max entry of `U*U - I` accepted as unitary.
    pub unitary: f64,
    /// Most negative eigenvalue still accepted for a correlation matrix.
    pub correlation_psd: f64,
    /// Unit-diagonal / symmetry slack for correlation matrices.
    pub correlation_entry: f64,
    /// Pivoted Cholesky stops once the largest residual pivot falls below this
    /// fraction of the largest diagonal entry.
    pub cholesky_rank: f64,
    /// Smallest singular value below which a polar factor is flagged singular.
    pub polar_singular: f64,
    /// Accepted deviation of a vector norm from one.
    pub unit_vector: f64,
    /// Per-coefficient tolerance for equality of algebra elements.
    pub coefficient: f64,
    /// Per-coefficient tolerance used when checking certificates.
    pub certificate: f64,
    /// Smallest eigenvalue accepted when turning a matrix into squares.
    pub psd_accept: f64,
    /// Margin below `-epsilon` required before a search value refutes.
    pub refute_margin: f64,
    /// Absolute improvement per sweep below which descent stops.
    pub descent_improvement: f64,
    /// Imaginary residue allowed in a trace evaluation.
    pub imaginary_residue: f64,
    /// Slack for the diagonal-dominance bound.
    pub diagonal_dominance: f64,
    /// Residual above which a coefficient recovery is rejected.
    pub recovery_residual: f64,
    /// Slack added to the right-hand side of the trace inequality check.
    pub wang: f64,
    /// Duality gap at which the diagonal-shift maximization counts as converged.
    pub shift_gap: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-10,
        unitary: 1e-10,
        correlation_psd: 1e-8,
        correlation_entry: 1e-10,
        cholesky_rank: 1e-12,
        polar_singular: 1e-12,
        unit_vector: 1e-10,
        coefficient: 1e-12,
        certificate: 1e-8,
        psd_accept: 1e-9,
        refute_margin: 1e-9,
        descent_improvement: 1e-10,
        imaginary_residue: 1e-10,
        diagonal_dominance: 1e-12,
        recovery_residual: 1e-6,
        wang: 1e-10,
        shift_gap: 1e-8,
    };

    const NAMES: [&'static str; 17] = [
        "hermitian",
        "unitary",
        "correlation_psd",
        "correlation_entry",
        "cholesky_rank",
        "polar_singular",
        "unit_vector",
        "coefficient",
        "certificate",
        "psd_accept",
        "refute_margin",
        "descent_improvement",
        "imaginary_residue",
        "diagonal_dominance",
        "recovery_residual",
        "wang",
        "shift_gap",
    ];

    pub fn names() -> &'static [&'static str] {
        &Self::NAMES
    }

    /// Overrides one field by name. Values must be finite and non-negative.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance `{name}` must be finite and non-negative, got {value}"
            )));
        }
        let slot = match name {
            "hermitian" => &mut self.hermitian,
            "unitary" => &mut self.unitary,
            "correlation_psd" => &mut self.correlation_psd,
            "correlation_entry" => &mut self.correlation_entry,
            "cholesky_rank" => &mut self.cholesky_rank,
            "polar_singular" => &mut self.polar_singular,
            "unit_vector" => &mut self.unit_vector,
            "coefficient" => &mut self.coefficient,
            "certificate" => &mut self.certificate,
            "psd_accept" => &mut self.psd_accept,
            "refute_margin" => &mut self.refute_margin,
            "descent_improvement" => &mut self.descent_improvement,
            "imaginary_residue" => &mut self.imaginary_residue,
            "diagonal_dominance" => &mut self.diagonal_dominance,
            "recovery_residual" => &mut self.recovery_residual,
            "wang" => &mut self.wang,
            "shift_gap" => &mut self.shift_gap,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown tolerance `{name}` (known: {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
