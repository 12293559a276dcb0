//! JSON interchange formats.
//!
//! Syntax and shape errors carry line and column; values that parse but
//! violate an invariant (non-unitary matrix, exponent 2, ...) surface as the
//! corresponding invariant or argument error.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::certificates::{DiagonalShift, SosCertificate, Verdict};
use crate::clifford::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::group_algebra::{AlgebraElement, QuadraticForm, Word};
use crate::linalg::CMatrix;
use crate::positivity::UnitaryTuple;
use crate::tolerances::Tolerances;

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

/// Compact for `indent == 0`, otherwise pretty-printed with `indent` spaces.
pub fn render<T: Serialize>(value: &T, indent: usize) -> String {
    if indent == 0 {
        return serde_json::to_string(value).expect("serializable value");
    }
    let pad = vec![b' '; indent];
    let formatter = serde_json::ser::PrettyFormatter::with_indent(&pad);
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    value.serialize(&mut ser).expect("serializable value");
    String::from_utf8(out).expect("JSON is UTF-8")
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub word: Vec<(u32, i8)>,
    pub re: f64,
    pub im: f64,
}

pub type ElementJson = Vec<TermJson>;

pub fn element_to_json(f: &AlgebraElement) -> ElementJson {
    f.terms()
        .map(|(w, c)| TermJson {
            word: w.to_pairs(),
            re: c.re,
            im: c.im,
        })
        .collect()
}

/// Repeated words are summed; words are freely reduced on load.
pub fn element_from_json(terms: &[TermJson]) -> Result<AlgebraElement> {
    let mut out = AlgebraElement::zero();
    for t in terms {
        check_finite(&[t.re, t.im])?;
        out.add_term(Word::from_pairs(&t.word)?, Complex64::new(t.re, t.im));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FormTermJson {
    pub i: usize,
    pub j: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuadraticFormJson {
    pub n: usize,
    pub alpha: f64,
    pub terms: Vec<FormTermJson>,
}

/// Writes the nonzero entries above the diagonal; the rest follows by closure.
pub fn form_to_json(q: &QuadraticForm) -> QuadraticFormJson {
    let n = q.n();
    let mut terms = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            let c = q.coefficient(i, j);
            if c != Complex64::new(0.0, 0.0) {
                terms.push(FormTermJson { i, j, re: c.re, im: c.im });
            }
        }
    }
    QuadraticFormJson {
        n,
        alpha: q.alpha(),
        terms,
    }
}

pub fn form_from_json(q: &QuadraticFormJson, tol: &Tolerances) -> Result<QuadraticForm> {
    check_finite(&[q.alpha])?;
    let terms: Vec<(usize, usize, Complex64)> = q
        .terms
        .iter()
        .map(|t| check_finite(&[t.re, t.im]).map(|_| (t.i, t.j, Complex64::new(t.re, t.im))))
        .collect::<Result<_>>()?;
    QuadraticForm::from_terms(q.n, q.alpha, &terms, tol.hermitian)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    let part = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
            .collect()
    };
    MatrixJson {
        rows: m.nrows(),
        cols: m.ncols(),
        re: part(|z| z.re),
        im: part(|z| z.im),
    }
}

pub fn matrix_from_json(m: &MatrixJson) -> Result<CMatrix> {
    let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == m.rows && rows.iter().all(|r| r.len() == m.cols);
    if !shape_ok(&m.re) || !shape_ok(&m.im) {
        return Err(Error::Dimension(format!(
            "matrix declared {}x{} but its entries do not match",
            m.rows, m.cols
        )));
    }
    for row in m.re.iter().chain(&m.im) {
        check_finite(row)?;
    }
    Ok(CMatrix::from_fn(m.rows, m.cols, |i, j| Complex64::new(m.re[i][j], m.im[i][j])))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TupleJson {
    pub n: usize,
    pub m: usize,
    pub matrices: Vec<MatrixJson>,
}

pub fn tuple_to_json(t: &UnitaryTuple) -> TupleJson {
    TupleJson {
        n: t.n(),
        m: t.m(),
        matrices: t.matrices().iter().map(|u| matrix_to_json(u.matrix())).collect(),
    }
}

pub fn tuple_from_json(t: &TupleJson, tol: &Tolerances) -> Result<UnitaryTuple> {
    if t.matrices.len() != t.n {
        return Err(Error::Dimension(format!(
            "tuple declares n = {} but holds {} matrices",
            t.n,
            t.matrices.len()
        )));
    }
    let ms = t.matrices.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
    if let Some(bad) = ms.iter().find(|u| u.nrows() != t.m || u.ncols() != t.m) {
        return Err(Error::Dimension(format!(
            "tuple declares m = {} but holds a {}x{} matrix",
            t.m,
            bad.nrows(),
            bad.ncols()
        )));
    }
    UnitaryTuple::new(ms, tol)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CorrelationJson {
    pub entries: Vec<Vec<f64>>,
}

pub fn correlation_from_json(c: &CorrelationJson, tol: &Tolerances) -> Result<CorrelationMatrix> {
    let n = c.entries.len();
    if n == 0 || c.entries.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("correlation matrix must be square and non-empty".into()));
    }
    CorrelationMatrix::new(DMatrix::from_fn(n, n, |i, j| c.entries[i][j]), tol)
}

pub fn correlation_to_json(p: &CorrelationMatrix) -> CorrelationJson {
    let m = p.matrix();
    CorrelationJson {
        entries: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Output of `certify`. Which optional fields are present depends on the verdict.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerdictJson {
    pub verdict: String,
    pub epsilon: f64,
    pub lambda_star: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squares: Option<Vec<VectorJson>>,
    /// `Σ h_s* h_s`, written out for independent checking.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion: Option<ElementJson>,
    /// `ε e + f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_tuple: Option<TupleJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_value: Option<f64>,
}

pub fn verdict_to_json(v: &Verdict, q: &QuadraticForm, epsilon: f64) -> VerdictJson {
    let mut out = VerdictJson {
        verdict: v.label().to_string(),
        epsilon,
        lambda_star: v.lambda_star(),
        shift: None,
        squares: None,
        expansion: None,
        target: None,
        witness_tuple: None,
        value: None,
        m: None,
        best_value: None,
    };
    match v {
        Verdict::Certificate { certificate, .. } => {
            out.shift = Some(certificate.shift.values().to_vec());
            out.squares = Some(
                certificate
                    .squares
                    .iter()
                    .map(|b| VectorJson {
                        re: b.iter().map(|z| z.re).collect(),
                        im: b.iter().map(|z| z.im).collect(),
                    })
                    .collect(),
            );
            out.expansion = Some(element_to_json(&certificate.expand()));
            out.target = Some(element_to_json(&q.shifted(epsilon).to_element()));
        }
        Verdict::Refutation { witness, value, .. } => {
            out.witness_tuple = Some(tuple_to_json(witness));
            out.value = Some(*value);
            out.m = Some(witness.m());
        }
        Verdict::Inconclusive { best_value, .. } => out.best_value = Some(*best_value),
    }
    out
}

/// Rebuilds the certificate from its squares; the stored expansion is ignored.
pub fn certificate_from_json(v: &VerdictJson) -> Result<SosCertificate> {
    let squares = v
        .squares
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("verdict '{}' carries no squares", v.verdict)))?;
    let shift = v.shift.clone().unwrap_or_default();
    let n = shift.len();
    let squares = squares
        .iter()
        .map(|s| {
            if s.re.len() != n || s.im.len() != n {
                return Err(Error::Dimension(format!(
                    "square of length {} in a certificate over {n} generators",
                    s.re.len()
                )));
            }
            check_finite(&s.re)?;
            check_finite(&s.im)?;
            Ok(DVector::from_fn(n, |i, _| Complex64::new(s.re[i], s.im[i])))
        })
        .collect::<Result<Vec<_>>>()?;
    check_finite(&shift)?;
    Ok(SosCertificate {
        epsilon: v.epsilon,
        shift: DiagonalShift::new(shift, 1e-9)?,
        squares,
    })
}

/// Reads an element from any of: an element list, a quadratic form, or a
/// `certify` certificate (whose squares are re-expanded).
pub fn any_element_from_str(text: &str, tol: &Tolerances) -> Result<AlgebraElement> {
    let value: serde_json::Value = parse(text)?;
    match &value {
        serde_json::Value::Array(_) => element_from_json(&parse::<ElementJson>(text)?),
        serde_json::Value::Object(map) if map.contains_key("verdict") => {
            Ok(certificate_from_json(&parse::<VerdictJson>(text)?)?.expand())
        }
        _ => Ok(form_from_json(&parse::<QuadraticFormJson>(text)?, tol)?.to_element()),
    }
}

/// Manifest written next to the recovery probe tuples.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProbeManifest {
    pub n: usize,
    pub probes: Vec<ProbeEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProbeEntry {
    pub label: String,
    pub file: String,
}

/// Trace values at the probes, in manifest order.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvaluationsJson {
    pub n: usize,
    pub values: Vec<f64>,
}

fn check_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(Error::InvalidArgument(format!("non-finite number {x}"))),
        None => Ok(()),
    }
}
