//! The model `W(A) = V(A) ⊔ LAff(T(A))₊₊` on a finite registered trace set.
//!
//! A class with locally constant rank is a projection class and compares by
//! rank functions. Anything else is represented by its dimension function
//! `ι(x)(τ) = d_τ(x)` evaluated on the registered traces.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use super::{dim_fn_value, rank_gap_certificate, uniform_dims, Certificate, TraceError, TraceMeasure};
use crate::exact::{Rational, Q};
use crate::matfield::{FieldError, MatrixField, RankFunction};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SemigroupError {
    #[error("operands are evaluated on different trace sets")]
    TraceSetMismatch,
    #[error("class {0:?} has non-constant rank on a connected component")]
    NotLocallyConstant(String),
    #[error("negative value at trace {0:?}")]
    NegativeValue(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    Projection,
    Soft,
}

/// Values of a lower semicontinuous affine function on the registered traces.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LAffFunction {
    values: BTreeMap<String, Q>,
}

impl Serialize for LAffFunction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.values.len()))?;
        for (k, v) in &self.values {
            map.serialize_entry(k, &Rational(v.clone()))?;
        }
        map.end()
    }
}

impl LAffFunction {
    pub fn new(values: BTreeMap<String, Q>) -> Result<Self, SemigroupError> {
        if let Some((k, _)) = values.iter().find(|(_, v)| v.is_negative()) {
            return Err(SemigroupError::NegativeValue(k.clone()));
        }
        Ok(Self { values })
    }

    pub fn constant<I, S>(traces: I, value: Q) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        assert!(!value.is_negative());
        Self {
            values: traces.into_iter().map(|t| (t.into(), value.clone())).collect(),
        }
    }

    pub fn values(&self) -> &BTreeMap<String, Q> {
        &self.values
    }

    pub fn get(&self, trace: &str) -> Option<&Q> {
        self.values.get(trace)
    }

    /// Member of `LAff_b(T(A))₊₊`: positive at every registered trace.
    pub fn is_strictly_positive(&self) -> bool {
        self.values.values().all(|v| v.is_positive())
    }

    fn check_traces(&self, other: &LAffFunction) -> Result<(), SemigroupError> {
        if self.values.keys().eq(other.values.keys()) {
            Ok(())
        } else {
            Err(SemigroupError::TraceSetMismatch)
        }
    }

    pub fn add(&self, other: &LAffFunction) -> Result<LAffFunction, SemigroupError> {
        self.check_traces(other)?;
        Ok(LAffFunction {
            values: self
                .values
                .iter()
                .zip(other.values.values())
                .map(|((k, a), b)| (k.clone(), a + b))
                .collect(),
        })
    }

    fn all_pairs(&self, other: &LAffFunction, rel: impl Fn(&Q, &Q) -> bool) -> Result<bool, SemigroupError> {
        self.check_traces(other)?;
        Ok(self.values.values().zip(other.values.values()).all(|(a, b)| rel(a, b)))
    }
}

/// A Cuntz class `⟨a⟩` together with its image under `ι`.
#[derive(Clone, Debug)]
pub struct CuntzClassRepr {
    kind: ClassKind,
    rank_fn: RankFunction,
    iota: LAffFunction,
    label: String,
}

impl Serialize for CuntzClassRepr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let space = self.rank_fn.space();
        let ranks: BTreeMap<&str, usize> = (0..space.len()).map(|i| (space.id(i), self.rank_fn.at(i))).collect();
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry("label", &self.label)?;
        map.serialize_entry("kind", &self.kind)?;
        map.serialize_entry("rank", &ranks)?;
        map.serialize_entry("iota", &self.iota)?;
        map.end()
    }
}

impl CuntzClassRepr {
    pub fn new(
        kind: ClassKind,
        rank_fn: RankFunction,
        iota: LAffFunction,
        label: impl Into<String>,
    ) -> Result<Self, SemigroupError> {
        let label = label.into();
        if kind == ClassKind::Projection && !rank_fn.is_locally_constant() {
            return Err(SemigroupError::NotLocallyConstant(label));
        }
        Ok(Self {
            kind,
            rank_fn,
            iota,
            label,
        })
    }

    /// Classifies `a` by its rank function: locally constant rank means `a`
    /// is Cuntz equivalent to its support projection.
    pub fn from_field(
        a: &MatrixField,
        traces: &[TraceMeasure],
        tol: f64,
        label: impl Into<String>,
    ) -> Result<Self, SemigroupError> {
        let rank_fn = a.rank_function(tol)?;
        let kind = if rank_fn.is_locally_constant() {
            ClassKind::Projection
        } else {
            ClassKind::Soft
        };
        let mut values = BTreeMap::new();
        for mu in traces {
            values.insert(mu.id().to_string(), dim_fn_value(a, mu, tol)?);
        }
        Self::new(kind, rank_fn, LAffFunction { values }, label)
    }

    pub fn kind(&self) -> ClassKind {
        self.kind
    }

    pub fn rank_fn(&self) -> &RankFunction {
        &self.rank_fn
    }

    pub fn iota(&self) -> &LAffFunction {
        &self.iota
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum WElement {
    Class(CuntzClassRepr),
    Laff(LAffFunction),
}

impl WElement {
    fn projection(&self) -> Option<&CuntzClassRepr> {
        match self {
            WElement::Class(c) if c.kind == ClassKind::Projection => Some(c),
            _ => None,
        }
    }

    /// The soft-component value: `ι` of a class, or the function itself.
    fn laff(&self) -> &LAffFunction {
        match self {
            WElement::Class(c) => &c.iota,
            WElement::Laff(f) => f,
        }
    }
}

/// `+_W`: projections add as projections, everything else adds in `LAff`
/// after applying `ι`.
pub fn w_add(u: &WElement, v: &WElement) -> Result<WElement, SemigroupError> {
    let iota = u.laff().add(v.laff())?;
    match (u.projection(), v.projection()) {
        (Some(p), Some(q)) => {
            let rank_fn = p.rank_fn.sum(&q.rank_fn)?;
            Ok(WElement::Class(CuntzClassRepr::new(
                ClassKind::Projection,
                rank_fn,
                iota,
                format!("{}+{}", p.label, q.label),
            )?))
        }
        _ => Ok(WElement::Laff(iota)),
    }
}

/// `≤_W`. For a projection `x` and soft `f`: `x ≤ f` iff `ι(x) < f` at every
/// trace, and `f ≤ x` iff `f ≤ ι(x)`.
pub fn w_leq(u: &WElement, v: &WElement) -> Result<bool, SemigroupError> {
    let (fu, fv) = (u.laff(), v.laff());
    fu.check_traces(fv)?;
    match (u.projection(), v.projection()) {
        (Some(p), Some(q)) => {
            crate::matfield::check_same_space(p.rank_fn.space(), q.rank_fn.space())?;
            Ok(p.rank_fn.pointwise_le(&q.rank_fn))
        }
        (Some(_), None) => fu.all_pairs(fv, |a, b| a < b),
        (None, _) => fu.all_pairs(fv, |a, b| a <= b),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingEntry {
    pub index: usize,
    pub certificate: Certificate,
    pub kinds: [ClassKind; 2],
    pub w_leq: bool,
    /// Certificate holds but the images are not ordered.
    pub violation: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EmbeddingReport {
    pub entries: Vec<EmbeddingEntry>,
    pub violations: usize,
}

/// For each pair, compares the certificate with `w_leq` on the images in the
/// model. Point dimensions are the space's covering dimension.
pub fn order_embedding_check(
    instances: &[(MatrixField, MatrixField)],
    traces: &[TraceMeasure],
    tol: f64,
) -> Result<EmbeddingReport, SemigroupError> {
    let mut report = EmbeddingReport::default();
    for (index, (a, b)) in instances.iter().enumerate() {
        let certificate = rank_gap_certificate(a, b, &uniform_dims(a.space()), tol)?;
        let ca = CuntzClassRepr::from_field(a, traces, tol, format!("a{index}"))?;
        let cb = CuntzClassRepr::from_field(b, traces, tol, format!("b{index}"))?;
        let kinds = [ca.kind, cb.kind];
        let leq = w_leq(&WElement::Class(ca), &WElement::Class(cb))?;
        let violation = certificate.holds && !leq;
        report.violations += violation as usize;
        report.entries.push(EmbeddingEntry {
            index,
            certificate,
            kinds,
            w_leq: leq,
            violation,
        });
    }
    Ok(report)
}

impl LAffFunction {
    /// Zero function on the same traces.
    pub fn zero_like(&self) -> LAffFunction {
        LAffFunction {
            values: self.values.keys().map(|k| (k.clone(), Q::zero())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuntz::standard_traces;
    use crate::exact::q;
    use crate::linalg::real_diag;
    use crate::matfield::DEFAULT_RANK_TOL;
    use crate::space::{make_grid, SampledSpace};
    use std::sync::Arc;

    const TRACES: [&str; 2] = ["t1", "t2"];

    fn half_projection() -> WElement {
        let s = Arc::new(make_grid(&[1], 2).unwrap());
        let p = MatrixField::constant(Arc::clone(&s), real_diag(&[1.0, 0.0])).unwrap();
        let mut traces = standard_traces(&s, 2);
        traces.truncate(2);
        let c = CuntzClassRepr::from_field(&p, &traces, DEFAULT_RANK_TOL, "p").unwrap();
        assert_eq!(c.kind(), ClassKind::Projection);
        WElement::Class(c)
    }

    fn soft(value: Q, p: &WElement) -> WElement {
        WElement::Laff(LAffFunction::constant(p.laff().values().keys().cloned(), value))
    }

    #[test]
    fn projection_plus_function() {
        let p = half_projection();
        let f = soft(q(1, 4), &p);
        match w_add(&p, &f).unwrap() {
            WElement::Laff(g) => assert!(g.values().values().all(|v| *v == q(3, 4))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn projection_plus_projection() {
        let p = half_projection();
        match w_add(&p, &p).unwrap() {
            WElement::Class(c) => {
                assert_eq!(c.kind(), ClassKind::Projection);
                assert!(c.rank_fn().ranks().iter().all(|&r| r == 2));
                assert!(c.iota().values().values().all(|v| *v == q(1, 1)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_function_is_flagged() {
        let z = LAffFunction::constant(TRACES, q(0, 1));
        let sum = w_add(&WElement::Laff(z.clone()), &WElement::Laff(z.clone())).unwrap();
        assert_eq!(sum.laff(), &z);
        assert!(!z.is_strictly_positive());
    }

    #[test]
    fn strict_rule_at_equality() {
        let p = half_projection();
        let above = soft(q(3, 5), &p);
        assert!(w_leq(&p, &above).unwrap());
        let equal = soft(q(1, 2), &p);
        assert!(!w_leq(&p, &equal).unwrap());
        assert!(w_leq(&equal, &p).unwrap());
        let f = WElement::Laff(LAffFunction::constant(TRACES, q(3, 10)));
        assert!(w_leq(&f, &f).unwrap());
    }

    #[test]
    fn trace_mismatch() {
        let f = WElement::Laff(LAffFunction::constant(["a"], q(1, 2)));
        let g = WElement::Laff(LAffFunction::constant(["b"], q(1, 2)));
        assert_eq!(w_leq(&f, &g).unwrap_err(), SemigroupError::TraceSetMismatch);
        assert_eq!(w_add(&f, &g).unwrap_err(), SemigroupError::TraceSetMismatch);
    }

    #[test]
    fn projection_kind_needs_constant_rank() {
        let s = Arc::new(make_grid(&[1], 1).unwrap());
        let rf = RankFunction::from_ranks(Arc::clone(&s), DEFAULT_RANK_TOL, vec![0, 1]);
        assert!(matches!(
            CuntzClassRepr::new(ClassKind::Projection, rf, LAffFunction::default(), "x"),
            Err(SemigroupError::NotLocallyConstant(_))
        ));
    }

    #[test]
    fn embedding_report() {
        assert_eq!(order_embedding_check(&[], &[], DEFAULT_RANK_TOL).unwrap().violations, 0);

        let s = Arc::new(SampledSpace::discrete("pts", 2, ["x", "y"]).unwrap());
        let traces = standard_traces(&s, 2);
        let big = MatrixField::constant(Arc::clone(&s), real_diag(&[1.0, 0.5])).unwrap();
        let small = MatrixField::diagonal(Arc::clone(&s), 2, |i| vec![0.5 * i as f64, 0.0]).unwrap();
        let report = order_embedding_check(
            &[(small.clone(), big.clone()), (big, small)],
            &traces,
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.entries[0].certificate.holds && report.entries[0].w_leq);
        assert!(!report.entries[1].certificate.holds && !report.entries[1].w_leq);
    }
}
