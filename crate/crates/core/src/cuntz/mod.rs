//! Cuntz comparison for sampled matrix fields.
//!
//! [`rank_gap_certificate`] is a sufficient condition for `a ≾ b`;
//! [`witness_search`] looks for the `v` with `v b v* ≈ a` numerically.
//! Traces are probability measures on the sample paired with the local matrix
//! size, and the semigroup model lives in [`semigroup`].

mod semigroup;
mod witness;

pub use semigroup::{
    order_embedding_check, w_add, w_leq, ClassKind, CuntzClassRepr, EmbeddingEntry, EmbeddingReport,
    LAffFunction, SemigroupError, WElement,
};
pub use witness::{functional_calculus_witness, rank_obstruction_lower_bound, witness_search, WitnessResult};

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::exact::Q;
use crate::matfield::{check_same_space, FieldError, MatrixField};
use crate::space::SampledSpace;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("unknown point {0:?}")]
    UnknownPoint(String),
    #[error("negative weight at {0:?}")]
    NegativeWeight(String),
    #[error("weights sum to {0}, expected 1")]
    NotNormalised(String),
    #[error("matrix size at {0:?} must be positive")]
    ZeroSize(String),
    #[error("no matrix size given for {0:?}")]
    MissingSize(String),
    #[error("field size {n} is not a multiple of the local matrix size {size} at {point:?}")]
    SizeNotDividing { point: String, n: usize, size: u64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A tracial state on the sampled algebra: a probability vector over the
/// points and, at each point, the size of the matrix algebra whose normalised
/// trace is used there.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceMeasure {
    id: String,
    space: Arc<SampledSpace>,
    weights: Vec<Q>,
    matrix_size_at: Vec<u64>,
}

impl TraceMeasure {
    /// Missing weights are zero; every point needs a size.
    pub fn new(
        id: impl Into<String>,
        space: Arc<SampledSpace>,
        weights: &BTreeMap<String, Q>,
        matrix_size_at: &BTreeMap<String, u64>,
    ) -> Result<Self, TraceError> {
        let mut w = vec![Q::zero(); space.len()];
        for (pid, value) in weights {
            let i = space.index_of(pid).ok_or_else(|| TraceError::UnknownPoint(pid.clone()))?;
            if value.is_negative() {
                return Err(TraceError::NegativeWeight(pid.clone()));
            }
            w[i] = value.clone();
        }
        let total: Q = w.iter().sum();
        if !total.is_one() {
            return Err(TraceError::NotNormalised(crate::exact::format_q(&total)));
        }
        for pid in matrix_size_at.keys() {
            if space.index_of(pid).is_none() {
                return Err(TraceError::UnknownPoint(pid.clone()));
            }
        }
        let mut sizes = Vec::with_capacity(space.len());
        for p in space.points() {
            match matrix_size_at.get(&p.id) {
                None => return Err(TraceError::MissingSize(p.id.clone())),
                Some(0) => return Err(TraceError::ZeroSize(p.id.clone())),
                Some(&s) => sizes.push(s),
            }
        }
        Ok(Self {
            id: id.into(),
            space,
            weights: w,
            matrix_size_at: sizes,
        })
    }

    /// Equal weight `1/|X|` on every point, matrix size `size` everywhere.
    pub fn uniform(id: impl Into<String>, space: Arc<SampledSpace>, size: u64) -> Self {
        assert!(size > 0 && !space.is_empty());
        let w = Q::new(1.into(), (space.len() as u64).into());
        Self {
            id: id.into(),
            weights: vec![w; space.len()],
            matrix_size_at: vec![size; space.len()],
            space,
        }
    }

    /// The extreme trace `τ_x`: evaluation at `x` followed by the normalised
    /// trace.
    pub fn point_mass(id: impl Into<String>, space: Arc<SampledSpace>, point: usize, size: u64) -> Self {
        assert!(size > 0 && point < space.len());
        let mut weights = vec![Q::zero(); space.len()];
        weights[point] = Q::one();
        Self {
            id: id.into(),
            weights,
            matrix_size_at: vec![size; space.len()],
            space,
        }
    }

    /// One extreme trace per point, ids `"ev:<point id>"`.
    pub fn extreme_traces(space: &Arc<SampledSpace>, size: u64) -> Vec<TraceMeasure> {
        (0..space.len())
            .map(|i| Self::point_mass(format!("ev:{}", space.id(i)), Arc::clone(space), i, size))
            .collect()
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn space(&self) -> &Arc<SampledSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[Q] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &Q {
        &self.weights[i]
    }

    pub fn matrix_size_at(&self, i: usize) -> u64 {
        self.matrix_size_at[i]
    }

    fn check_field(&self, a: &MatrixField) -> Result<(), TraceError> {
        check_same_space(a.space(), &self.space)?;
        for (i, &size) in self.matrix_size_at.iter().enumerate() {
            if a.n() as u64 % size != 0 {
                return Err(TraceError::SizeNotDividing {
                    point: self.space.id(i).to_string(),
                    n: a.n(),
                    size,
                });
            }
        }
        Ok(())
    }
}

/// `d_μ(a) = Σ_x μ(x)·rank a(x) / m(x)`.
///
/// When `a.n()` is a multiple of `m(x)` the value is that of the unnormalised
/// extension of the trace to the amplification and may exceed 1.
pub fn dim_fn_value(a: &MatrixField, mu: &TraceMeasure, tol: f64) -> Result<Q, TraceError> {
    if !(tol > 0.0) {
        return Err(FieldError::NonPositiveTolerance(tol).into());
    }
    mu.check_field(a)?;
    Ok((0..a.space().len())
        .filter(|&i| !mu.weights[i].is_zero())
        .map(|i| {
            let rank = a.rank_at(i, tol) as u64;
            &mu.weights[i] * Q::new(rank.into(), mu.matrix_size_at[i].into())
        })
        .sum())
}

/// Covering dimension per point id, all equal to the space's declared one.
pub fn uniform_dims(space: &SampledSpace) -> BTreeMap<String, u64> {
    space
        .points()
        .iter()
        .map(|p| (p.id.clone(), space.covering_dim()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub holds: bool,
    /// First violating point in sorted id order.
    pub witness: Option<String>,
}

/// Does `rank a(x) + (d(x) − 1)/2 ≤ rank b(x)` hold at every point?
///
/// Points missing from
/// `dims` use the space's covering dimension. A `true` result is sufficient
/// for `a ≾ b`; `false` decides nothing.
pub fn rank_gap_certificate(
    a: &MatrixField,
    b: &MatrixField,
    dims: &BTreeMap<String, u64>,
    tol: f64,
) -> Result<Certificate, FieldError> {
    a.check_compatible(b)?;
    if !(tol > 0.0) {
        return Err(FieldError::NonPositiveTolerance(tol));
    }
    let space = a.space();
    for i in space.sorted_indices() {
        let id = space.id(i);
        let d = dims.get(id).copied().unwrap_or(space.covering_dim());
        if !rank_gap_holds(a.rank_at(i, tol), b.rank_at(i, tol), d) {
            return Ok(Certificate {
                holds: false,
                witness: Some(id.to_string()),
            });
        }
    }
    Ok(Certificate {
        holds: true,
        witness: None,
    })
}

/// `rank_a + (d − 1)/2 ≤ rank_b`, evaluated as `2·rank_a + d ≤ 2·rank_b + 1`.
pub fn rank_gap_holds(rank_a: usize, rank_b: usize, d: u64) -> bool {
    2 * rank_a as u128 + d as u128 <= 2 * rank_b as u128 + 1
}

/// Spectrum binned at resolution `1/bins` together with the spectral
/// distribution of the field under each registered trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpectralInvariant {
    pub bins: u64,
    /// Sorted distinct bins `round(λ·bins)` hit by some eigenvalue.
    pub spectrum: Vec<u64>,
    /// Per trace id: bin → mass. Each histogram sums to 1.
    #[serde(serialize_with = "serialize_distributions")]
    pub distributions: BTreeMap<String, BTreeMap<u64, Q>>,
}

fn serialize_distributions<S: serde::Serializer>(
    d: &BTreeMap<String, BTreeMap<u64, Q>>,
    s: S,
) -> Result<S::Ok, S::Error> {
    use crate::exact::Rational;
    let view: BTreeMap<&String, BTreeMap<u64, Rational>> = d
        .iter()
        .map(|(k, h)| (k, h.iter().map(|(b, q)| (*b, Rational(q.clone()))).collect()))
        .collect();
    view.serialize(s)
}

impl SpectralInvariant {
    /// Candidates for approximate unitary equivalence agree bin-exactly.
    pub fn matches(&self, other: &SpectralInvariant) -> bool {
        self == other
    }
}

pub fn spectral_bin(lambda: f64, bins: u64) -> u64 {
    (lambda.max(0.0) * bins as f64).round() as u64
}

pub fn ell_invariant(a: &MatrixField, mus: &[TraceMeasure], bins: u64) -> Result<SpectralInvariant, TraceError> {
    assert!(bins >= 1, "bins must be positive");
    for mu in mus {
        check_same_space(a.space(), mu.space())?;
    }
    let eigens = a.eigens();
    let point_bins: Vec<Vec<u64>> = eigens
        .iter()
        .map(|e| e.values.iter().map(|&l| spectral_bin(l, bins)).collect())
        .collect();
    let mut spectrum: Vec<u64> = point_bins.iter().flatten().copied().collect();
    spectrum.sort_unstable();
    spectrum.dedup();

    let per_eigen = Q::new(1.into(), (a.n() as u64).into());
    let mut distributions = BTreeMap::new();
    for mu in mus {
        let mut hist: BTreeMap<u64, Q> = BTreeMap::new();
        for (i, bins_i) in point_bins.iter().enumerate() {
            let w = mu.weight(i);
            if w.is_zero() {
                continue;
            }
            for &bin in bins_i {
                *hist.entry(bin).or_insert_with(Q::zero) += w * &per_eigen;
            }
        }
        distributions.insert(mu.id().to_string(), hist);
    }
    Ok(SpectralInvariant {
        bins,
        spectrum,
        distributions,
    })
}

/// Size-`n` traces for the uniform and all point-mass measures on `space`.
pub fn standard_traces(space: &Arc<SampledSpace>, n: usize) -> Vec<TraceMeasure> {
    let mut out = vec![TraceMeasure::uniform("uniform", Arc::clone(space), n as u64)];
    out.extend(TraceMeasure::extreme_traces(space, n as u64));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;
    use crate::linalg::real_diag;
    use crate::matfield::{OperatorField, DEFAULT_RANK_TOL};
    use crate::space::make_grid;

    fn grid3() -> Arc<SampledSpace> {
        Arc::new(make_grid(&[1], 2).unwrap())
    }

    fn diag_x_one(space: &Arc<SampledSpace>, square: bool) -> MatrixField {
        MatrixField::diagonal(Arc::clone(space), 2, |i| {
            let x = space.coords_f64(i)[0];
            vec![if square { x * x } else { x }, 1.0]
        })
        .unwrap()
    }

    #[test]
    fn projection_dimension_is_half() {
        let s = grid3();
        let p = MatrixField::constant(Arc::clone(&s), real_diag(&[1.0, 0.0])).unwrap();
        for mu in standard_traces(&s, 2) {
            assert_eq!(dim_fn_value(&p, &mu, DEFAULT_RANK_TOL).unwrap(), q(1, 2));
        }
    }

    #[test]
    fn diag_x_one_uniform() {
        let s = grid3();
        let a = diag_x_one(&s, false);
        let mu = TraceMeasure::uniform("u", Arc::clone(&s), 2);
        assert_eq!(dim_fn_value(&a, &mu, DEFAULT_RANK_TOL).unwrap(), q(5, 6));
    }

    #[test]
    fn orthogonal_sum_is_additive() {
        let s = grid3();
        let a = diag_x_one(&s, false);
        let b = diag_x_one(&s, true);
        let sum = a.block_sum(&b).unwrap();
        let mu2 = TraceMeasure::uniform("u", Arc::clone(&s), 2);
        let mu4 = TraceMeasure::uniform("u", Arc::clone(&s), 4);
        let lhs = dim_fn_value(&sum, &mu4, DEFAULT_RANK_TOL).unwrap();
        let rhs = (dim_fn_value(&a, &mu2, DEFAULT_RANK_TOL).unwrap()
            + dim_fn_value(&b, &mu2, DEFAULT_RANK_TOL).unwrap())
            / q(2, 1);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn trace_validation() {
        let s = grid3();
        let sizes: BTreeMap<String, u64> = s.points().iter().map(|p| (p.id.clone(), 2)).collect();
        let mut w = BTreeMap::new();
        w.insert("0".to_string(), q(1, 2));
        assert!(matches!(
            TraceMeasure::new("t", Arc::clone(&s), &w, &sizes),
            Err(TraceError::NotNormalised(_))
        ));
        w.insert("2".to_string(), q(1, 2));
        let mu = TraceMeasure::new("t", Arc::clone(&s), &w, &sizes).unwrap();
        let a = diag_x_one(&s, false);
        assert_eq!(dim_fn_value(&a, &mu, DEFAULT_RANK_TOL).unwrap(), q(3, 4));
        w.insert("9".to_string(), q(0, 1));
        assert_eq!(
            TraceMeasure::new("t", Arc::clone(&s), &w, &sizes).unwrap_err(),
            TraceError::UnknownPoint("9".into())
        );
        let other = Arc::new(make_grid(&[1], 3).unwrap());
        let b = diag_x_one(&other, false);
        assert!(matches!(
            dim_fn_value(&b, &mu, DEFAULT_RANK_TOL),
            Err(TraceError::Field(FieldError::SpaceMismatch { .. }))
        ));
    }

    #[test]
    fn certificate_examples() {
        let s = Arc::new(SampledSpace::discrete("pts", 0, ["x", "y"]).unwrap());
        let a = MatrixField::constant(Arc::clone(&s), real_diag(&[1.0, 0.0, 0.0])).unwrap();
        let b = MatrixField::constant(Arc::clone(&s), real_diag(&[1.0, 0.0, 0.0])).unwrap();
        let zeros: BTreeMap<String, u64> = [("x".into(), 0), ("y".into(), 0)].into();
        assert!(rank_gap_certificate(&a, &b, &zeros, DEFAULT_RANK_TOL).unwrap().holds);

        let threes: BTreeMap<String, u64> = [("x".into(), 3), ("y".into(), 3)].into();
        let b2 = MatrixField::constant(Arc::clone(&s), real_diag(&[1.0, 1.0, 0.0])).unwrap();
        assert!(rank_gap_certificate(&a, &b2, &threes, DEFAULT_RANK_TOL).unwrap().holds);

        let cert = rank_gap_certificate(&b2, &b2, &threes, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(
            cert,
            Certificate {
                holds: false,
                witness: Some("x".into())
            }
        );
    }

    #[test]
    fn ell_invariant_examples() {
        let s = grid3();
        let mus = standard_traces(&s, 2);
        let a = diag_x_one(&s, false);
        let swapped = MatrixField::diagonal(Arc::clone(&s), 2, |i| vec![1.0, s.coords_f64(i)[0]]).unwrap();
        assert!(ell_invariant(&a, &mus, 8)
            .unwrap()
            .matches(&ell_invariant(&swapped, &mus, 8).unwrap()));

        let sq = diag_x_one(&s, true);
        let ia = ell_invariant(&a, &mus[..1], 8).unwrap();
        let isq = ell_invariant(&sq, &mus[..1], 8).unwrap();
        assert_ne!(ia.distributions, isq.distributions);
        // 0, 1/2, 1 on the diagonal plus three 1s
        let hist = &ia.distributions["uniform"];
        assert_eq!(hist[&0], q(1, 6));
        assert_eq!(hist[&4], q(1, 6));
        assert_eq!(hist[&8], q(2, 3));

        let u = OperatorField::new(
            Arc::clone(&s),
            2,
            vec![crate::random::unitary(&mut crate::random::rng(4), 2); 3],
        )
        .unwrap();
        let conj = a.conjugate(&u).unwrap();
        assert_eq!(ell_invariant(&conj, &mus, 8).unwrap(), ell_invariant(&a, &mus, 8).unwrap());
    }

    #[test]
    fn histograms_sum_to_one() {
        let mut r = crate::random::rng(11);
        let s = crate::random::small_space(&mut r, 6, 1);
        let a = crate::random::contraction_field(&mut r, Arc::clone(&s), 3);
        let inv = ell_invariant(&a, &standard_traces(&s, 3), 16).unwrap();
        for hist in inv.distributions.values() {
            assert!(hist.values().sum::<Q>().is_one());
        }
    }
}
