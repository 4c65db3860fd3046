//! Recursive subhomogeneous decompositions
//! `R_l = R_{l−1} ⊕_{M_{n(l)}(C(X_l^{(0)}))} M_{n(l)}(C(X_l))`.
//!
//! Clutching maps are diagonal: each boundary point of stage `k` is sent to
//! a list of point evaluations in earlier stages whose sizes add up to
//! `n(k)`.

mod schedule;
mod sequence;

pub use schedule::{delta_schedule, required_delta0, DeltaSchedule, RequiredDelta0, DEFAULT_N};
pub use sequence::{
    slow_dimension_growth_check, ConnectingMap, InductiveSequence, PatternEntry, PatternKind, SdgResult,
    SequenceError,
};

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cuntz::rank_gap_holds;
use crate::exact::Q;
use crate::matfield::{same_space, FieldError, MatrixField};
use crate::space::{ClosedRegion, SampledSpace};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RshError {
    #[error("decomposition has no stages")]
    Empty,
    #[error("stage {0}: matrix size must be positive")]
    ZeroSize(usize),
    #[error("stage {0}: boundary lives on a different space")]
    BoundaryNotInSpace(usize),
    #[error("stage 0 must have an empty boundary")]
    StageZeroBoundary,
    #[error("stage {stage}: clutch point {point:?} is not a boundary point")]
    ClutchOffBoundary { stage: usize, point: String },
    #[error("stage {stage}: boundary point {point:?} has no clutch data")]
    MissingClutch { stage: usize, point: String },
    #[error("stage {stage}: boundary point {point:?} listed twice")]
    DuplicateClutch { stage: usize, point: String },
    #[error("stage {stage}: target stage {target} is not an earlier stage")]
    BadTargetStage { stage: usize, target: usize },
    #[error("stage {stage}: target point {point:?} not in stage {target}")]
    UnknownTargetPoint { stage: usize, target: usize, point: String },
    #[error("stage {stage}: targets of {point:?} have total size {total}, expected {expected}")]
    NotUnital {
        stage: usize,
        point: String,
        total: u64,
        expected: u64,
    },
    #[error("expected {expected} fields (one per stage), got {got}")]
    StageCount { expected: usize, got: usize },
    #[error("stage {stage}: field size {n} is not a multiple of the stage size {size}")]
    FieldSize { stage: usize, n: usize, size: u64 },
    #[error("stage {0}: field lives on a different space")]
    FieldSpace(usize),
    #[error("amplification factor must be positive")]
    ZeroFactor,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A point evaluation `ev_x` on stage `stage`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClutchTarget {
    pub stage: usize,
    pub point: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClutchEntry {
    pub boundary_point: String,
    pub targets: Vec<ClutchTarget>,
}

#[derive(Clone, Debug)]
pub struct RshStage {
    pub base_space: Arc<SampledSpace>,
    pub boundary: ClosedRegion,
    pub matrix_size: u64,
    pub clutch: Vec<ClutchEntry>,
}

impl RshStage {
    /// A stage with empty boundary.
    pub fn free(base_space: Arc<SampledSpace>, matrix_size: u64) -> Self {
        Self {
            boundary: ClosedRegion::empty(Arc::clone(&base_space)),
            base_space,
            matrix_size,
            clutch: Vec::new(),
        }
    }

    pub fn dim(&self) -> u64 {
        self.base_space.covering_dim()
    }
}

#[derive(Clone, Debug)]
pub struct RshDecomposition {
    stages: Vec<RshStage>,
    label: String,
}

impl RshDecomposition {
    pub fn new(label: impl Into<String>, stages: Vec<RshStage>) -> Result<Self, RshError> {
        if stages.is_empty() {
            return Err(RshError::Empty);
        }
        if !stages[0].boundary.is_empty() {
            return Err(RshError::StageZeroBoundary);
        }
        for (k, stage) in stages.iter().enumerate() {
            validate_stage(k, stage, &stages[..k])?;
        }
        Ok(Self {
            stages,
            label: label.into(),
        })
    }

    /// `M_m(C(X))`.
    pub fn homogeneous(label: impl Into<String>, space: Arc<SampledSpace>, m: u64) -> Result<Self, RshError> {
        Self::new(label, vec![RshStage::free(space, m)])
    }

    pub fn stages(&self) -> &[RshStage] {
        &self.stages
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `l`, the number of stages minus one.
    pub fn length(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn matrix_sizes(&self) -> Vec<u64> {
        self.stages.iter().map(|s| s.matrix_size).collect()
    }
}

fn validate_stage(k: usize, stage: &RshStage, earlier: &[RshStage]) -> Result<(), RshError> {
    if stage.matrix_size == 0 {
        return Err(RshError::ZeroSize(k));
    }
    if !same_space(stage.boundary.space(), &stage.base_space) {
        return Err(RshError::BoundaryNotInSpace(k));
    }
    let mut seen = std::collections::BTreeSet::new();
    for entry in &stage.clutch {
        let p = &entry.boundary_point;
        let inside = stage.base_space.index_of(p).is_some_and(|i| stage.boundary.contains(i));
        if !inside {
            return Err(RshError::ClutchOffBoundary {
                stage: k,
                point: p.clone(),
            });
        }
        if !seen.insert(p.as_str()) {
            return Err(RshError::DuplicateClutch {
                stage: k,
                point: p.clone(),
            });
        }
        let mut total = 0u64;
        for t in &entry.targets {
            let target = earlier.get(t.stage).ok_or(RshError::BadTargetStage {
                stage: k,
                target: t.stage,
            })?;
            if target.base_space.index_of(&t.point).is_none() {
                return Err(RshError::UnknownTargetPoint {
                    stage: k,
                    target: t.stage,
                    point: t.point.clone(),
                });
            }
            total += target.matrix_size;
        }
        if total != stage.matrix_size {
            return Err(RshError::NotUnital {
                stage: k,
                point: p.clone(),
                total,
                expected: stage.matrix_size,
            });
        }
    }
    for id in stage.boundary.ids() {
        if !seen.contains(id) {
            return Err(RshError::MissingClutch {
                stage: k,
                point: id.to_string(),
            });
        }
    }
    Ok(())
}

/// `(dim − 1)/(2·size)`, clamped at 0.
pub fn stage_rc_bound(dim: u64, size: u64) -> Q {
    assert!(size > 0);
    if dim <= 1 {
        return Q::zero();
    }
    Q::new(BigInt::from(dim - 1), BigInt::from(2u64) * BigInt::from(size))
}

/// `max(0, max_k (dim X_k − 1)/(2 n(k)))`.
pub fn rc_upper_bound(d: &RshDecomposition) -> Q {
    d.stages
        .iter()
        .map(|s| stage_rc_bound(s.dim(), s.matrix_size))
        .max()
        .unwrap_or_else(Q::zero)
}

/// `M_m(R)`: every matrix size times `m`. Clutch targets keep their lists,
/// which stays unital because the target stages scale by the same factor.
pub fn matrix_amplify(d: &RshDecomposition, m: u64) -> Result<RshDecomposition, RshError> {
    if m == 0 {
        return Err(RshError::ZeroFactor);
    }
    let stages = d
        .stages
        .iter()
        .map(|s| RshStage {
            matrix_size: s.matrix_size * m,
            ..s.clone()
        })
        .collect();
    let label = if m == 1 {
        d.label.clone()
    } else {
        format!("M_{m}({})", d.label)
    };
    RshDecomposition::new(label, stages)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageCertificate {
    pub holds: bool,
    /// `(stage, point id)` of the first violation.
    pub witness: Option<(usize, String)>,
}

/// The rank-gap condition on each `X_k \ X_k^{(0)}` with `d(x) = dim X_k`.
/// Field `k` must live on `X_k` with size a multiple of `n(k)`.
pub fn stage_rank_gap_certificate(
    d: &RshDecomposition,
    a: &[MatrixField],
    b: &[MatrixField],
    tol: f64,
) -> Result<StageCertificate, RshError> {
    for fields in [a, b] {
        if fields.len() != d.stages.len() {
            return Err(RshError::StageCount {
                expected: d.stages.len(),
                got: fields.len(),
            });
        }
    }
    for (k, stage) in d.stages.iter().enumerate() {
        for f in [&a[k], &b[k]] {
            if !same_space(f.space(), &stage.base_space) {
                return Err(RshError::FieldSpace(k));
            }
            if f.n() as u64 % stage.matrix_size != 0 {
                return Err(RshError::FieldSize {
                    stage: k,
                    n: f.n(),
                    size: stage.matrix_size,
                });
            }
        }
        a[k].check_compatible(&b[k])?;
    }
    if !(tol > 0.0) {
        return Err(FieldError::NonPositiveTolerance(tol).into());
    }
    for (k, stage) in d.stages.iter().enumerate() {
        let space = stage.base_space.as_ref();
        for i in space.sorted_indices() {
            if stage.boundary.contains(i) {
                continue;
            }
            let ra = a[k].rank_at(i, tol);
            let rb = b[k].rank_at(i, tol);
            if !rank_gap_holds(ra, rb, stage.dim()) {
                return Ok(StageCertificate {
                    holds: false,
                    witness: Some((k, space.id(i).to_string())),
                });
            }
        }
    }
    Ok(StageCertificate {
        holds: true,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuntz::{rank_gap_certificate, uniform_dims};
    use crate::exact::q;
    use crate::linalg::real_diag;
    use crate::matfield::DEFAULT_RANK_TOL;
    use crate::space::make_grid;

    fn cube(dim: u64) -> Arc<SampledSpace> {
        Arc::new(SampledSpace::discrete(format!("[0,1]^{dim}"), dim, ["o"]).unwrap())
    }

    #[test]
    fn rc_examples() {
        let d = RshDecomposition::homogeneous("m", cube(7), 3).unwrap();
        assert_eq!(rc_upper_bound(&d), q(6, 6));
        for dim in [0, 1] {
            let d = RshDecomposition::homogeneous("m", cube(dim), 3).unwrap();
            assert_eq!(rc_upper_bound(&d), q(0, 1));
        }
        let two = RshDecomposition::new(
            "two",
            vec![RshStage::free(cube(3), 2), RshStage::free(cube(5), 4)],
        )
        .unwrap();
        assert_eq!(rc_upper_bound(&two), q(1, 2));
    }

    #[test]
    fn amplification() {
        let d = RshDecomposition::homogeneous("m", cube(5), 2).unwrap();
        assert_eq!(rc_upper_bound(&d), q(1, 1));
        let same = matrix_amplify(&d, 1).unwrap();
        assert_eq!(same.matrix_sizes(), d.matrix_sizes());
        assert_eq!(same.label(), d.label());
        assert_eq!(rc_upper_bound(&matrix_amplify(&d, 2).unwrap()), q(1, 2));
        assert_eq!(matrix_amplify(&d, 0).unwrap_err(), RshError::ZeroFactor);
    }

    /// Interval `X_1 = {0, 1/2, 1}` glued at its endpoints to two copies of
    /// stage 0 (a point with `M_1`), so `n(1) = 2`.
    fn glued() -> RshDecomposition {
        let x0 = Arc::new(SampledSpace::discrete("pt", 0, ["*"]).unwrap());
        let x1 = Arc::new(make_grid(&[1], 2).unwrap());
        let boundary = ClosedRegion::new(Arc::clone(&x1), ["0", "2"]).unwrap();
        let to_point = |p: &str| ClutchEntry {
            boundary_point: p.into(),
            targets: vec![
                ClutchTarget {
                    stage: 0,
                    point: "*".into(),
                },
                ClutchTarget {
                    stage: 0,
                    point: "*".into(),
                },
            ],
        };
        RshDecomposition::new(
            "glued",
            vec![
                RshStage::free(x0, 1),
                RshStage {
                    base_space: x1,
                    boundary,
                    matrix_size: 2,
                    clutch: vec![to_point("0"), to_point("2")],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn boundary_is_excluded() {
        let d = glued();
        let x0 = Arc::clone(&d.stages()[0].base_space);
        let x1 = Arc::clone(&d.stages()[1].base_space);
        let a0 = MatrixField::identity(Arc::clone(&x0), 1);
        let b0 = MatrixField::identity(x0, 1);
        // rank 2 vs rank 1 only at the endpoints
        let a1 = MatrixField::diagonal(Arc::clone(&x1), 2, |i| if i == 1 { vec![1.0, 0.0] } else { vec![1.0, 1.0] })
            .unwrap();
        let b1 = MatrixField::constant(Arc::clone(&x1), real_diag(&[1.0, 0.0])).unwrap();
        let cert = stage_rank_gap_certificate(&d, &[a0.clone(), a1], &[b0.clone(), b1.clone()], DEFAULT_RANK_TOL).unwrap();
        assert!(cert.holds);

        let a1 = MatrixField::identity(Arc::clone(&x1), 2);
        let cert = stage_rank_gap_certificate(&d, &[a0, a1], &[b0, b1], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(cert.witness, Some((1, "1".to_string())));
    }

    #[test]
    fn length_zero_matches_single_certificate() {
        let mut r = crate::random::rng(12);
        for _ in 0..30 {
            let dim = rand::Rng::random_range(&mut r, 0..=3u64);
            let s = crate::random::small_space(&mut r, 6, dim);
            let d = RshDecomposition::homogeneous("h", Arc::clone(&s), 2).unwrap();
            let ranks = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> {
                (0..s.len()).map(|_| rand::Rng::random_range(r, 0..=2usize)).collect()
            };
            let (ra, rb) = (ranks(&mut r), ranks(&mut r));
            let a = crate::random::field_with_ranks(&mut r, Arc::clone(&s), 2, &ra);
            let b = crate::random::field_with_ranks(&mut r, Arc::clone(&s), 2, &rb);
            let staged = stage_rank_gap_certificate(&d, &[a.clone()], &[b.clone()], DEFAULT_RANK_TOL).unwrap();
            let plain = rank_gap_certificate(&a, &b, &uniform_dims(&s), DEFAULT_RANK_TOL).unwrap();
            assert_eq!(staged.holds, plain.holds);
            assert_eq!(staged.witness.map(|(_, p)| p), plain.witness);
        }
    }

    #[test]
    fn validation_errors() {
        let x1 = Arc::new(make_grid(&[1], 2).unwrap());
        let pt = Arc::new(SampledSpace::discrete("pt", 0, ["*"]).unwrap());
        let boundary = ClosedRegion::new(Arc::clone(&x1), ["0"]).unwrap();
        let first = RshStage {
            base_space: Arc::clone(&x1),
            boundary: boundary.clone(),
            matrix_size: 1,
            clutch: vec![],
        };
        assert_eq!(RshDecomposition::new("x", vec![first]).unwrap_err(), RshError::StageZeroBoundary);
        assert_eq!(RshDecomposition::new("x", vec![]).unwrap_err(), RshError::Empty);

        let second = |targets: Vec<ClutchTarget>| RshStage {
            base_space: Arc::clone(&x1),
            boundary: boundary.clone(),
            matrix_size: 2,
            clutch: vec![ClutchEntry {
                boundary_point: "0".into(),
                targets,
            }],
        };
        let star = ClutchTarget {
            stage: 0,
            point: "*".into(),
        };
        let err = RshDecomposition::new("x", vec![RshStage::free(Arc::clone(&pt), 1), second(vec![star.clone()])]);
        assert!(matches!(err, Err(RshError::NotUnital { total: 1, expected: 2, .. })));
        let err = RshDecomposition::new(
            "x",
            vec![
                RshStage::free(Arc::clone(&pt), 1),
                second(vec![star.clone(), ClutchTarget { stage: 1, point: "*".into() }]),
            ],
        );
        assert!(matches!(err, Err(RshError::BadTargetStage { .. })));
        let missing = RshStage {
            clutch: vec![],
            ..second(vec![])
        };
        let err = RshDecomposition::new("x", vec![RshStage::free(pt, 1), missing]);
        assert!(matches!(err, Err(RshError::MissingClutch { .. })));
    }
}
