//! Inductive sequences of decompositions joined by diagonal connecting maps.

use serde::{Deserialize, Serialize};

use super::{RshDecomposition, RshError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternKind {
    /// `f ↦ f∘π` for a coordinate projection `π` onto the listed coordinates.
    Pullback { coordinates: Vec<usize> },
    /// `f ↦ f(x)` (constant in the new variable).
    Evaluation { point: String },
}

/// `multiplicity` copies of one eigenvalue map out of source stage `stage`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternEntry {
    pub stage: usize,
    pub kind: PatternKind,
    pub multiplicity: u64,
}

/// For each stage of the target term, the diagonal pattern landing there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectingMap {
    pub patterns: Vec<Vec<PatternEntry>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SequenceError {
    #[error("{terms} terms need {expected} connecting maps, got {got}")]
    MapCount { terms: usize, expected: usize, got: usize },
    #[error("map {map}: {got} stage patterns for a target with {expected} stages")]
    PatternCount { map: usize, expected: usize, got: usize },
    #[error("map {map}, target stage {stage}: unknown source stage {source_stage}")]
    UnknownSource { map: usize, stage: usize, source_stage: usize },
    #[error("map {map}, target stage {stage}: unknown evaluation point {point:?}")]
    UnknownPoint { map: usize, stage: usize, point: String },
    #[error("map {map}, target stage {stage}: pattern has total size {total}, expected {expected}")]
    NotUnital {
        map: usize,
        stage: usize,
        total: u64,
        expected: u64,
    },
    #[error(transparent)]
    Rsh(#[from] RshError),
}

#[derive(Clone, Debug)]
pub struct InductiveSequence {
    terms: Vec<RshDecomposition>,
    maps: Vec<ConnectingMap>,
}

impl InductiveSequence {
    /// Checks that each pattern is unital: `Σ multiplicity·n_j(source)` equals
    /// the target stage size.
    pub fn new(terms: Vec<RshDecomposition>, maps: Vec<ConnectingMap>) -> Result<Self, SequenceError> {
        let expected = terms.len().saturating_sub(1);
        if maps.len() != expected {
            return Err(SequenceError::MapCount {
                terms: terms.len(),
                expected,
                got: maps.len(),
            });
        }
        for (m, map) in maps.iter().enumerate() {
            let (src, dst) = (&terms[m], &terms[m + 1]);
            if map.patterns.len() != dst.stages().len() {
                return Err(SequenceError::PatternCount {
                    map: m,
                    expected: dst.stages().len(),
                    got: map.patterns.len(),
                });
            }
            for (k, pattern) in map.patterns.iter().enumerate() {
                let mut total = 0u64;
                for e in pattern {
                    let source = src.stages().get(e.stage).ok_or(SequenceError::UnknownSource {
                        map: m,
                        stage: k,
                        source_stage: e.stage,
                    })?;
                    if let PatternKind::Evaluation { point } = &e.kind {
                        if source.base_space.index_of(point).is_none() {
                            return Err(SequenceError::UnknownPoint {
                                map: m,
                                stage: k,
                                point: point.clone(),
                            });
                        }
                    }
                    total += e.multiplicity * source.matrix_size;
                }
                let expected = dst.stages()[k].matrix_size;
                if total != expected {
                    return Err(SequenceError::NotUnital {
                        map: m,
                        stage: k,
                        total,
                        expected,
                    });
                }
            }
        }
        Ok(Self { terms, maps })
    }

    /// Terms with no connecting data; for growth checks only.
    pub fn unlinked(terms: Vec<RshDecomposition>) -> Self {
        Self { terms, maps: Vec::new() }
    }

    pub fn terms(&self) -> &[RshDecomposition] {
        &self.terms
    }

    pub fn maps(&self) -> &[ConnectingMap] {
        &self.maps
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SdgResult {
    /// Least `j0 > i` from which every represented term satisfies
    /// `n_j(k) ≥ N·dim X_{j,k}` at every stage; `None` if no such index
    /// exists within the sequence.
    pub j0: Option<usize>,
}

pub fn slow_dimension_growth_check(seq: &InductiveSequence, n: u64, i: usize) -> SdgResult {
    assert!(i < seq.terms.len(), "index {i} outside the sequence");
    let good = |t: &RshDecomposition| {
        t.stages()
            .iter()
            .all(|s| s.matrix_size as u128 >= n as u128 * s.dim() as u128)
    };
    // scan from the end for the longest good suffix
    let mut j0 = None;
    for j in (i + 1..seq.terms.len()).rev() {
        if good(&seq.terms[j]) {
            j0 = Some(j);
        } else {
            break;
        }
    }
    SdgResult { j0 }
}
