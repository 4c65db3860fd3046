//! JSON documents for spaces, fields, decompositions, sequences and traces.
//!
//! Parsing goes through [`parse_json`], which reports the failing field path
//! and line. Exact quantities are `"p/q"` strings; matrix entries are
//! `[re, im]` pairs (a bare number is read as a real entry).

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cuntz::{TraceError, TraceMeasure};
use crate::exact::{format_q, parse_q, Rational, F17, Q};
use crate::linalg::CMat;
use crate::matfield::{FieldError, MatrixField, OperatorField};
use crate::rsh::{ClutchEntry, ConnectingMap, InductiveSequence, RshDecomposition, RshError, RshStage, SequenceError};
use crate::space::{make_grid, ClosedRegion, Coords, Point, SampledSpace, SpaceError};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    /// `message` already names the line and column.
    #[error("{path}: {message}")]
    Json {
        path: String,
        message: String,
        line: usize,
        column: usize,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Rsh(#[from] RshError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Deserializes `text`, keeping the path of the first offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        IoError::Json {
            path,
            message: inner.to_string(),
            line: inner.line(),
            column: inner.column(),
        }
    })
}

/// A coordinate: exact when given as a string or integer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoordDoc {
    Int(i64),
    Float(F17),
    Exact(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointDoc {
    pub id: String,
    #[serde(default)]
    pub coords: Vec<CoordDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceDoc {
    pub label: String,
    pub covering_dim: u64,
    pub points: Vec<PointDoc>,
    #[serde(default)]
    pub adjacency: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub dims: Vec<u64>,
    pub resolution: u64,
}

/// Either an explicit space or `{"grid": {"dims": [...], "resolution": r}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    Grid { grid: GridDoc },
    Explicit(SpaceDoc),
}

impl SpaceDoc {
    pub fn from_space(space: &SampledSpace) -> Self {
        let points = space
            .points()
            .iter()
            .map(|p| PointDoc {
                id: p.id.clone(),
                coords: match &p.coords {
                    Coords::Exact(v) => v
                        .iter()
                        .map(|x| {
                            if x.is_integer() {
                                i64::try_from(x.to_integer()).map_or_else(|_| CoordDoc::Exact(format_q(x)), CoordDoc::Int)
                            } else {
                                CoordDoc::Exact(format_q(x))
                            }
                        })
                        .collect(),
                    Coords::Float(v) => v.iter().map(|&x| CoordDoc::Float(F17(x))).collect(),
                },
            })
            .collect();
        let adjacency = space
            .edges()
            .into_iter()
            .map(|(u, v)| (space.id(u).to_string(), space.id(v).to_string()))
            .collect();
        Self {
            label: space.label().to_string(),
            covering_dim: space.covering_dim(),
            points,
            adjacency,
        }
    }

    pub fn build(&self) -> Result<SampledSpace, IoError> {
        let mut points = Vec::with_capacity(self.points.len());
        for p in &self.points {
            let any_float = p.coords.iter().any(|c| matches!(c, CoordDoc::Float(_)));
            let coords = if any_float {
                let v = p
                    .coords
                    .iter()
                    .map(|c| match c {
                        CoordDoc::Int(i) => Ok(*i as f64),
                        CoordDoc::Float(x) => Ok(x.0),
                        CoordDoc::Exact(s) => bad_q(&p.id, s).map(|x| crate::exact::q_to_f64(&x)),
                    })
                    .collect::<Result<_, _>>()?;
                Coords::Float(v)
            } else {
                let v = p
                    .coords
                    .iter()
                    .map(|c| match c {
                        CoordDoc::Int(i) => Ok(Q::from(num_bigint::BigInt::from(*i))),
                        CoordDoc::Exact(s) => bad_q(&p.id, s),
                        CoordDoc::Float(_) => unreachable!(),
                    })
                    .collect::<Result<_, _>>()?;
                Coords::Exact(v)
            };
            points.push(Point { id: p.id.clone(), coords });
        }
        Ok(SampledSpace::new(self.label.clone(), self.covering_dim, points, &self.adjacency)?)
    }
}

fn bad_q(id: &str, s: &str) -> Result<Q, IoError> {
    parse_q(s).map_err(|e| IoError::Invalid(format!("point {id:?}: {e}")))
}

impl SpaceSpec {
    pub fn build(&self) -> Result<SampledSpace, IoError> {
        match self {
            SpaceSpec::Grid { grid } => Ok(make_grid(&grid.dims, grid.resolution)?),
            SpaceSpec::Explicit(doc) => doc.build(),
        }
    }
}

/// A matrix entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryDoc {
    Pair([F17; 2]),
    Real(F17),
}

impl EntryDoc {
    fn value(self) -> Complex64 {
        match self {
            EntryDoc::Pair([re, im]) => Complex64::new(re.0, im.0),
            EntryDoc::Real(re) => Complex64::new(re.0, 0.0),
        }
    }
}

/// `{ "space_label", "n", "values": { id: n×n entries } }`, optionally with
/// the space itself under `"space"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDoc {
    pub space_label: String,
    pub n: usize,
    pub values: BTreeMap<String, Vec<Vec<EntryDoc>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
}

impl FieldDoc {
    pub fn from_values(space: &SampledSpace, n: usize, values: &[CMat]) -> Self {
        let values = (0..space.len())
            .map(|i| {
                let m = &values[i];
                let rows = (0..n)
                    .map(|r| (0..n).map(|c| EntryDoc::Pair([F17(m[(r, c)].re), F17(m[(r, c)].im)])).collect())
                    .collect();
                (space.id(i).to_string(), rows)
            })
            .collect();
        Self {
            space_label: space.label().to_string(),
            n,
            values,
            space: None,
        }
    }

    pub fn from_field(a: &MatrixField) -> Self {
        Self::from_values(a.space(), a.n(), a.values())
    }

    pub fn from_operator(v: &OperatorField) -> Self {
        Self::from_values(v.space(), v.n(), v.values())
    }

    /// The embedded space, if any.
    pub fn embedded_space(&self) -> Result<Option<Arc<SampledSpace>>, IoError> {
        self.space.as_ref().map(|s| s.build().map(Arc::new)).transpose()
    }

    fn matrices(&self, space: &SampledSpace) -> Result<Vec<CMat>, IoError> {
        if self.space_label != space.label() {
            return Err(IoError::Invalid(format!(
                "field refers to space {:?} but space {:?} was supplied",
                self.space_label,
                space.label()
            )));
        }
        if let Some(extra) = self.values.keys().find(|k| space.index_of(k).is_none()) {
            return Err(IoError::Invalid(format!("values: unknown point {extra:?}")));
        }
        space
            .points()
            .iter()
            .map(|p| {
                let rows = self
                    .values
                    .get(&p.id)
                    .ok_or_else(|| IoError::Invalid(format!("values: missing point {:?}", p.id)))?;
                if rows.len() != self.n || rows.iter().any(|r| r.len() != self.n) {
                    return Err(IoError::Invalid(format!(
                        "values.{}: expected a {n}×{n} matrix",
                        p.id,
                        n = self.n
                    )));
                }
                Ok(DMatrix::from_fn(self.n, self.n, |r, c| rows[r][c].value()))
            })
            .collect()
    }

    /// Positive contraction field on `space`.
    pub fn to_field(&self, space: Arc<SampledSpace>) -> Result<MatrixField, IoError> {
        let values = self.matrices(&space)?;
        Ok(MatrixField::new(space, self.n, values)?)
    }

    pub fn to_operator(&self, space: Arc<SampledSpace>) -> Result<OperatorField, IoError> {
        let values = self.matrices(&space)?;
        Ok(OperatorField::new(space, self.n, values)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageDoc {
    pub space: SpaceSpec,
    #[serde(default)]
    pub boundary: Vec<String>,
    pub matrix_size: u64,
    #[serde(default)]
    pub clutch: Vec<ClutchEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDoc {
    pub label: String,
    pub stages: Vec<StageDoc>,
}

impl DecompositionDoc {
    pub fn build(&self) -> Result<RshDecomposition, IoError> {
        let stages = self
            .stages
            .iter()
            .map(|s| {
                let space = Arc::new(s.space.build()?);
                let boundary = ClosedRegion::new(Arc::clone(&space), s.boundary.iter().cloned())?;
                Ok(RshStage {
                    base_space: space,
                    boundary,
                    matrix_size: s.matrix_size,
                    clutch: s.clutch.clone(),
                })
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(RshDecomposition::new(self.label.clone(), stages)?)
    }

    pub fn from_decomposition(d: &RshDecomposition) -> Self {
        Self {
            label: d.label().to_string(),
            stages: d
                .stages()
                .iter()
                .map(|s| StageDoc {
                    space: SpaceSpec::Explicit(SpaceDoc::from_space(&s.base_space)),
                    boundary: s.boundary.ids().into_iter().map(String::from).collect(),
                    matrix_size: s.matrix_size,
                    clutch: s.clutch.clone(),
                })
                .collect(),
        }
    }
}

/// Terms plus, optionally, one connecting map between consecutive terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceDoc {
    pub terms: Vec<DecompositionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<Vec<ConnectingMap>>,
}

impl SequenceDoc {
    pub fn build(&self) -> Result<InductiveSequence, IoError> {
        let terms = self.terms.iter().map(DecompositionDoc::build).collect::<Result<Vec<_>, _>>()?;
        if terms.is_empty() {
            return Err(IoError::Invalid("terms: sequence is empty".into()));
        }
        match &self.maps {
            None => Ok(InductiveSequence::unlinked(terms)),
            Some(maps) => Ok(InductiveSequence::new(terms, maps.clone())?),
        }
    }
}

/// A trace on `C(X, M_n)`-type algebras.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceDoc {
    /// Weights per point (missing points weigh 0) and matrix size per point.
    Explicit {
        id: String,
        weights: BTreeMap<String, Rational>,
        sizes: BTreeMap<String, u64>,
    },
    Uniform { size: u64 },
    /// One point evaluation per sample point.
    Extreme { size: u64 },
}

pub fn build_traces(docs: &[TraceDoc], space: &Arc<SampledSpace>) -> Result<Vec<TraceMeasure>, IoError> {
    let mut out = Vec::new();
    for doc in docs {
        match doc {
            TraceDoc::Explicit { id, weights, sizes } => {
                let w: BTreeMap<String, Q> = weights.iter().map(|(k, v)| (k.clone(), v.0.clone())).collect();
                out.push(TraceMeasure::new(id.clone(), Arc::clone(space), &w, sizes)?);
            }
            TraceDoc::Uniform { size } | TraceDoc::Extreme { size } if *size == 0 || space.is_empty() => {
                return Err(IoError::Invalid("traces: size and space must be nonempty".into()));
            }
            TraceDoc::Uniform { size } => out.push(TraceMeasure::uniform("uniform", Arc::clone(space), *size)),
            TraceDoc::Extreme { size } => out.extend(TraceMeasure::extreme_traces(space, *size)),
        }
    }
    Ok(out)
}
