//! Finite samples of compact metric spaces.
//!
//! A [`SampledSpace`] is a list of labelled points with coordinates, a
//! symmetric neighbour relation and a *declared* covering dimension. The
//! dimension is metadata: it cannot be recovered from finitely many samples,
//! so it is carried alongside them. Closed subsets are arbitrary point sets;
//! topology only enters through the neighbour relation.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;

use crate::exact::{q_to_f64, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpaceError {
    #[error("duplicate point id {0:?}")]
    DuplicateId(String),
    #[error("unknown point id {0:?}")]
    UnknownPoint(String),
    #[error("point {0:?} is adjacent to itself")]
    SelfLoop(String),
    #[error("grid needs at least one factor")]
    EmptyDims,
    #[error("grid factor dimensions must be positive")]
    ZeroDim,
    #[error("grid resolution must be at least 1")]
    ZeroResolution,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coords {
    Exact(Vec<Q>),
    Float(Vec<f64>),
}

impl Coords {
    pub fn len(&self) -> usize {
        match self {
            Coords::Exact(v) => v.len(),
            Coords::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Coords::Exact(v) => v.iter().map(q_to_f64).collect(),
            Coords::Float(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub id: String,
    pub coords: Coords,
}

/// Finite sample of a compact space. Immutable once built.
#[derive(Clone, Debug)]
pub struct SampledSpace {
    label: String,
    covering_dim: u64,
    points: Vec<Point>,
    index: HashMap<String, usize>,
    neighbors: Vec<Vec<usize>>,
}

impl PartialEq for SampledSpace {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
            && self.covering_dim == other.covering_dim
            && self.points == other.points
            && self.neighbors == other.neighbors
    }
}

impl SampledSpace {
    /// Builds a space from points and an undirected edge list. Edges may be
    /// listed in either or both directions; duplicates collapse.
    pub fn new(
        label: impl Into<String>,
        covering_dim: u64,
        points: Vec<Point>,
        adjacency: &[(String, String)],
    ) -> Result<Self, SpaceError> {
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.id.clone(), i).is_some() {
                return Err(SpaceError::DuplicateId(p.id.clone()));
            }
        }
        let mut sets = vec![BTreeSet::new(); points.len()];
        for (u, v) in adjacency {
            let iu = *index.get(u).ok_or_else(|| SpaceError::UnknownPoint(u.clone()))?;
            let iv = *index.get(v).ok_or_else(|| SpaceError::UnknownPoint(v.clone()))?;
            if iu == iv {
                return Err(SpaceError::SelfLoop(u.clone()));
            }
            sets[iu].insert(iv);
            sets[iv].insert(iu);
        }
        let neighbors = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        Ok(Self {
            label: label.into(),
            covering_dim,
            points,
            index,
            neighbors,
        })
    }

    /// Points with the given ids, no coordinates beyond a single zero and no
    /// adjacency. Used for spaces that only matter through their dimension.
    pub fn discrete<I, S>(label: impl Into<String>, covering_dim: u64, ids: I) -> Result<Self, SpaceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let points = ids
            .into_iter()
            .map(|id| Point {
                id: id.into(),
                coords: Coords::Float(vec![]),
            })
            .collect();
        Self::new(label, covering_dim, points, &[])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn covering_dim(&self) -> u64 {
        self.covering_dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn id(&self, i: usize) -> &str {
        &self.points[i].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, ns) in self.neighbors.iter().enumerate() {
            out.extend(ns.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    /// Indices ordered by point id; the reduction order for anything that
    /// must not depend on insertion order.
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.points[a].id.cmp(&self.points[b].id));
        idx
    }

    /// Connected components of the neighbour graph, each sorted, in order of
    /// their smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut k = 0;
            while k < comp.len() {
                for &j in &self.neighbors[comp[k]] {
                    if !seen[j] {
                        seen[j] = true;
                        comp.push(j);
                    }
                }
                k += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Float coordinates of point `i`.
    pub fn coords_f64(&self, i: usize) -> Vec<f64> {
        self.points[i].coords.to_f64()
    }
}

impl fmt::Display for SampledSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} points, covering dim {})",
            self.label,
            self.points.len(),
            self.covering_dim
        )
    }
}

/// Regular grid on a product of unit cubes `[0,1]^{d_1} × … × [0,1]^{d_k}`.
///
/// The grid has `resolution + 1` samples per axis at exact rational
/// coordinates `i / resolution`, `Σ d_i` axes in total, and joins points that
/// differ by one step along a single axis. Point ids are the comma-joined
/// axis indices (`"0,2,1"`).
pub fn make_grid(dims: &[u64], resolution: u64) -> Result<SampledSpace, SpaceError> {
    if dims.is_empty() {
        return Err(SpaceError::EmptyDims);
    }
    if dims.contains(&0) {
        return Err(SpaceError::ZeroDim);
    }
    if resolution == 0 {
        return Err(SpaceError::ZeroResolution);
    }
    let axes: u64 = dims.iter().sum();
    let axes = axes as usize;
    let side = resolution as usize + 1;
    let total = side.pow(axes as u32);

    let id_of = |idx: &[usize]| {
        idx.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };

    let mut points = Vec::with_capacity(total);
    let mut adjacency = Vec::new();
    let mut idx = vec![0usize; axes];
    for _ in 0..total {
        let coords = idx
            .iter()
            .map(|&i| Q::new(BigInt::from(i), BigInt::from(resolution)))
            .collect();
        let id = id_of(&idx);
        for axis in 0..axes {
            if idx[axis] + 1 < side {
                let mut next = idx.clone();
                next[axis] += 1;
                adjacency.push((id.clone(), id_of(&next)));
            }
        }
        points.push(Point {
            id,
            coords: Coords::Exact(coords),
        });
        // odometer, last axis fastest
        for axis in (0..axes).rev() {
            idx[axis] += 1;
            if idx[axis] < side {
                break;
            }
            idx[axis] = 0;
        }
    }
    let label = format!(
        "grid[{}]@{}",
        dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","),
        resolution
    );
    SampledSpace::new(label, axes as u64, points, &adjacency)
}

/// Subset of a space standing in for a closed set.
#[derive(Clone, Debug)]
pub struct ClosedRegion {
    space: Arc<SampledSpace>,
    members: BTreeSet<usize>,
}

impl ClosedRegion {
    pub fn new<I, S>(space: Arc<SampledSpace>, ids: I) -> Result<Self, SpaceError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut members = BTreeSet::new();
        for id in ids {
            let id = id.as_ref();
            let i = space
                .index_of(id)
                .ok_or_else(|| SpaceError::UnknownPoint(id.to_string()))?;
            members.insert(i);
        }
        Ok(Self { space, members })
    }

    pub fn from_indices(space: Arc<SampledSpace>, members: BTreeSet<usize>) -> Self {
        assert!(members.iter().all(|&i| i < space.len()));
        Self { space, members }
    }

    pub fn empty(space: Arc<SampledSpace>) -> Self {
        Self {
            space,
            members: BTreeSet::new(),
        }
    }

    pub fn full(space: Arc<SampledSpace>) -> Self {
        let members = (0..space.len()).collect();
        Self { space, members }
    }

    pub fn space(&self) -> &Arc<SampledSpace> {
        &self.space
    }

    pub fn members(&self) -> &BTreeSet<usize> {
        &self.members
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.contains(&i)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.members.iter().map(|&i| self.space.id(i)).collect()
    }

    /// The region together with every outside point adjacent to it: the
    /// discrete stand-in for passing to the closure of a neighbourhood.
    pub fn complement_closure(&self) -> ClosedRegion {
        let mut members = self.members.clone();
        for &i in &self.members {
            members.extend(self.space.neighbors(i).iter().copied());
        }
        ClosedRegion {
            space: Arc::clone(&self.space),
            members,
        }
    }

    /// Points of the space not in the region.
    pub fn complement(&self) -> ClosedRegion {
        let members = (0..self.space.len())
            .filter(|i| !self.members.contains(i))
            .collect();
        ClosedRegion {
            space: Arc::clone(&self.space),
            members,
        }
    }
}
