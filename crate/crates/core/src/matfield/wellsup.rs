//! Well-supported approximants obtained as compressions `h a h`.
//!
//! The spectrum of every `a(x)` is split at a single threshold `η`, chosen
//! inside an eigenvalue-free band of `[ε/8, ε/4]` shared by all sample
//! points. Eigenvalues below the band are discarded, giving a thresholded
//! element `ã`; then `h = f(ã)` for the ramp `f(t) = min{t/η, 1}`. Because
//! `ã` has no spectrum in `(0, η]`, `h` is the support projection of `ã`
//! and `h a h = ã`.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::linalg::{self, CMat, HermitianEigen};
use crate::space::ClosedRegion;

use super::{FieldError, MatrixField};

/// Projection defect allowed in [`SupportData`] checks.
pub const PROJECTION_TOL: f64 = 1e-9;
/// Minimum width of the selected band, as a fraction of the window width.
pub const MIN_BAND_FRACTION: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WellSupportedError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("tolerance must lie in (0,1), got {0}")]
    BadEpsilon(f64),
    #[error(
        "no admissible threshold: widest eigenvalue-free band in [{lo:e}, {hi:e}] is {widest:e} wide, \
         need at least {required:e}; refine eps"
    )]
    NoAdmissibleEta {
        lo: f64,
        hi: f64,
        widest: f64,
        required: f64,
    },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SupportViolation {
    #[error("plateau ranks are not strictly increasing at plateau {0}")]
    Unordered(usize),
    #[error("p for rank {rank} at {point:?} is not a projection (defect {defect:e})")]
    NotProjection {
        rank: usize,
        point: String,
        defect: f64,
    },
    #[error("p for rank {rank} at {point:?} has rank {found}")]
    WrongRank {
        rank: usize,
        point: String,
        found: usize,
    },
    #[error("p for rank {rank} at {point:?} differs from the support projection by {defect:e}")]
    NotSupport {
        rank: usize,
        point: String,
        defect: f64,
    },
    #[error("nesting fails at {point:?}: p(rank {lower}) is not below p(rank {upper}) (min eigenvalue {min_eig:e})")]
    NotNested {
        point: String,
        lower: usize,
        upper: usize,
        min_eig: f64,
    },
}

/// One rank plateau `F_i` with its projection field on the closure.
#[derive(Clone, Debug)]
pub struct Plateau {
    pub rank: usize,
    pub points: ClosedRegion,
    pub closure: ClosedRegion,
    /// `(point index, p_i(x))` for every `x` in the closure, ascending index.
    pub projections: Vec<(usize, CMat)>,
}

impl Plateau {
    pub fn projection_at(&self, i: usize) -> Option<&CMat> {
        self.projections
            .binary_search_by_key(&i, |(j, _)| *j)
            .ok()
            .map(|k| &self.projections[k].1)
    }
}

/// Plateau decomposition of a field with nested support projections.
#[derive(Clone, Debug)]
pub struct SupportData {
    pub plateaus: Vec<Plateau>,
}

impl SupportData {
    /// Builds plateaus of `element` at rank threshold `tol`. On the closure
    /// of `F_i` the projection is onto the top `n_i` eigenvectors taken from
    /// `basis[x]`, which must diagonalise `element(x)`; taking nested prefixes
    /// of one eigenbasis makes the projections nested by construction.
    pub fn from_eigenbasis(element: &MatrixField, basis: &[HermitianEigen], tol: f64) -> Self {
        let space = element.space();
        let ranks = element
            .rank_function(tol)
            .expect("positive tolerance");
        let n = element.n();
        let plateaus = ranks
            .plateaus()
            .into_iter()
            .map(|(rank, members)| {
                let points = ClosedRegion::from_indices(
                    Arc::clone(space),
                    members.into_iter().collect::<BTreeSet<_>>(),
                );
                let closure = points.complement_closure();
                let projections = closure
                    .members()
                    .iter()
                    .map(|&x| {
                        let p = basis[x].projection(|k, _| k + rank >= n);
                        (x, p)
                    })
                    .collect();
                Plateau {
                    rank,
                    points,
                    closure,
                    projections,
                }
            })
            .collect();
        Self { plateaus }
    }

    /// Checks ordering, projection and rank defects, agreement with the
    /// support projection of `element` on each plateau, and nesting on
    /// overlapping closures.
    pub fn verify(&self, element: &MatrixField, tol: f64) -> Result<(), SupportViolation> {
        let space = element.space();
        for (k, w) in self.plateaus.windows(2).enumerate() {
            if w[0].rank >= w[1].rank {
                return Err(SupportViolation::Unordered(k + 1));
            }
        }
        for pl in &self.plateaus {
            for (x, p) in &pl.projections {
                let point = || space.id(*x).to_string();
                let defect = linalg::op_norm(&(p * p - p)).max(linalg::hermitian_defect(p));
                if defect > PROJECTION_TOL {
                    return Err(SupportViolation::NotProjection {
                        rank: pl.rank,
                        point: point(),
                        defect,
                    });
                }
                let found = HermitianEigen::new(p).count_above(0.5);
                if found != pl.rank {
                    return Err(SupportViolation::WrongRank {
                        rank: pl.rank,
                        point: point(),
                        found,
                    });
                }
                if pl.points.contains(*x) {
                    let support = element.eigen_at(*x).projection(|_, l| l > tol);
                    let defect = linalg::op_norm(&(p - support));
                    if defect > PROJECTION_TOL {
                        return Err(SupportViolation::NotSupport {
                            rank: pl.rank,
                            point: point(),
                            defect,
                        });
                    }
                }
            }
        }
        for (i, lower) in self.plateaus.iter().enumerate() {
            for upper in &self.plateaus[i + 1..] {
                for (x, p_lo) in &lower.projections {
                    let Some(p_hi) = upper.projection_at(*x) else {
                        continue;
                    };
                    let min_eig = HermitianEigen::new(&(p_hi - p_lo)).min();
                    if min_eig < -PROJECTION_TOL {
                        return Err(SupportViolation::NotNested {
                            point: space.id(*x).to_string(),
                            lower: lower.rank,
                            upper: upper.rank,
                            min_eig,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Output of [`well_supported_approximant`].
#[derive(Clone, Debug)]
pub struct WellSupported {
    pub eta: f64,
    pub h: MatrixField,
    /// `ã`: `a` with every eigenvalue below `η` removed.
    pub thresholded: MatrixField,
    pub hah: MatrixField,
    pub support: SupportData,
    /// `‖hah − a‖`, `‖ha − a‖`, `‖ah − a‖` as maxima over the sample.
    pub err_hah: f64,
    pub err_ha: f64,
    pub err_ah: f64,
}

/// Picks `η`: the midpoint of the widest eigenvalue-free band in
/// `[ε/8, ε/4]` over all points, ties going to the smaller midpoint.
pub(crate) fn select_eta(eigens: &[HermitianEigen], eps: f64) -> Result<f64, WellSupportedError> {
    let lo = eps / 8.0;
    let hi = eps / 4.0;
    let mut marks: Vec<f64> = eigens
        .iter()
        .flat_map(|e| e.values.iter().copied())
        .filter(|&l| l >= lo && l <= hi)
        .collect();
    marks.push(lo);
    marks.push(hi);
    marks.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None; // (width, eta)
    for w in marks.windows(2) {
        let width = w[1] - w[0];
        let eta = 0.5 * (w[0] + w[1]);
        best = match best {
            Some((bw, be)) if bw > width || (bw == width && be <= eta) => Some((bw, be)),
            _ => Some((width, eta)),
        };
    }
    let (widest, eta) = best.expect("window has two marks");
    let required = (hi - lo) * MIN_BAND_FRACTION;
    if widest < required {
        return Err(WellSupportedError::NoAdmissibleEta {
            lo,
            hi,
            widest,
            required,
        });
    }
    Ok(eta)
}

/// Finds `h` with `‖h‖ ≤ 1`, `‖hah − a‖ < ε`, `‖ha − a‖, ‖ah − a‖ < ε/2`
/// and `hah` well supported. Requires `‖a‖ ≤ 1` and `0 < ε < 1`.
pub fn well_supported_approximant(
    a: &MatrixField,
    eps: f64,
    rank_tol: f64,
) -> Result<WellSupported, WellSupportedError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(WellSupportedError::BadEpsilon(eps));
    }
    let norm = a.norm_bound();
    if norm > 1.0 + 1e-12 {
        return Err(FieldError::NormTooLarge { norm }.into());
    }
    let eigens = a.eigens();
    let eta = select_eta(&eigens, eps)?;

    let ramp = |t: f64| (t / eta).min(1.0);
    let n = a.n();
    let space = Arc::clone(a.space());
    let mut thresholded = Vec::with_capacity(space.len());
    let mut hs = Vec::with_capacity(space.len());
    let mut hahs = Vec::with_capacity(space.len());
    for (i, e) in eigens.iter().enumerate() {
        let kept: Vec<f64> = e.values.iter().map(|&l| if l > eta { l } else { 0.0 }).collect();
        let h_diag: Vec<f64> = kept.iter().map(|&l| ramp(l)).collect();
        let h = e.reassemble(&h_diag);
        let hah = &h * a.at(i) * &h;
        thresholded.push(e.reassemble(&kept));
        hahs.push((&hah + hah.adjoint()).scale(0.5));
        hs.push(h);
    }
    let thresholded = MatrixField::from_spectral(Arc::clone(&space), n, thresholded);
    let h = MatrixField::from_spectral(Arc::clone(&space), n, hs);
    let hah = MatrixField::from_spectral(Arc::clone(&space), n, hahs);

    let mut err_hah = 0.0f64;
    let mut err_ha = 0.0f64;
    let mut err_ah = 0.0f64;
    for i in space.sorted_indices() {
        let ai = a.at(i);
        let hi = h.at(i);
        err_hah = err_hah.max(linalg::hermitian_norm(&(hah.at(i) - ai)));
        err_ha = err_ha.max(linalg::op_norm(&(hi * ai - ai)));
        err_ah = err_ah.max(linalg::op_norm(&(ai * hi - ai)));
    }
    let support = SupportData::from_eigenbasis(&hah, &eigens, rank_tol);
    Ok(WellSupported {
        eta,
        h,
        thresholded,
        hah,
        support,
        err_hah,
        err_ha,
        err_ah,
    })
}
