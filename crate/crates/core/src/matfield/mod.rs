//! Positive matrix-valued functions on a [`SampledSpace`] and their
//! functional calculus.
//!
//! A [`MatrixField`] stores one Hermitian positive semidefinite matrix per
//! sample point. Norms of fields are maxima over the sample, which is the
//! finite stand-in for the supremum over the underlying space.

mod dini;
mod kit;
mod wellsup;

pub use dini::{dini_curve, find_rank_delta, RankDeltaError};
pub use kit::{KitFunction, ScalarKit};
pub use wellsup::{
    well_supported_approximant, Plateau, SupportData, SupportViolation, WellSupported,
    WellSupportedError,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::linalg::{self, CMat, HermitianEigen};
use crate::space::SampledSpace;

/// Entrywise tolerance on `M − M*`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-10;
/// Default eigenvalue threshold for counting rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("matrix size must be positive")]
    ZeroSize,
    #[error("expected {expected} values (one per point), got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("value at {point:?} is {rows}x{cols}, expected {n}x{n}")]
    WrongShape {
        point: String,
        rows: usize,
        cols: usize,
        n: usize,
    },
    #[error("value at {point:?} is not Hermitian (defect {defect:e})")]
    NotHermitian { point: String, defect: f64 },
    #[error("value at {point:?} is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPositive { point: String, min_eig: f64 },
    #[error("fields live on different spaces ({left:?} vs {right:?})")]
    SpaceMismatch { left: String, right: String },
    #[error("matrix sizes differ ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },
    #[error("cut-down amount must be nonnegative, got {0}")]
    NegativeEpsilon(f64),
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("scalar function is undefined at spectral value {value} (point {point:?})")]
    FunctionUndefined { point: String, value: f64 },
    #[error("scalar function takes negative value {output} at {value} (point {point:?})")]
    FunctionNegative {
        point: String,
        value: f64,
        output: f64,
    },
    #[error("field norm {norm} exceeds 1")]
    NormTooLarge { norm: f64 },
    #[error("value at {point:?} is not unitary (defect {defect:e})")]
    NotUnitary { point: String, defect: f64 },
    #[error("tolerance list must be strictly decreasing and positive")]
    BadDeltas,
}

pub(crate) fn same_space(a: &SampledSpace, b: &SampledSpace) -> bool {
    std::ptr::eq(a, b) || a == b
}

pub(crate) fn check_same_space(a: &SampledSpace, b: &SampledSpace) -> Result<(), FieldError> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(FieldError::SpaceMismatch {
            left: a.label().to_string(),
            right: b.label().to_string(),
        })
    }
}

/// A positive element of `M_n(C(X))`, sampled.
#[derive(Clone, Debug)]
pub struct MatrixField {
    space: Arc<SampledSpace>,
    n: usize,
    values: Vec<CMat>,
}

impl MatrixField {
    /// Validates shape, hermiticity (to [`HERMITIAN_TOL`]) and positivity (to
    /// [`PSD_TOL`]) at every point. Values are indexed like `space.points()`.
    pub fn new(space: Arc<SampledSpace>, n: usize, values: Vec<CMat>) -> Result<Self, FieldError> {
        if n == 0 {
            return Err(FieldError::ZeroSize);
        }
        if values.len() != space.len() {
            return Err(FieldError::WrongCount {
                expected: space.len(),
                got: values.len(),
            });
        }
        for (i, m) in values.iter().enumerate() {
            let point = || space.id(i).to_string();
            if m.nrows() != n || m.ncols() != n {
                return Err(FieldError::WrongShape {
                    point: point(),
                    rows: m.nrows(),
                    cols: m.ncols(),
                    n,
                });
            }
            let defect = linalg::hermitian_defect(m);
            if defect > HERMITIAN_TOL {
                return Err(FieldError::NotHermitian {
                    point: point(),
                    defect,
                });
            }
            let min_eig = HermitianEigen::new(m).min();
            if min_eig < PSD_TOL {
                return Err(FieldError::NotPositive {
                    point: point(),
                    min_eig,
                });
            }
        }
        Ok(Self { space, n, values })
    }

    /// Builds a field from a per-point closure, then validates it.
    pub fn from_fn<F>(space: Arc<SampledSpace>, n: usize, mut f: F) -> Result<Self, FieldError>
    where
        F: FnMut(usize) -> CMat,
    {
        let values = (0..space.len()).map(&mut f).collect();
        Self::new(space, n, values)
    }

    /// Result of a spectral map of a valid field: Hermitian by construction,
    /// so only the explicit symmetrisation is applied.
    fn from_spectral(space: Arc<SampledSpace>, n: usize, values: Vec<CMat>) -> Self {
        let values = values
            .into_iter()
            .map(|m| (&m + m.adjoint()).scale(0.5))
            .collect();
        Self { space, n, values }
    }

    pub fn constant(space: Arc<SampledSpace>, m: CMat) -> Result<Self, FieldError> {
        let n = m.nrows();
        let values = vec![m; space.len()];
        Self::new(space, n, values)
    }

    pub fn diagonal<F>(space: Arc<SampledSpace>, n: usize, mut f: F) -> Result<Self, FieldError>
    where
        F: FnMut(usize) -> Vec<f64>,
    {
        Self::from_fn(space, n, |i| linalg::real_diag(&f(i)))
    }

    pub fn zeros(space: Arc<SampledSpace>, n: usize) -> Self {
        let values = vec![CMat::zeros(n, n); space.len()];
        Self { space, n, values }
    }

    pub fn identity(space: Arc<SampledSpace>, n: usize) -> Self {
        let values = vec![CMat::identity(n, n); space.len()];
        Self { space, n, values }
    }

    pub fn space(&self) -> &Arc<SampledSpace> {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn at(&self, i: usize) -> &CMat {
        &self.values[i]
    }

    pub fn eigen_at(&self, i: usize) -> HermitianEigen {
        HermitianEigen::new(&self.values[i])
    }

    pub fn eigens(&self) -> Vec<HermitianEigen> {
        self.values.iter().map(HermitianEigen::new).collect()
    }

    /// `max_x ‖a(x)‖`, reduced in sorted point-id order.
    pub fn norm_bound(&self) -> f64 {
        self.space
            .sorted_indices()
            .into_iter()
            .map(|i| linalg::hermitian_norm(&self.values[i]))
            .fold(0.0, f64::max)
    }

    /// `max_x ‖a(x) − b(x)‖`.
    pub fn distance(&self, other: &MatrixField) -> Result<f64, FieldError> {
        self.check_compatible(other)?;
        Ok(self
            .space
            .sorted_indices()
            .into_iter()
            .map(|i| linalg::hermitian_norm(&(&self.values[i] - &other.values[i])))
            .fold(0.0, f64::max))
    }

    pub fn check_compatible(&self, other: &MatrixField) -> Result<(), FieldError> {
        check_same_space(&self.space, &other.space)?;
        if self.n != other.n {
            return Err(FieldError::SizeMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// Block-diagonal join `a ⊕ b`.
    pub fn block_sum(&self, other: &MatrixField) -> Result<MatrixField, FieldError> {
        check_same_space(&self.space, &other.space)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| linalg::block_diag(a, b))
            .collect();
        Ok(MatrixField {
            space: Arc::clone(&self.space),
            n: self.n + other.n,
            values,
        })
    }

    /// Pointwise sum; positive whenever both summands are.
    pub fn add(&self, other: &MatrixField) -> Result<MatrixField, FieldError> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_spectral(Arc::clone(&self.space), self.n, values))
    }

    /// `u(x) a(x) u(x)*` pointwise.
    pub fn conjugate(&self, u: &OperatorField) -> Result<MatrixField, FieldError> {
        check_same_space(&self.space, &u.space)?;
        if u.n != self.n {
            return Err(FieldError::SizeMismatch {
                left: self.n,
                right: u.n,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&u.values)
            .map(|(a, u)| u * a * u.adjoint())
            .collect();
        Ok(Self::from_spectral(Arc::clone(&self.space), self.n, values))
    }

    /// Same values over a space that is equal point for point.
    pub fn with_space(&self, space: Arc<SampledSpace>) -> Result<MatrixField, FieldError> {
        check_same_space(&self.space, &space)?;
        Ok(MatrixField {
            space,
            n: self.n,
            values: self.values.clone(),
        })
    }

    /// `(a − ε)_+`: eigenvalues `λ ↦ max{0, λ − ε}` in the same eigenbasis.
    pub fn cut_down(&self, eps: f64) -> Result<MatrixField, FieldError> {
        if !(eps >= 0.0) {
            return Err(FieldError::NegativeEpsilon(eps));
        }
        if eps == 0.0 {
            return Ok(self.clone());
        }
        let values = self
            .values
            .iter()
            .map(|m| HermitianEigen::new(m).map(|l| (l - eps).max(0.0)))
            .collect();
        Ok(Self::from_spectral(Arc::clone(&self.space), self.n, values))
    }

    /// Pointwise spectral application of `f`. Eigenvalues within rounding
    /// of zero (down to [`PSD_TOL`]) are clamped to zero first. Fails if `f`
    /// is non-finite or negative anywhere on the sampled spectrum.
    pub fn apply_scalar<F: Fn(f64) -> f64>(&self, f: F) -> Result<MatrixField, FieldError> {
        let mut values = Vec::with_capacity(self.values.len());
        for (i, m) in self.values.iter().enumerate() {
            let e = HermitianEigen::new(m);
            let mut d = Vec::with_capacity(self.n);
            for &l in &e.values {
                let t = l.max(0.0);
                let y = f(t);
                if !y.is_finite() {
                    return Err(FieldError::FunctionUndefined {
                        point: self.space.id(i).to_string(),
                        value: t,
                    });
                }
                if y < PSD_TOL {
                    return Err(FieldError::FunctionNegative {
                        point: self.space.id(i).to_string(),
                        value: t,
                        output: y,
                    });
                }
                d.push(y.max(0.0));
            }
            values.push(e.reassemble(&d));
        }
        Ok(Self::from_spectral(Arc::clone(&self.space), self.n, values))
    }

    /// Pointwise positive square root.
    pub fn sqrt(&self) -> MatrixField {
        self.apply_scalar(f64::sqrt)
            .expect("square root is defined on a positive spectrum")
    }

    /// Number of eigenvalues of `a(x)` strictly above `tol`.
    pub fn rank_at(&self, i: usize, tol: f64) -> usize {
        HermitianEigen::new(&self.values[i]).count_above(tol)
    }

    pub fn rank_at_id(&self, id: &str, tol: f64) -> Option<usize> {
        self.space.index_of(id).map(|i| self.rank_at(i, tol))
    }

    pub fn rank_function(&self, tol: f64) -> Result<RankFunction, FieldError> {
        if !(tol > 0.0) {
            return Err(FieldError::NonPositiveTolerance(tol));
        }
        let ranks = (0..self.values.len()).map(|i| self.rank_at(i, tol)).collect();
        Ok(RankFunction {
            space: Arc::clone(&self.space),
            tol,
            ranks,
        })
    }
}

/// Arbitrary (not necessarily positive) matrix-valued function: witnesses
/// `v` and unitaries.
#[derive(Clone, Debug)]
pub struct OperatorField {
    space: Arc<SampledSpace>,
    n: usize,
    values: Vec<CMat>,
}

impl OperatorField {
    pub fn new(space: Arc<SampledSpace>, n: usize, values: Vec<CMat>) -> Result<Self, FieldError> {
        if n == 0 {
            return Err(FieldError::ZeroSize);
        }
        if values.len() != space.len() {
            return Err(FieldError::WrongCount {
                expected: space.len(),
                got: values.len(),
            });
        }
        for (i, m) in values.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(FieldError::WrongShape {
                    point: space.id(i).to_string(),
                    rows: m.nrows(),
                    cols: m.ncols(),
                    n,
                });
            }
        }
        Ok(Self { space, n, values })
    }

    pub fn identity(space: Arc<SampledSpace>, n: usize) -> Self {
        let values = vec![CMat::identity(n, n); space.len()];
        Self { space, n, values }
    }

    pub fn space(&self) -> &Arc<SampledSpace> {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn at(&self, i: usize) -> &CMat {
        &self.values[i]
    }

    /// Largest `‖u*u − 1‖` entry over the sample.
    pub fn unitary_defect(&self) -> f64 {
        self.values
            .iter()
            .map(linalg::unitary_defect)
            .fold(0.0, f64::max)
    }

    pub fn check_unitary(&self, tol: f64) -> Result<(), FieldError> {
        for (i, u) in self.values.iter().enumerate() {
            let defect = linalg::unitary_defect(u);
            if defect > tol {
                return Err(FieldError::NotUnitary {
                    point: self.space.id(i).to_string(),
                    defect,
                });
            }
        }
        Ok(())
    }

    /// `max_x ‖v(x) b(x) v(x)* − a(x)‖`.
    pub fn comparison_residual(&self, a: &MatrixField, b: &MatrixField) -> Result<f64, FieldError> {
        a.check_compatible(b)?;
        check_same_space(&self.space, &a.space)?;
        if self.n != a.n {
            return Err(FieldError::SizeMismatch {
                left: self.n,
                right: a.n,
            });
        }
        Ok(a.space
            .sorted_indices()
            .into_iter()
            .map(|i| {
                let v = &self.values[i];
                linalg::hermitian_norm(&(v * &b.values[i] * v.adjoint() - &a.values[i]))
            })
            .fold(0.0, f64::max))
    }
}

/// Pointwise rank of a field, counted above a fixed threshold.
#[derive(Clone, Debug)]
pub struct RankFunction {
    space: Arc<SampledSpace>,
    tol: f64,
    ranks: Vec<usize>,
}

impl RankFunction {
    pub fn from_ranks(space: Arc<SampledSpace>, tol: f64, ranks: Vec<usize>) -> Self {
        assert_eq!(space.len(), ranks.len());
        Self { space, tol, ranks }
    }

    pub fn space(&self) -> &Arc<SampledSpace> {
        &self.space
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn at(&self, i: usize) -> usize {
        self.ranks[i]
    }

    /// Level sets `F_i = {x : rank = n_i}` keyed by the rank value, so the
    /// keys come out as `n_1 < n_2 < …`.
    pub fn plateaus(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &r) in self.ranks.iter().enumerate() {
            out.entry(r).or_default().push(i);
        }
        out
    }

    /// Pointwise sum; the rank function of a block sum.
    pub fn sum(&self, other: &RankFunction) -> Result<RankFunction, FieldError> {
        check_same_space(&self.space, &other.space)?;
        let ranks = self
            .ranks
            .iter()
            .zip(&other.ranks)
            .map(|(a, b)| a + b)
            .collect();
        Ok(RankFunction {
            space: Arc::clone(&self.space),
            tol: self.tol,
            ranks,
        })
    }

    /// Constant on every connected component of the neighbour graph.
    pub fn is_locally_constant(&self) -> bool {
        self.space
            .edges()
            .into_iter()
            .all(|(i, j)| self.ranks[i] == self.ranks[j])
    }

    pub fn pointwise_le(&self, other: &RankFunction) -> bool {
        self.ranks.iter().zip(&other.ranks).all(|(a, b)| a <= b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::make_grid;
    use num_complex::Complex64;

    fn complex(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn line(res: u64) -> Arc<SampledSpace> {
        Arc::new(make_grid(&[1], res).unwrap())
    }

    fn x_of(space: &SampledSpace, i: usize) -> f64 {
        space.coords_f64(i)[0]
    }

    #[test]
    fn validation_rejects_bad_values() {
        let s = line(1);
        let not_herm = CMat::from_row_slice(2, 2, &[complex(1.0), complex(0.5), complex(0.0), complex(1.0)]);
        let e = MatrixField::constant(Arc::clone(&s), not_herm).unwrap_err();
        assert!(matches!(e, FieldError::NotHermitian { .. }));
        let negative = linalg::real_diag(&[1.0, -0.1]);
        let e = MatrixField::constant(Arc::clone(&s), negative).unwrap_err();
        assert!(matches!(e, FieldError::NotPositive { .. }));
        let e = MatrixField::new(Arc::clone(&s), 2, vec![CMat::identity(2, 2)]).unwrap_err();
        assert!(matches!(e, FieldError::WrongCount { .. }));
        let e = MatrixField::new(s, 2, vec![CMat::identity(2, 2), CMat::identity(3, 3)]).unwrap_err();
        assert!(matches!(e, FieldError::WrongShape { .. }));
    }

    #[test]
    fn cut_down_zero_is_identity_map() {
        let s = line(2);
        let a = MatrixField::diagonal(Arc::clone(&s), 2, |i| vec![x_of(&s, i), 0.3]).unwrap();
        let b = a.cut_down(0.0).unwrap();
        assert!(a.distance(&b).unwrap() <= 1e-12);
    }

    #[test]
    fn cut_down_diagonal() {
        let s = line(1);
        let a = MatrixField::constant(Arc::clone(&s), linalg::real_diag(&[0.5, 1.0])).unwrap();
        let b = a.cut_down(0.75).unwrap();
        let expected = MatrixField::constant(s, linalg::real_diag(&[0.0, 0.25])).unwrap();
        for i in 0..2 {
            assert!(linalg::max_abs_entry(&(b.at(i) - expected.at(i))) <= 1e-12);
        }
    }

    #[test]
    fn cut_down_rejects_negative() {
        let a = MatrixField::identity(line(1), 1);
        assert_eq!(a.cut_down(-0.1).unwrap_err(), FieldError::NegativeEpsilon(-0.1));
        assert!(a.cut_down(f64::NAN).is_err());
    }

    #[test]
    fn apply_scalar_examples() {
        let s = line(1);
        let a = MatrixField::constant(Arc::clone(&s), linalg::real_diag(&[0.3, 0.6])).unwrap();
        let id = a.apply_scalar(|t| t).unwrap();
        assert!(a.distance(&id).unwrap() < 1e-14);
        let sq = a.apply_scalar(|t| t * t).unwrap();
        let expected = linalg::real_diag(&[0.09, 0.36]);
        assert!(linalg::max_abs_entry(&(sq.at(0) - expected)) < 1e-14);

        // f(0)=0, f(1)=1 fixes a projection
        let p = MatrixField::constant(Arc::clone(&s), linalg::real_diag(&[1.0, 0.0])).unwrap();
        let fp = p.apply_scalar(|t| t.min(1.0).sqrt()).unwrap();
        assert!(p.distance(&fp).unwrap() < 1e-14);

        assert!(matches!(
            a.apply_scalar(|t| 1.0 / (t - 0.3)).unwrap_err(),
            FieldError::FunctionUndefined { .. }
        ));
        assert!(matches!(
            a.apply_scalar(|t| t - 0.5).unwrap_err(),
            FieldError::FunctionNegative { .. }
        ));
    }

    #[test]
    fn rank_examples() {
        let s = line(1);
        let z = MatrixField::zeros(Arc::clone(&s), 3);
        assert_eq!(z.rank_at(0, 1e-9), 0);
        let id = MatrixField::identity(Arc::clone(&s), 3);
        assert_eq!(id.rank_at(0, 1e-9), 3);
        let tiny = MatrixField::constant(Arc::clone(&s), linalg::real_diag(&[1.0, 1e-12])).unwrap();
        assert_eq!(tiny.rank_at(1, 1e-9), 1);
    }

    #[test]
    fn rank_function_examples() {
        let s = line(2);
        let p = MatrixField::constant(Arc::clone(&s), linalg::real_diag(&[1.0, 1.0, 0.0])).unwrap();
        assert_eq!(p.rank_function(1e-8).unwrap().ranks(), &[2, 2, 2]);

        let a = MatrixField::diagonal(Arc::clone(&s), 2, |i| vec![x_of(&s, i), 1.0]).unwrap();
        let rf = a.rank_function(DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rf.ranks(), &[1, 2, 2]);
        let plateaus = rf.plateaus();
        assert_eq!(plateaus[&1], vec![0]);
        assert_eq!(plateaus[&2], vec![1, 2]);

        let b = MatrixField::diagonal(Arc::clone(&s), 1, |i| vec![1.0 - x_of(&s, i)]).unwrap();
        let sum = a.block_sum(&b).unwrap();
        let expected = rf.sum(&b.rank_function(DEFAULT_RANK_TOL).unwrap()).unwrap();
        assert_eq!(sum.rank_function(DEFAULT_RANK_TOL).unwrap().ranks(), expected.ranks());

        assert!(a.rank_function(0.0).is_err());
    }

    #[test]
    fn conjugation_and_residual() {
        let s = line(1);
        let a = MatrixField::constant(Arc::clone(&s), linalg::real_diag(&[0.2, 0.9])).unwrap();
        let swap = CMat::from_row_slice(2, 2, &[complex(0.0), complex(1.0), complex(1.0), complex(0.0)]);
        let u = OperatorField::new(Arc::clone(&s), 2, vec![swap.clone(), swap]).unwrap();
        u.check_unitary(1e-12).unwrap();
        let b = a.conjugate(&u).unwrap();
        assert!((b.at(0)[(0, 0)].re - 0.9).abs() < 1e-15);
        // u b u* = a again
        assert!(u.comparison_residual(&a, &b).unwrap() < 1e-15);
    }

    #[test]
    fn space_mismatch_is_reported() {
        let a = MatrixField::identity(line(1), 1);
        let b = MatrixField::identity(line(2), 1);
        assert!(matches!(a.distance(&b).unwrap_err(), FieldError::SpaceMismatch { .. }));
    }
}
