//! Monotone approximation curves and rank-preserving cut-down search.

use crate::linalg::{self, HermitianEigen};

use super::{check_same_space, FieldError, MatrixField, OperatorField, ScalarKit};

/// Unitarity tolerance for the conjugating field.
pub const UNITARY_TOL: f64 = 1e-9;
/// Largest exponent `j` tried in the grid `ε·2^{−j}`.
pub const MAX_HALVINGS: u32 = 64;

/// `‖a − √a v f_δ(b) v* √a‖` (max over points) for each `δ` in `deltas`.
///
/// With `‖b‖ ≤ 1`, `f_δ(b)` increases as `δ` decreases and stays below 1, so
/// the curve is nonincreasing; callers assert that.
pub fn dini_curve(
    a: &MatrixField,
    b: &MatrixField,
    v: &OperatorField,
    deltas: &[f64],
) -> Result<Vec<f64>, FieldError> {
    a.check_compatible(b)?;
    check_same_space(a.space(), v.space())?;
    if v.n() != a.n() {
        return Err(FieldError::SizeMismatch {
            left: a.n(),
            right: v.n(),
        });
    }
    for field in [a, b] {
        let norm = field.norm_bound();
        if norm > 1.0 + 1e-12 {
            return Err(FieldError::NormTooLarge { norm });
        }
    }
    v.check_unitary(UNITARY_TOL)?;
    if deltas.iter().any(|&d| !(d > 0.0 && d <= 1.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(FieldError::BadDeltas);
    }

    let order = a.space().sorted_indices();
    let roots: Vec<_> = a.values().iter().map(|m| HermitianEigen::new(m).map(|l| l.max(0.0).sqrt())).collect();
    let b_eigens = b.eigens();
    Ok(deltas
        .iter()
        .map(|&delta| {
            let kit = ScalarKit::new(delta, 0.0);
            order
                .iter()
                .map(|&i| {
                    let fb = b_eigens[i].map(|l| kit.f(l));
                    let vi = v.at(i);
                    let inner = &roots[i] * vi * fb * vi.adjoint() * &roots[i];
                    linalg::hermitian_norm(&(a.at(i) - inner))
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankDeltaError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("rank(a) + {k} ≤ rank(b) fails at {point:?}: rank(a) = {rank_a}, rank(b) = {rank_b}")]
    Precondition {
        point: String,
        k: usize,
        rank_a: usize,
        rank_b: usize,
    },
    #[error("no grid value eps·2^-j with j ≤ {max_halvings} works")]
    NotFound { max_halvings: u32 },
}

/// Largest `δ ∈ {ε·2^{−j}}` with `rank((a−ε)_+(x)) + k ≤ rank((b−δ)_+(x))` at
/// every point, given that `rank(a(x)) + k ≤ rank(b(x))` everywhere.
pub fn find_rank_delta(
    a: &MatrixField,
    b: &MatrixField,
    k: usize,
    eps: f64,
    tol: f64,
) -> Result<f64, RankDeltaError> {
    check_same_space(a.space(), b.space())?;
    if !(tol > 0.0) {
        return Err(FieldError::NonPositiveTolerance(tol).into());
    }
    if !(eps > 0.0) {
        return Err(FieldError::NonPositiveTolerance(eps).into());
    }
    let a_eig = a.eigens();
    let b_eig = b.eigens();
    for i in 0..a_eig.len() {
        let rank_a = a_eig[i].count_above(tol);
        let rank_b = b_eig[i].count_above(tol);
        if rank_a + k > rank_b {
            return Err(RankDeltaError::Precondition {
                point: a.space().id(i).to_string(),
                k,
                rank_a,
                rank_b,
            });
        }
    }
    // rank((c − t)_+) counts eigenvalues λ with λ − t > tol
    let cut_rank = |e: &HermitianEigen, t: f64| e.values.iter().filter(|&&l| (l - t).max(0.0) > tol).count();
    let needed: Vec<usize> = a_eig.iter().map(|e| cut_rank(e, eps) + k).collect();
    for j in 0..=MAX_HALVINGS {
        let delta = eps * 0.5f64.powi(j as i32);
        if b_eig
            .iter()
            .zip(&needed)
            .all(|(e, &need)| cut_rank(e, delta) >= need)
        {
            return Ok(delta);
        }
    }
    Err(RankDeltaError::NotFound {
        max_halvings: MAX_HALVINGS,
    })
}
