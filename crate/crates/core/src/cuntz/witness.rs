//! Numerical search for `v` with `v b v* ≈ a`.
//!
//! Per point the search is restricted to `v = a^{1/2} U b^{+1/2}` with `U`
//! unitary, where `b^{+1/2}` is the Moore–Penrose inverse of `b^{1/2}`. Then
//! `v b v* = a^{1/2} U P_b U* a^{1/2}` with `P_b` the support projection of
//! `b`, and the residual vanishes as soon as `U` carries the range of `b`
//! over the range of `a`. Each step replaces `U` by the polar factor of
//! `a U P_b`.

use rayon::prelude::*;

use crate::linalg::{self, CMat, HermitianEigen};
use crate::matfield::{FieldError, MatrixField, OperatorField, ScalarKit};
use crate::random;

/// Eigenvalues of `b` at or below this (relative to `max(1, ‖b‖)`) are
/// treated as zero when inverting `b^{1/2}`.
const PINV_CUTOFF: f64 = 1e-12;
/// A restart stops early once its residual is this small.
const CONVERGED: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct WitnessResult {
    /// `max_x ‖v(x) b(x) v(x)* − a(x)‖`.
    pub residual: f64,
    pub v: OperatorField,
    /// Residual at each point, indexed like the space.
    pub point_residuals: Vec<f64>,
    /// Restart that produced the value at each point.
    pub point_restarts: Vec<usize>,
}

struct PointData {
    root_a: CMat,
    a: CMat,
    pinv_root_b: CMat,
    support_b: CMat,
    aligned: CMat,
}

impl PointData {
    fn new(a: &CMat, b: &CMat) -> Self {
        let ea = HermitianEigen::new(a);
        let eb = HermitianEigen::new(b);
        let cutoff = PINV_CUTOFF * eb.max_abs().max(1.0);
        let pinv_root_b = eb.map(|l| if l > cutoff { 1.0 / l.sqrt() } else { 0.0 });
        let support_b = eb.projection(|_, l| l > cutoff);
        // top eigenvectors of b onto top eigenvectors of a
        let n = a.nrows();
        let flip = |m: &CMat| CMat::from_fn(n, n, |r, c| m[(r, n - 1 - c)]);
        let aligned = flip(&ea.vectors) * flip(&eb.vectors).adjoint();
        Self {
            root_a: ea.map(|l| l.max(0.0).sqrt()),
            a: a.clone(),
            pinv_root_b,
            support_b,
            aligned,
        }
    }

    fn witness(&self, u: &CMat) -> CMat {
        &self.root_a * u * &self.pinv_root_b
    }

    fn residual(&self, u: &CMat) -> f64 {
        let image = &self.root_a * u * &self.support_b * u.adjoint() * &self.root_a;
        linalg::hermitian_norm(&(image - &self.a))
    }

    /// Best `(residual, U)` seen along the iteration from `u0`.
    fn refine(&self, mut u: CMat, iters: usize) -> (f64, CMat) {
        let mut best = (self.residual(&u), u.clone());
        for _ in 0..iters {
            if best.0 <= CONVERGED {
                break;
            }
            u = linalg::polar_unitary(&(&self.a * &u * &self.support_b));
            let r = self.residual(&u);
            if r < best.0 {
                best = (r, u.clone());
            }
        }
        best
    }
}

/// Starting unitaries: restart 0 is the identity, restart 1 aligns the
/// eigenbases of `b` and `a` by decreasing eigenvalue, later restarts are
/// Haar-random from the stream `(seed, restart)`.
fn start<R: rand::Rng>(restart: usize, point: &PointData, n: usize, rng: &mut R) -> CMat {
    match restart {
        0 => CMat::identity(n, n),
        1 => point.aligned.clone(),
        _ => random::unitary(rng, n),
    }
}

/// Alternating search with polar projection, `restarts` starts of `iters`
/// steps each. Restarts run in parallel; each point keeps the lexicographic
/// minimum of `(residual, restart)`.
pub fn witness_search(
    a: &MatrixField,
    b: &MatrixField,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<WitnessResult, FieldError> {
    a.check_compatible(b)?;
    let n = a.n();
    let points: Vec<PointData> = (0..a.space().len()).map(|i| PointData::new(a.at(i), b.at(i))).collect();
    let restarts = restarts.max(1);

    let runs: Vec<Vec<(f64, CMat)>> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = random::substream(seed, k as u64);
            points
                .iter()
                .map(|p| {
                    let u0 = start(k, p, n, &mut rng);
                    p.refine(u0, iters)
                })
                .collect()
        })
        .collect();

    let mut values = Vec::with_capacity(points.len());
    let mut point_residuals = Vec::with_capacity(points.len());
    let mut point_restarts = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let (k, (r, u)) = runs
            .iter()
            .map(|run| &run[i])
            .enumerate()
            .min_by(|(ka, (ra, _)), (kb, (rb, _))| ra.total_cmp(rb).then(ka.cmp(kb)))
            .expect("at least one restart");
        values.push(p.witness(u));
        point_residuals.push(*r);
        point_restarts.push(k);
    }
    let residual = a
        .space()
        .sorted_indices()
        .into_iter()
        .map(|i| point_residuals[i])
        .fold(0.0, f64::max);
    let v = OperatorField::new(a.space().clone(), n, values)?;
    Ok(WitnessResult {
        residual,
        v,
        point_residuals,
        point_restarts,
    })
}

/// `v = a^{1/2} g_δ(b)^{1/2}`; `v b v* = a^{1/2} f_δ(b) a^{1/2}`.
pub fn functional_calculus_witness(a: &MatrixField, b: &MatrixField, delta: f64) -> Result<OperatorField, FieldError> {
    a.check_compatible(b)?;
    let kit = ScalarKit::new(delta, 0.0);
    let values = (0..a.space().len())
        .map(|i| {
            let root_a = a.eigen_at(i).map(|l| l.max(0.0).sqrt());
            let root_g = b.eigen_at(i).map(|l| kit.g(l).sqrt());
            root_a * root_g
        })
        .collect();
    OperatorField::new(a.space().clone(), a.n(), values)
}

/// `max_x λ_{rank b(x) + 1}(a(x))`, eigenvalues in decreasing order (zero if
/// `rank b(x) = n`). Any `v` has `rank(v b v*) ≤ rank b`, so by Eckart–Young
/// this bounds every residual from below.
pub fn rank_obstruction_lower_bound(a: &MatrixField, b: &MatrixField, tol: f64) -> Result<f64, FieldError> {
    a.check_compatible(b)?;
    Ok(a.space()
        .sorted_indices()
        .into_iter()
        .map(|i| {
            let rb = b.rank_at(i, tol);
            let ea = a.eigen_at(i);
            let n = ea.dim();
            if rb >= n {
                0.0
            } else {
                ea.values[n - 1 - rb].max(0.0)
            }
        })
        .fold(0.0, f64::max))
}
