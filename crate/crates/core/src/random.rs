//! Seeded generators for test instances.
//!
//! Every generator takes an explicit RNG so callers control the stream;
//! [`rng`] builds the crate-wide ChaCha8 stream from a `u64` seed.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMat, HermitianEigen};
use crate::matfield::MatrixField;
use crate::space::{Coords, Point, SampledSpace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for sub-task `index` of a run seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// Haar-distributed unitary (polar factor of a complex Ginibre matrix).
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    linalg::polar_unitary(&gaussian_matrix(rng, n, n))
}

/// `U diag(λ) U*` with a Haar `U`.
pub fn with_spectrum<R: Rng + ?Sized>(rng: &mut R, spectrum: &[f64]) -> CMat {
    let u = unitary(rng, spectrum.len());
    let m = &u * linalg::real_diag(spectrum) * u.adjoint();
    (&m + m.adjoint()).scale(0.5)
}

/// Positive matrix of exact rank `rank` with nonzero eigenvalues drawn from
/// `[lo, hi]`.
pub fn psd_of_rank<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize, lo: f64, hi: f64) -> CMat {
    assert!(rank <= n);
    let spectrum: Vec<f64> = (0..n)
        .map(|k| if k < rank { rng.random_range(lo..=hi) } else { 0.0 })
        .collect();
    with_spectrum(rng, &spectrum)
}

/// Positive matrix with norm at most 1 and eigenvalues spread over `[0,1]`.
pub fn contraction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let spectrum: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
    with_spectrum(rng, &spectrum)
}

/// Field with norm ≤ 1 drawn pointwise by [`contraction`].
pub fn contraction_field<R: Rng + ?Sized>(rng: &mut R, space: Arc<SampledSpace>, n: usize) -> MatrixField {
    let values = (0..space.len()).map(|_| contraction(rng, n)).collect();
    MatrixField::new(space, n, values).expect("generated values are positive")
}

/// Field with prescribed pointwise ranks.
pub fn field_with_ranks<R: Rng + ?Sized>(
    rng: &mut R,
    space: Arc<SampledSpace>,
    n: usize,
    ranks: &[usize],
) -> MatrixField {
    let values = ranks.iter().map(|&r| psd_of_rank(rng, n, r, 0.2, 1.0)).collect();
    MatrixField::new(space, n, values).expect("generated values are positive")
}

/// A pair `a ≤ b` of fields with norm ≤ 1: `b` is a contraction and
/// `a = b^{1/2} c b^{1/2}` for a contraction `c`.
pub fn ordered_pair<R: Rng + ?Sized>(rng: &mut R, space: Arc<SampledSpace>, n: usize) -> (MatrixField, MatrixField) {
    let b = contraction_field(rng, Arc::clone(&space), n);
    let values = b
        .values()
        .iter()
        .map(|bv| {
            let root = HermitianEigen::new(bv).map(|l| l.max(0.0).sqrt());
            let c = contraction(rng, n);
            let m = &root * c * &root;
            (&m + m.adjoint()).scale(0.5)
        })
        .collect();
    let a = MatrixField::new(space, n, values).expect("compressions of positive matrices are positive");
    (a, b)
}

/// Path sample with between 1 and `max_points` points, declared covering
/// dimension `dim`. For `dim = 0` the points are isolated.
pub fn small_space<R: Rng + ?Sized>(rng: &mut R, max_points: usize, dim: u64) -> Arc<SampledSpace> {
    let count = rng.random_range(1..=max_points);
    let ids: Vec<String> = (0..count).map(|k| format!("p{k}")).collect();
    let points = ids
        .iter()
        .enumerate()
        .map(|(k, id)| Point {
            id: id.clone(),
            coords: Coords::Float(vec![k as f64 / count.max(2) as f64; dim.max(1) as usize]),
        })
        .collect();
    let edges: Vec<(String, String)> = if dim == 0 {
        Vec::new()
    } else {
        ids.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
    };
    Arc::new(SampledSpace::new(format!("path{count}@dim{dim}"), dim, points, &edges).expect("distinct ids"))
}
