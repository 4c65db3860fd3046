//! Small dense complex linear algebra: a cyclic Jacobi eigensolver for
//! Hermitian matrices and the handful of derived operations the field code
//! needs (spectral functions, operator norms, polar factors).
//!
//! Matrices here are tiny (n ≤ 16 in practice), so everything is plain
//! O(n³) per sweep with no blocking.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix used for every per-point value.
pub type CMat = DMatrix<Complex64>;

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition `m = vectors · diag(values) · vectors*` of a Hermitian
/// matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    /// Cyclic Jacobi with row-major pivot order `(0,1), (0,2), …, (n-2,n-1)`.
    ///
    /// Only the Hermitian part `(m + m*)/2` is diagonalised; callers validate
    /// hermiticity separately.
    pub fn new(m: &CMat) -> Self {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "eigendecomposition needs a square matrix");
        let mut a = (m + m.adjoint()).scale(0.5);
        let mut v = CMat::identity(n, n);

        let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if scale == 0.0 {
            return Self {
                values: vec![0.0; n],
                vectors: v,
            };
        }
        let threshold = f64::EPSILON * f64::EPSILON * scale * scale;

        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off <= threshold {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));
        let values = order.iter().map(|&i| diag[i]).collect();
        let vectors = CMat::from_fn(n, n, |r, c| v[(r, order[c])]);
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U · diag(f(λ)) · U*`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMat {
        let d: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        self.reassemble(&d)
    }

    pub fn reassemble(&self, diag: &[f64]) -> CMat {
        let n = self.dim();
        let u = &self.vectors;
        let mut out = CMat::zeros(n, n);
        for (k, &d) in diag.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            for r in 0..n {
                let ur = u[(r, k)] * d;
                for c in 0..n {
                    out[(r, c)] += ur * u[(c, k)].conj();
                }
            }
        }
        out
    }

    /// Orthogonal projection onto the span of the eigenvectors selected by
    /// `keep` (indexed in ascending eigenvalue order).
    pub fn projection<F: Fn(usize, f64) -> bool>(&self, keep: F) -> CMat {
        let d: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &l)| if keep(i, l) { 1.0 } else { 0.0 })
            .collect();
        self.reassemble(&d)
    }

    pub fn count_above(&self, tol: f64) -> usize {
        self.values.iter().filter(|&&l| l > tol).count()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, l| acc.max(l.abs()))
    }
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
///
/// The phase of `a[p][q]` is first absorbed by `diag(1, e^{-iθ})`, after
/// which a real symmetric rotation finishes the job.
fn rotate(a: &mut CMat, v: &mut CMat, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // G = diag(1, conj(phase)) · [[c, s], [-s, c]] acting on columns p, q.
    let g_pp = Complex64::new(c, 0.0);
    let g_pq = Complex64::new(s, 0.0);
    let g_qp = phase.conj() * (-s);
    let g_qq = phase.conj() * c;

    let n = a.nrows();
    // A ← A·G
    for r in 0..n {
        let x = a[(r, p)];
        let y = a[(r, q)];
        a[(r, p)] = x * g_pp + y * g_qp;
        a[(r, q)] = x * g_pq + y * g_qq;
    }
    // A ← G*·A
    for col in 0..n {
        let x = a[(p, col)];
        let y = a[(q, col)];
        a[(p, col)] = g_pp.conj() * x + g_qp.conj() * y;
        a[(q, col)] = g_pq.conj() * x + g_qq.conj() * y;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
    // V ← V·G
    for r in 0..n {
        let x = v[(r, p)];
        let y = v[(r, q)];
        v[(r, p)] = x * g_pp + y * g_qp;
        v[(r, q)] = x * g_pq + y * g_qq;
    }
}

/// Largest absolute entry of `m - m*`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(m: &CMat) -> f64 {
    HermitianEigen::new(m).max_abs()
}

/// Spectral norm of an arbitrary square or rectangular matrix.
pub fn op_norm(m: &CMat) -> f64 {
    let gram = m.adjoint() * m;
    HermitianEigen::new(&gram).max_abs().max(0.0).sqrt()
}

/// Unitary polar factor `W` of `m = W·|m|`, taken from the SVD as `U·V*`.
pub fn polar_unitary(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    u * v_t
}

/// `‖u*u − 1‖` entrywise max; zero exactly for unitary matrices.
pub fn unitary_defect(u: &CMat) -> f64 {
    let n = u.nrows();
    max_abs_entry(&(u.adjoint() * u - CMat::identity(n, n)))
}

pub fn real_diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |r, c| {
        if r == c {
            Complex64::new(values[r], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Block-diagonal join `a ⊕ b`.
pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMat::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}
