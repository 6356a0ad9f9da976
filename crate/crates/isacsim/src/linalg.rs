//! Small dense complex linear algebra: Hermitian Cholesky solves, tiny
//! Jacobi eigensolves, and a few helpers used throughout the crate.
//!
//! Every system in this crate is Hermitian and small (at most a few hundred
//! rows), so direct factorizations are used instead of a LAPACK backend.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: Array2<Complex64>,
}

impl CholeskyFactor {
    /// Factor `a = L Lᴴ`. Only the lower triangle of `a` is read.
    pub fn new(a: &Array2<Complex64>) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut l = Array2::<Complex64>::zeros((n, n));
        for j in 0..n {
            let mut diag = a[(j, j)].re;
            for k in 0..j {
                diag -= l[(j, k)].norm_sqr();
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { row: j, pivot: diag });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut sum = a[(i, j)];
                for k in 0..j {
                    sum -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = sum / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// The lower-triangular factor `L`.
    pub fn lower(&self) -> &Array2<Complex64> {
        &self.l
    }

    /// Solve `A x = b` through the factor.
    pub fn solve_vec(&self, b: &Array1<Complex64>) -> Array1<Complex64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x = b.clone();
        // forward: L y = b
        for i in 0..n {
            let mut sum = x[i];
            for k in 0..i {
                sum -= self.l[(i, k)] * x[k];
            }
            x[i] = sum / self.l[(i, i)];
        }
        // backward: Lᴴ x = y
        for i in (0..n).rev() {
            let mut sum = x[i];
            for k in (i + 1)..n {
                sum -= self.l[(k, i)].conj() * x[k];
            }
            x[i] = sum / self.l[(i, i)];
        }
        x
    }

    /// Solve `A X = B` column by column.
    pub fn solve_mat(&self, b: &Array2<Complex64>) -> Array2<Complex64> {
        let mut out = Array2::<Complex64>::zeros(b.raw_dim());
        for (j, col) in b.columns().into_iter().enumerate() {
            let x = self.solve_vec(&col.to_owned());
            out.column_mut(j).assign(&x);
        }
        out
    }
}

/// Convenience wrapper: factor and solve in one call.
pub fn hermitian_solve(
    a: &Array2<Complex64>,
    b: &Array1<Complex64>,
) -> Result<Array1<Complex64>, LinalgError> {
    Ok(CholeskyFactor::new(a)?.solve_vec(b))
}

/// Largest deviation from Hermitian symmetry, `max_ij |a_ij - conj(a_ji)|`.
pub fn max_hermitian_asymmetry(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Eigen-decomposition of a small Hermitian matrix by cyclic complex Jacobi.
///
/// Returns eigenvalues (ascending) and the matrix whose columns are the
/// corresponding orthonormal eigenvectors. Intended for matrices of a dozen
/// rows or fewer; cost grows cubically.
pub fn hermitian_eigen_small(a: &Array2<Complex64>) -> (Vec<f64>, Array2<Complex64>) {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "eigen requires a square matrix");
    let mut m = a.clone();
    let mut v = Array2::<Complex64>::eye(n);
    let scale: f64 = (0..n)
        .map(|i| m[(i, i)].re.abs())
        .fold(1e-300, f64::max)
        .max(max_offdiag(&m));
    let tol = 1e-15 * scale;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                off = off.max(apq.norm());
                if apq.norm() <= tol {
                    continue;
                }
                // diagonalize the 2x2 Hermitian block [[app, apq], [conj(apq), aqq]]
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let abs = apq.norm();
                let phase = apq / abs;
                let tau = (aqq - app) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // columns: [p] <- c*[p] - conj(s*phase)... apply G on the right,
                // Gᴴ on the left with G[[c, s*phase],[-s*conj(phase), c]]
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = phase * s;
                let g_qp = -phase.conj() * s;
                let g_qq = Complex64::new(c, 0.0);
                // m <- Gᴴ m G
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * g_pp + miq * g_qp;
                    m[(i, q)] = mip * g_pq + miq * g_qq;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = g_pp.conj() * mpj + g_qp.conj() * mqj;
                    m[(q, j)] = g_pq.conj() * mpj + g_qq.conj() * mqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * g_pp + viq * g_qp;
                    v[(i, q)] = vip * g_pq + viq * g_qq;
                }
            }
        }
        if off <= tol {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = Array2::<Complex64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    (eigenvalues, vectors)
}

fn max_offdiag(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for p in 0..n {
        for q in (p + 1)..n {
            worst = worst.max(m[(p, q)].norm());
        }
    }
    worst
}

/// Nonzero eigenpairs of `V Vᴴ` obtained through the small Gram matrix `Vᴴ V`.
///
/// Eigenvalues below `rel_tol` times the largest are dropped. Returns pairs
/// sorted descending by eigenvalue; eigenvectors are orthonormal columns.
pub fn low_rank_eigen(
    v: &Array2<Complex64>,
    rel_tol: f64,
) -> (Vec<f64>, Array2<Complex64>) {
    let m = v.nrows();
    let r = v.ncols();
    if r == 0 {
        return (Vec::new(), Array2::zeros((m, 0)));
    }
    let mut gram = Array2::<Complex64>::zeros((r, r));
    for i in 0..r {
        for j in 0..r {
            let mut sum = Complex64::new(0.0, 0.0);
            for k in 0..m {
                sum += v[(k, i)].conj() * v[(k, j)];
            }
            gram[(i, j)] = sum;
        }
    }
    let (vals, vecs) = hermitian_eigen_small(&gram);
    let top = vals.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = rel_tol * top;
    let mut eigenvalues = Vec::new();
    let mut columns = Vec::new();
    for (idx, &lam) in vals.iter().enumerate().rev() {
        if lam <= cutoff || lam <= 0.0 {
            continue;
        }
        // eigenvector of V Vᴴ: V s / sqrt(lam)
        let s = vecs.column(idx);
        let mut col = Array1::<Complex64>::zeros(m);
        for j in 0..r {
            let sj = s[j];
            for k in 0..m {
                col[k] += v[(k, j)] * sj;
            }
        }
        let inv = 1.0 / lam.sqrt();
        col.mapv_inplace(|x| x * inv);
        eigenvalues.push(lam);
        columns.push(col);
    }
    let mut vectors = Array2::<Complex64>::zeros((m, eigenvalues.len()));
    for (j, col) in columns.iter().enumerate() {
        vectors.column_mut(j).assign(col);
    }
    (eigenvalues, vectors)
}

/// Largest eigenvalue of a Hermitian PSD matrix by power iteration.
pub fn power_iteration_lmax(a: &Array2<Complex64>, iterations: usize) -> f64 {
    let n = a.nrows();
    let mut x = Array1::<Complex64>::from_elem(n, Complex64::new(1.0, 0.0));
    for k in 0..n {
        // deterministic non-symmetric start
        x[k] += Complex64::new(0.0, 0.1 * (k as f64 + 1.0) / n as f64);
    }
    let mut lam = 0.0;
    for _ in 0..iterations {
        let y = a.dot(&x);
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        x = y.mapv(|z| z / norm);
        lam = norm;
    }
    // Rayleigh quotient for the final iterate
    let ax = a.dot(&x);
    let num: f64 = x.iter().zip(ax.iter()).map(|(xi, yi)| (xi.conj() * yi).re).sum();
    let den: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    if den > 0.0 {
        num / den
    } else {
        lam
    }
}
