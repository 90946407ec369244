//! Cholesky factorization and pivoted-QR least squares for complex matrices.

use super::{ComplexMatrix, LinAlgError};
use num_complex::Complex64;

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    l: ComplexMatrix,
}

/// Factors a Hermitian positive definite matrix as `L L^H`.
pub fn cholesky(a: &ComplexMatrix) -> Result<CholeskyFactor, LinAlgError> {
    a.validate_hermitian()?;
    cholesky_factor_only(a)
}

/// Factorization without the symmetry check, for callers that construct `A`
/// Hermitian by design and probe definiteness in a hot loop.
pub(crate) fn cholesky_factor_only(a: &ComplexMatrix) -> Result<CholeskyFactor, LinAlgError> {
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(LinAlgError::NotPositiveDefinite { pivot: j });
        }
        let dj = diag.sqrt();
        l[(j, j)] = Complex64::new(dj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(CholeskyFactor { l })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// The lower-triangular factor `L` with `A = L L^H`.
    pub fn lower(&self) -> &ComplexMatrix {
        &self.l
    }

    /// `log det A = 2 sum log L_ii`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.l[(i, i)].re.ln()).sum::<f64>() * 2.0
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "cholesky solve shape mismatch");
        // forward: L y = b
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[(i, k)];
                y[i] = y[i] - lik * y[k];
            }
            y[i] /= self.l[(i, i)].re;
        }
        // backward: L^H x = y
        for i in (0..n).rev() {
            for k in i + 1..n {
                let lki = self.l[(k, i)].conj();
                y[i] = y[i] - lki * y[k];
            }
            y[i] /= self.l[(i, i)].re;
        }
        y
    }

    pub fn solve_mat(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim();
        assert_eq!(b.rows(), n, "cholesky solve shape mismatch");
        let mut out = ComplexMatrix::zeros(n, b.cols());
        for j in 0..b.cols() {
            let col: Vec<Complex64> = (0..n).map(|i| b[(i, j)]).collect();
            let x = self.solve_vec(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    /// `A^{-1}`, re-Hermitianized to suppress round-off drift.
    pub fn inverse(&self) -> ComplexMatrix {
        let mut inv = self.solve_mat(&ComplexMatrix::identity(self.dim()));
        inv.hermitianize();
        inv
    }

    /// `L^{-1} b` by forward substitution.
    pub fn forward_solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "forward solve shape mismatch");
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[(i, k)] * x[k];
            }
            x[i] = s / self.l[(i, i)].re;
        }
        x
    }

    /// `L^{-1} B` by forward substitution on each column.
    pub fn forward_solve_mat(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim();
        assert_eq!(b.rows(), n, "forward solve shape mismatch");
        let mut out = b.clone();
        for j in 0..b.cols() {
            for i in 0..n {
                let mut s = out[(i, j)];
                for k in 0..i {
                    s -= self.l[(i, k)] * out[(k, j)];
                }
                out[(i, j)] = s / self.l[(i, i)].re;
            }
        }
        out
    }
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn cholesky_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinAlgError> {
    if b.rows() != a.rows() {
        return Err(LinAlgError::DimensionMismatch {
            context: "cholesky_solve rhs rows",
            expected: a.rows(),
            got: b.rows(),
        });
    }
    Ok(cholesky(a)?.solve_mat(b))
}

/// Condition-number threshold beyond which least squares refuses to solve.
pub const LSTSQ_COND_LIMIT: f64 = 1e10;

/// Minimum-residual solution of `A x = b` via Householder QR with column
/// pivoting. Requires `A` to have at least as many rows as columns.
pub fn lstsq(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, LinAlgError> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(LinAlgError::Underdetermined { rows: m, cols: n });
    }
    if b.len() != m {
        return Err(LinAlgError::DimensionMismatch {
            context: "lstsq rhs length",
            expected: m,
            got: b.len(),
        });
    }
    let mut r = a.clone();
    let mut qtb = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        // pivot: column with the largest remaining norm
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..n {
            let nj: f64 = (k..m).map(|i| r[(i, j)].norm_sqr()).sum();
            if nj > best_norm {
                best_norm = nj;
                best = j;
            }
        }
        if best != k {
            for i in 0..m {
                let tmp = r[(i, k)];
                r[(i, k)] = r[(i, best)];
                r[(i, best)] = tmp;
            }
            perm.swap(k, best);
        }

        // Householder reflector for column k
        let xnorm: f64 = (k..m).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            return Err(LinAlgError::IllConditioned {
                cond_estimate: f64::INFINITY,
            });
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * xnorm;
        let mut v: Vec<Complex64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sq > 0.0 {
            // apply H = I - 2 v v^H / ‖v‖² to the trailing columns and to b
            for j in k..n {
                let mut dot = Complex64::new(0.0, 0.0);
                for (i, vi) in v.iter().enumerate() {
                    dot += vi.conj() * r[(i + k, j)];
                }
                let scale = dot * (2.0 / vnorm_sq);
                for (i, vi) in v.iter().enumerate() {
                    let cur = r[(i + k, j)];
                    r[(i + k, j)] = cur - scale * vi;
                }
            }
            let mut dot = Complex64::new(0.0, 0.0);
            for (i, vi) in v.iter().enumerate() {
                dot += vi.conj() * qtb[i + k];
            }
            let scale = dot * (2.0 / vnorm_sq);
            for (i, vi) in v.iter().enumerate() {
                qtb[i + k] -= scale * vi;
            }
        }
        r[(k, k)] = alpha;
        for i in k + 1..m {
            r[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }

    // with column pivoting the diagonal of R is non-increasing in magnitude
    let rmax = r[(0, 0)].norm();
    let rmin = r[(n - 1, n - 1)].norm();
    let cond = if rmin > 0.0 { rmax / rmin } else { f64::INFINITY };
    if !cond.is_finite() || cond > LSTSQ_COND_LIMIT {
        return Err(LinAlgError::IllConditioned {
            cond_estimate: cond,
        });
    }

    // back substitution R z = (Q^H b)[0..n]
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = qtb[i];
        for j in i + 1..n {
            s -= r[(i, j)] * z[j];
        }
        z[i] = s / r[(i, i)];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        x[perm[k]] = z[k];
    }
    Ok(x)
}
