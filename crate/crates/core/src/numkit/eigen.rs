//! Smallest eigenvalue of a Hermitian matrix.
//!
//! A Hermitian `A` embeds as the real symmetric matrix
//! `[[Re A, -Im A], [Im A, Re A]]`, whose spectrum is that of `A` with every
//! eigenvalue doubled. The embedding is diagonalized with cyclic Jacobi
//! rotations, which are slow but unconditionally robust at these sizes.

use super::{ComplexMatrix, LinAlgError};

/// Smallest eigenvalue of a Hermitian matrix, to ~1e-9 relative accuracy.
pub fn hermitian_eigen_min(a: &ComplexMatrix) -> Result<f64, LinAlgError> {
    a.validate_hermitian()?;
    let n = a.rows();
    if n == 0 {
        return Ok(0.0);
    }
    let m = 2 * n;
    let mut e = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            e[i * m + j] = z.re;
            e[i * m + (j + n)] = -z.im;
            e[(i + n) * m + j] = z.im;
            e[(i + n) * m + (j + n)] = z.re;
        }
    }
    let evals = jacobi_eigenvalues(&mut e, m);
    Ok(evals.into_iter().fold(f64::INFINITY, f64::min))
}

/// Cyclic Jacobi eigenvalue iteration for a dense symmetric matrix
/// (row major, length n*n). Returns all eigenvalues.
pub(crate) fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0f64; n];

    for sweep in 0..100 {
        let mut sm = 0.0;
        for i in 0..n - 1 {
            for j in i + 1..n {
                sm += a[i * n + j].abs();
            }
        }
        if sm == 0.0 {
            break;
        }
        let thresh = if sweep < 3 {
            0.2 * sm / (n * n) as f64
        } else {
            0.0
        };
        for i in 0..n - 1 {
            for j in i + 1..n {
                let g = 100.0 * a[i * n + j].abs();
                if sweep > 3
                    && d[i].abs() + g == d[i].abs()
                    && d[j].abs() + g == d[j].abs()
                {
                    a[i * n + j] = 0.0;
                } else if a[i * n + j].abs() > thresh {
                    let h = d[j] - d[i];
                    let t = if h.abs() + g == h.abs() {
                        a[i * n + j] / h
                    } else {
                        let theta = 0.5 * h / a[i * n + j];
                        let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            t = -t;
                        }
                        t
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * a[i * n + j];
                    z[i] -= h;
                    z[j] += h;
                    d[i] -= h;
                    d[j] += h;
                    a[i * n + j] = 0.0;
                    let rot = |a: &mut [f64], p: usize, q: usize| {
                        let g = a[p];
                        let h = a[q];
                        a[p] = g - s * (h + g * tau);
                        a[q] = h + s * (g - h * tau);
                    };
                    for k in 0..i {
                        rot(a, k * n + i, k * n + j);
                    }
                    for k in i + 1..j {
                        rot(a, i * n + k, k * n + j);
                    }
                    for k in j + 1..n {
                        rot(a, i * n + k, j * n + k);
                    }
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    d
}
