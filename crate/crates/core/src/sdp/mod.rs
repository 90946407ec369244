//! Fourier-domain dual semidefinite program and its solver.
//!
//! The estimator maximizes `Re(c^H y)` over dual vectors `c` whose associated
//! trigonometric polynomial `b(z)` with coefficients `h = G^H c` is bounded
//! by one on the unit circle. The boundedness constraint is expressed
//! exactly through a Hermitian Gram matrix `H`:
//!
//! ```text
//! maximize  Re(c^H y)
//! s.t.      [[H, G^H c], [c^H G, 1]]  is positive semidefinite
//!           sum_i H[i, i+j] = 1 if j = 0, else 0   (j = 0..P-1)
//! ```
//!
//! The complex Hermitian constraint block of side P+1 embeds as the real
//! symmetric block `[[Re, -Im], [Im, Re]]` of side 2(P+1); the solver works
//! on the complex form, which is that embedding with the redundant mirrored
//! rows removed. The interior-point method lives in the private `solver`
//! submodule.

mod solver;

use crate::manifold::ManifoldBasis;
use crate::numkit::{inner, norm2, ComplexMatrix};
use num_complex::Complex64;
use thiserror::Error;

/// Allowed overshoot of `max |b(e^{j theta})|` beyond 1 at an optimal point.
pub const CERTIFICATE_SLACK: f64 = 1e-6;
/// Default grid size for certificate checks.
pub const CERTIFICATE_GRID: usize = 8192;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("snapshot length {got} does not match the {expected} basis columns")]
    ShapeMismatch { expected: usize, got: usize },
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relative duality-gap tolerance certified at termination.
    pub gap_tol: f64,
    /// Cap on total Newton iterations.
    pub max_iter: usize,
    /// How far below zero the smallest block eigenvalue may sit at Optimal.
    pub psd_slack: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            max_iter: 200,
            psd_slack: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Gap tolerance certified.
    Optimal,
    /// Iteration cap reached first.
    MaxIter,
    /// Factorization or line search broke down before the gap was certified.
    NumericalTrouble,
}

/// Assembled dual SDP: the basis, the snapshot, and the block dimensions.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    basis: ManifoldBasis,
    y: Vec<Complex64>,
}

impl SdpProblem {
    pub fn basis(&self) -> &ManifoldBasis {
        &self.basis
    }

    pub fn snapshot(&self) -> &[Complex64] {
        &self.y
    }

    pub fn p(&self) -> usize {
        self.basis.p()
    }

    pub fn sensors(&self) -> usize {
        self.basis.sensors()
    }

    /// Number of diagonal-sum constraints on the Gram block (j = 0..P-1).
    pub fn trace_constraints(&self) -> usize {
        self.p()
    }

    /// Side of the real symmetric embedding of the constraint block.
    pub fn embedded_dim(&self) -> usize {
        2 * (self.p() + 1)
    }
}

/// Certified solution of the dual SDP.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Optimal dual vector.
    pub c_star: Vec<Complex64>,
    /// Gram block at the optimum (Hermitian, PSD up to `psd_slack`).
    pub h_star: ComplexMatrix,
    /// `Re(c*^H y)` in the original snapshot scale.
    pub objective: f64,
    /// Certified relative duality gap at termination.
    pub duality_gap: f64,
    /// Newton iterations spent.
    pub iterations: usize,
    pub status: SolveStatus,
}

impl SdpSolution {
    /// Rebuilds the full constraint block `[[H, G^H c], [c^H G, 1]]`.
    pub fn block_matrix(&self, basis: &ManifoldBasis) -> ComplexMatrix {
        let p = basis.p();
        let h_vec = basis.dual_coefficients(&self.c_star);
        let mut b = ComplexMatrix::zeros(p + 1, p + 1);
        for i in 0..p {
            for j in 0..p {
                b[(i, j)] = self.h_star[(i, j)];
            }
            b[(i, p)] = h_vec[i];
            b[(p, i)] = h_vec[i].conj();
        }
        b[(p, p)] = Complex64::new(1.0, 0.0);
        b
    }

    /// Diagonal-sum constraint residuals: `|tr_j(H) - delta_j0|` for j = 0..P-1.
    pub fn trace_residuals(&self) -> Vec<f64> {
        let p = self.h_star.rows();
        (0..p)
            .map(|j| {
                let sum: Complex64 = (0..p - j).map(|i| self.h_star[(i, i + j)]).sum();
                let target = if j == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                (sum - target).norm()
            })
            .collect()
    }
}

/// Pairs a basis with a snapshot after checking dimensions.
pub fn assemble(basis: &ManifoldBasis, y: &[Complex64]) -> Result<SdpProblem, SdpError> {
    if y.len() != basis.sensors() {
        return Err(SdpError::ShapeMismatch {
            expected: basis.sensors(),
            got: y.len(),
        });
    }
    Ok(SdpProblem {
        basis: basis.clone(),
        y: y.to_vec(),
    })
}

/// Solves the dual SDP with the log-det barrier method.
///
/// Failure modes are encoded in [`SdpSolution::status`]; the returned iterate
/// is the best available one in every case.
pub fn solve(prob: &SdpProblem, opts: &SolverOptions) -> SdpSolution {
    let p = prob.p();
    let y_norm = norm2(&prob.y);
    if y_norm == 0.0 {
        // objective is identically zero; c = 0 with H = I/P is feasible
        let mut h = ComplexMatrix::zeros(p, p);
        for i in 0..p {
            h[(i, i)] = Complex64::new(1.0 / p as f64, 0.0);
        }
        return SdpSolution {
            c_star: vec![Complex64::new(0.0, 0.0); prob.sensors()],
            h_star: h,
            objective: 0.0,
            duality_gap: 0.0,
            iterations: 0,
            status: SolveStatus::Optimal,
        };
    }
    let yn: Vec<Complex64> = prob.y.iter().map(|v| v / y_norm).collect();
    let out = solver::barrier_solve(prob.basis.g_h(), &yn, opts);
    let objective = inner(&out.c, &prob.y).re;
    SdpSolution {
        c_star: out.c,
        h_star: out.h,
        objective,
        duality_gap: out.rel_gap,
        iterations: out.iterations,
        status: out.status,
    }
}

/// Result of sweeping `|b(e^{j theta})|` over a uniform grid.
#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub max_magnitude: f64,
    /// Angle (radians) where the maximum was attained.
    pub theta_at_max: f64,
    pub grid: usize,
    /// Whether the dual certificate bound `max <= 1 + CERTIFICATE_SLACK` holds.
    pub bounded: bool,
}

/// Evaluates the dual polynomial magnitude on a uniform grid and reports the
/// maximum; optimal solutions stay within [`CERTIFICATE_SLACK`] of one.
pub fn check_certificate(
    sol: &SdpSolution,
    basis: &ManifoldBasis,
    grid: usize,
) -> CertificateReport {
    let grid = grid.max(2);
    let h = basis.dual_coefficients(&sol.c_star);
    let n = basis.n() as isize;
    let mut max_magnitude = 0.0f64;
    let mut theta_at_max = 0.0f64;
    for g in 0..grid {
        let theta = -std::f64::consts::PI
            + 2.0 * std::f64::consts::PI * (g as f64 + 1.0) / grid as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, k) in (-n..=n).enumerate() {
            acc += h[i] * Complex64::from_polar(1.0, k as f64 * theta);
        }
        let mag = acc.norm();
        if mag > max_magnitude {
            max_magnitude = mag;
            theta_at_max = theta;
        }
    }
    CertificateReport {
        max_magnitude,
        theta_at_max,
        grid,
        bounded: max_magnitude <= 1.0 + CERTIFICATE_SLACK,
    }
}
