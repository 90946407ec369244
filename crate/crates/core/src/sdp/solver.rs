//! Log-det barrier interior-point method for the dual SDP.
//!
//! Minimizes `t * (-Re(c^H y)) - log det B(c, H)` over the affine set of
//! diagonal-sum constraints on `H`, for a geometrically increasing `t`,
//! where `B(c, H) = [[H, h], [h^H, 1]]` with `h = G^H c`. The start
//! `c = 0, H = I/P` is strictly feasible, so feasible-start Newton applies;
//! the constraint residual is still carried through each step to absorb
//! round-off drift.
//!
//! The Newton system is never formed over the P^2 entries of `H`. All the
//! blocks of `W = B^{-1}` reduce to the Schur complement `V = H - h h^H`,
//! which is an exact function of the iterate:
//!
//! ```text
//! W11 = V^{-1},   w12 = -V^{-1} h,   u = V w12 = -h,   det B = det V.
//! ```
//!
//! Stationarity in `H` eliminates the matrix direction analytically, and
//! the remaining system over `(dc, lambda)` is solved in well-scaled
//! coordinates: with `V = L L^H` and the thin QR `L^{-1} G^H = Qz Rz`, the
//! substitution `eta = Rz dc` turns the `c`-block into exactly `2I`, so
//! only the multipliers need a factorization:
//!
//! ```text
//! (Gram + 2 W^H W) lambda = r + t Re(W^H ytil),    ytil = Rz^{-H} y,
//! eta = (t/2) ytil - W lambda,
//! dH  = L (I - sum_k lambda_k M_k + ht dt^H + dt ht^H) L^H,
//! ```
//!
//! where `M_k = L^H S_k L` are the scaled diagonal-sum constraint matrices,
//! `Gram[k,l] = tr(M_k M_l)`, `W` collects `Qz^H M_k ht`, and `ht = L^{-1} h`,
//! `dt = Qz eta`. The multiplier system is itself a Gram matrix, so it is
//! factored through one tall Householder QR of the stacked square-root
//! columns rather than by normal equations, which keeps the solve usable at
//! the square root of its condition number deep into the path. The Newton
//! decrement is evaluated in the factored form `|L_B^{-1} dB L_B^{-H}|_F^2`,
//! which cannot go negative, and each stage certifies a duality bound that
//! tolerates finite centering. When the path stalls inside f64, the solver
//! bisects back to the last centerable barrier parameter and, as a final
//! resort, certifies by rounding: angles from the unit-circle roots of the
//! current dual polynomial, amplitudes by least squares, and a weak-duality
//! gap against that feasible primal point.

use crate::numkit::{cholesky_factor_only, inner, ComplexMatrix};
use num_complex::Complex64;

use super::{SolveStatus, SolverOptions};

const MU: f64 = 10.0;
const PATH_DECREMENT: f64 = 0.25;
const ARMIJO: f64 = 0.25;
const MIN_STEP: f64 = 1e-13;
/// Floor on the normalized objective used for the relative gap.
const OBJ_FLOOR: f64 = 1e-3;
/// Inner iteration cap per centering stage.
const MAX_CENTERING_STEPS: usize = 60;
/// The final barrier parameter targets this fraction of the requested gap,
/// leaving room for the finite-centering slack in the certificate.
const GAP_SAFETY: f64 = 0.6;
/// Largest Newton decrement for which the non-centered duality bound
/// `(nu + delta sqrt(nu) / (1 - delta)) / t` is still applied.
const CERT_DECREMENT_LIMIT: f64 = 0.8;

pub(super) struct BarrierOutput {
    pub c: Vec<Complex64>,
    pub h: ComplexMatrix,
    pub rel_gap: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// Hermitian basis element of the diagonal-sum constraints, identified by
/// the diagonal offset and whether it probes the real or imaginary part.
#[derive(Clone, Copy)]
struct ConstraintBasis {
    offset: usize,
    imag: bool,
    scale: f64,
}

fn constraint_basis(p: usize) -> Vec<ConstraintBasis> {
    let mut basis = Vec::with_capacity(2 * p - 1);
    basis.push(ConstraintBasis {
        offset: 0,
        imag: false,
        scale: 0.5,
    });
    for j in 1..p {
        basis.push(ConstraintBasis {
            offset: j,
            imag: false,
            scale: 1.0,
        });
        basis.push(ConstraintBasis {
            offset: j,
            imag: true,
            scale: 1.0,
        });
    }
    basis
}

impl ConstraintBasis {
    /// `scale * tr(S X)` (real for Hermitian `X`).
    fn value(&self, x: &ComplexMatrix) -> f64 {
        let p = x.rows();
        let j = self.offset;
        let mut sum = Complex64::new(0.0, 0.0);
        for i in 0..p - j {
            sum += x[(i, i + j)];
        }
        if self.imag {
            2.0 * self.scale * sum.im
        } else {
            2.0 * self.scale * sum.re
        }
    }

    /// `scale * S v`.
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let p = v.len();
        let j = self.offset;
        let mut out = vec![Complex64::new(0.0, 0.0); p];
        if self.imag {
            // S = i (Theta_j - Theta_j^T)
            let i_unit = Complex64::new(0.0, 1.0);
            for a in 0..p - j {
                out[a] += i_unit * v[a + j];
                out[a + j] -= i_unit * v[a];
            }
        } else {
            // S = Theta_j + Theta_j^T
            for a in 0..p - j {
                out[a] += v[a + j];
                out[a + j] += v[a];
            }
        }
        for o in out.iter_mut() {
            *o *= self.scale;
        }
        out
    }

    /// Adds `coeff * scale * S` into `m`.
    fn add_scaled(&self, coeff: f64, m: &mut ComplexMatrix) {
        let p = m.rows();
        let j = self.offset;
        let w = coeff * self.scale;
        if self.imag {
            let iw = Complex64::new(0.0, w);
            for a in 0..p - j {
                m[(a, a + j)] += iw;
                m[(a + j, a)] -= iw;
            }
        } else {
            let w = Complex64::new(w, 0.0);
            for a in 0..p - j {
                m[(a, a + j)] += w;
                m[(a + j, a)] += w;
            }
        }
    }
}

/// Constraint targets: `b_0 = 1` (unit trace), zero elsewhere.
fn constraint_targets(p: usize) -> Vec<f64> {
    let mut b = vec![0.0; 2 * p - 1];
    b[0] = 1.0;
    b
}


/// Square-root form of the constraint Gram matrix.
///
/// With `V = L L^H`, `tr(S_k V S_l V) = tr(M_k M_l)` for `M_k = L^H S_k L`,
/// so the Gram matrix is `X^T X` where column k of `X` stacks the real and
/// imaginary parts of `M_k`. A Householder QR of `X` yields `Gram = R^T R`
/// with cond(R) the square root of cond(Gram), which keeps the multiplier
/// solves usable deep into the central path.
struct QrFactor {
    /// Upper-triangular `R`, row major, n x n (factor of the equilibrated
    /// columns; `scale` restores the original column norms).
    r: Vec<f64>,
    scale: Vec<f64>,
    ncon: usize,
}

impl QrFactor {
    /// R factor of the tall matrix whose columns are given; consumes them.
    /// Columns are equilibrated to unit norm first, which keeps the
    /// triangular solves accurate on badly graded systems.
    fn from_columns(mut cols: Vec<Vec<f64>>) -> Self {
        let ncon = cols.len();
        let scale: Vec<f64> = cols
            .iter_mut()
            .map(|col| {
                let n: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > 0.0 && n.is_finite() {
                    for v in col.iter_mut() {
                        *v /= n;
                    }
                    n
                } else {
                    1.0
                }
            })
            .collect();
        // Householder QR, keeping only R
        let mut r = vec![0.0; ncon * ncon];
        for k in 0..ncon {
            let norm: f64 = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
            let alpha = if cols[k][k] >= 0.0 { -norm } else { norm };
            let mut v = cols[k][k..].to_vec();
            v[0] -= alpha;
            let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
            if vnorm_sq > 0.0 {
                for col in cols.iter_mut().skip(k + 1) {
                    let tail = &mut col[k..];
                    let dot: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
                    let s = 2.0 * dot / vnorm_sq;
                    for (tv, vv) in tail.iter_mut().zip(&v) {
                        *tv -= s * vv;
                    }
                }
            }
            r[k * ncon + k] = alpha;
            for j in k + 1..ncon {
                r[k * ncon + j] = cols[j][k];
            }
        }
        // guard exactly singular pivots
        let max_diag = (0..ncon)
            .map(|k| r[k * ncon + k].abs())
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for k in 0..ncon {
            let d = &mut r[k * ncon + k];
            if d.abs() < 1e-150 * max_diag {
                *d = 1e-150 * max_diag;
            }
        }
        Self { r, scale, ncon }
    }

    /// Columns of the constraint-Gram square root: with `V = L L^H` the Gram
    /// matrix is `X^T X` where column k stacks re/im of `M_k = L^H S_k L`.
    /// Returns the QR factor together with the raw columns, which double as
    /// the scaled constraint matrices when assembling the H-direction.
    /// Columns of the constraint metric: with `V = L L^H` the matrices
    /// `M_k = L^H S_k L` satisfy `tr(S_k V S_l V) = tr(M_k M_l)`, so their
    /// realified stackings are the square-root columns of the constraint
    /// Gram matrix. They double as the scaled constraint matrices when
    /// assembling the H-direction.
    fn metric_columns(l: &ComplexMatrix, basis: &[ConstraintBasis]) -> Vec<Vec<f64>> {
        let p = l.rows();
        let rows = 2 * p * p;
        // A_j = L^H Theta_j L, reused by the re/im pair at each offset
        let mut a_shift: Vec<ComplexMatrix> = Vec::with_capacity(p);
        for j in 0..p {
            let mut aj = ComplexMatrix::zeros(p, p);
            for b in 0..p {
                for cidx in 0..p {
                    let mut acc = Complex64::new(0.0, 0.0);
                    // sum over a with L[a][b] != 0 (a >= b) and a + j <= p-1
                    for a in b..p.saturating_sub(j) {
                        acc += l[(a, b)].conj() * l[(a + j, cidx)];
                    }
                    aj[(b, cidx)] = acc;
                }
            }
            a_shift.push(aj);
        }
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
        for bk in basis {
            let aj = &a_shift[bk.offset];
            let mut col = vec![0.0; rows];
            for i in 0..p {
                for j in 0..p {
                    let m = if bk.imag {
                        Complex64::new(0.0, 1.0) * (aj[(i, j)] - aj[(j, i)].conj())
                    } else {
                        aj[(i, j)] + aj[(j, i)].conj()
                    } * bk.scale;
                    col[i * p + j] = m.re;
                    col[p * p + i * p + j] = m.im;
                }
            }
            cols.push(col);
        }
        cols
    }

    /// `R^{-T} b` (forward substitution; the effective factor is R D).
    fn solve_rt(&self, b: &[f64]) -> Vec<f64> {
        let n = self.ncon;
        let mut x: Vec<f64> = (0..n).map(|i| b[i] / self.scale[i]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.r[k * n + i] * x[k];
            }
            x[i] /= self.r[i * n + i];
        }
        x
    }

    /// `R^{-1} b` (back substitution; the effective factor is R D).
    fn solve_r(&self, b: &[f64]) -> Vec<f64> {
        let n = self.ncon;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.r[i * n + k] * x[k];
            }
            x[i] /= self.r[i * n + i];
        }
        for i in 0..n {
            x[i] /= self.scale[i];
        }
        x
    }

    /// `(X^T X)^{-1} b = R^{-1} R^{-T} b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_r(&self.solve_rt(b))
    }
}

/// Thin QR of a tall complex matrix by modified Gram-Schmidt with one
/// re-orthogonalization pass. Returns (Q, R) with Q of the input shape and
/// R upper triangular.
fn thin_qr(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (rows, cols) = (a.rows(), a.cols());
    let mut q = a.clone();
    let mut r = ComplexMatrix::zeros(cols, cols);
    for j in 0..cols {
        for _pass in 0..2 {
            for k in 0..j {
                let mut dot = Complex64::new(0.0, 0.0);
                for i in 0..rows {
                    dot += q[(i, k)].conj() * q[(i, j)];
                }
                r[(k, j)] += dot;
                for i in 0..rows {
                    let qik = q[(i, k)];
                    q[(i, j)] -= dot * qik;
                }
            }
        }
        let norm: f64 = (0..rows).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        let safe = norm.max(f64::MIN_POSITIVE);
        r[(j, j)] = Complex64::new(safe, 0.0);
        for i in 0..rows {
            q[(i, j)] /= safe;
        }
    }
    (q, r)
}

/// `R^{-1} b` for upper-triangular complex R.
fn solve_upper(r: &ComplexMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = r.rows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= r[(i, k)] * x[k];
        }
        x[i] = s / r[(i, i)];
    }
    x
}

/// `R^{-H} b` for upper-triangular complex R (forward substitution).
fn solve_upper_adjoint(r: &ComplexMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = r.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= r[(k, i)].conj() * x[k];
        }
        x[i] = s / r[(i, i)].conj();
    }
    x
}

/// The Schur complement `V = H - h h^H`, Hermitian by construction.
fn schur_block(h_mat: &ComplexMatrix, hvec: &[Complex64]) -> ComplexMatrix {
    let p = h_mat.rows();
    let mut v = ComplexMatrix::from_fn(p, p, |i, j| h_mat[(i, j)] - hvec[i] * hvec[j].conj());
    v.hermitianize();
    v
}

pub(super) fn barrier_solve(
    g_h: &ComplexMatrix,
    yn: &[Complex64],
    opts: &SolverOptions,
) -> BarrierOutput {
    let p = g_h.rows();
    let m = g_h.cols();
    let nu = (p + 1) as f64;
    let basis = constraint_basis(p);
    let targets = constraint_targets(p);
    let _ncon = basis.len();

    // strictly feasible start
    let mut c = vec![Complex64::new(0.0, 0.0); m];
    let mut h_mat = ComplexMatrix::zeros(p, p);
    for i in 0..p {
        h_mat[(i, i)] = Complex64::new(1.0 / p as f64, 0.0);
    }

    let mut t = 1.0f64;
    let mut iterations = 0usize;
    let status;
    let mut rel_gap = f64::INFINITY;

    let objective = |c: &[Complex64]| inner(c, yn).re;
    // duality bound at decrement delta: exact nu/t on the path, inflated by
    // the standard finite-centering correction off it
    let certified_gap = |t: f64, c: &[Complex64], delta: f64| -> f64 {
        if delta > CERT_DECREMENT_LIMIT {
            return f64::INFINITY;
        }
        let nu_eff = nu + delta * nu.sqrt() / (1.0 - delta);
        (nu_eff / t) / objective(c).abs().max(OBJ_FLOOR)
    };

    // bisection state for squeezing the last certifiable decade out of the
    // central path: last t that centered and first t that stalled
    let mut t_good = 0.0f64;
    let mut t_bad = f64::INFINITY;
    let mut retreats = 0usize;
    const MAX_RETREATS: usize = 6;

    'outer: loop {
        let tol = PATH_DECREMENT;
        let mut centering_steps = 0usize;
        let mut stalled = false;
        // best-centered iterate seen in this stage; a stalled stage
        // certifies (and returns) this snapshot rather than its last point
        let mut best: Option<(f64, Vec<Complex64>, ComplexMatrix)> = None;
        // center at the current t
        loop {
            if iterations >= opts.max_iter {
                status = SolveStatus::MaxIter;
                break 'outer;
            }
            if centering_steps >= MAX_CENTERING_STEPS {
                stalled = true;
                break;
            }
            let hvec = g_h.mul_vec(&c);
            let v = schur_block(&h_mat, &hvec);
            let v_chol = match cholesky_factor_only(&v) {
                Ok(f) => f,
                Err(_) => {
                    status = SolveStatus::NumericalTrouble;
                    break 'outer;
                }
            };
            let l_mat = v_chol.lower();

            // orthonormal basis of the scaled dual-vector range:
            // Z = L^{-1} G^H = Qz Rz reparametrizes dc as eta = Rz dc,
            // making the c-block of the Newton system exactly 2I
            let z = v_chol.forward_solve_mat(g_h);
            let (qz, rz) = thin_qr(&z);
            let ytil = solve_upper_adjoint(&rz, yn);
            let ht = v_chol.forward_solve_vec(&hvec);

            // scaled constraint matrices and the coupling vectors
            // p_k = L^H S_k h = M_k ht,  w_k = Qz^H p_k
            let metric_cols = QrFactor::metric_columns(l_mat, &basis);
            let p_vecs: Vec<Vec<Complex64>> = basis
                .iter()
                .map(|bk| {
                    let mut sk_h = bk.apply(&hvec);
                    // L^H x computed as adjoint of the lower factor
                    let mut out = vec![Complex64::new(0.0, 0.0); p];
                    for i in 0..p {
                        for k in i..p {
                            out[i] += l_mat[(k, i)].conj() * sk_h[k];
                        }
                    }
                    sk_h.clear();
                    out
                })
                .collect();
            let w_vecs: Vec<Vec<Complex64>> = p_vecs
                .iter()
                .map(|pk| {
                    (0..m)
                        .map(|col| {
                            let mut acc = Complex64::new(0.0, 0.0);
                            for i in 0..p {
                                acc += qz[(i, col)].conj() * pk[i];
                            }
                            acc
                        })
                        .collect()
                })
                .collect();

            // lambda system (Gram + 2 W^H W) lambda = r + t Re(W^H ytil),
            // factored through the stacked square-root columns
            let r_vals: Vec<f64> = basis
                .iter()
                .zip(&targets)
                .map(|(bk, bt)| bk.value(&v) - bt + bk.value(&h_mat))
                .collect();
            let sqrt2 = std::f64::consts::SQRT_2;
            let stacked: Vec<Vec<f64>> = metric_cols
                .iter()
                .zip(&w_vecs)
                .map(|(mc, wk)| {
                    let mut col = Vec::with_capacity(mc.len() + 2 * m);
                    col.extend_from_slice(mc);
                    col.extend(wk.iter().map(|zv| sqrt2 * zv.re));
                    col.extend(wk.iter().map(|zv| sqrt2 * zv.im));
                    col
                })
                .collect();
            let lam_qr = QrFactor::from_columns(stacked);
            let rhs: Vec<f64> = r_vals
                .iter()
                .zip(&w_vecs)
                .map(|(rk, wk)| {
                    let dot: Complex64 =
                        wk.iter().zip(&ytil).map(|(a, b)| a.conj() * b).sum();
                    rk + t * dot.re
                })
                .collect();
            let lambda = lam_qr.solve(&rhs);

            // eta = (t/2) ytil - sum_l lambda_l w_l, then dc and dt
            let mut eta: Vec<Complex64> =
                ytil.iter().map(|zv| 0.5 * t * zv).collect();
            for (lk, wk) in lambda.iter().zip(&w_vecs) {
                for (e, w) in eta.iter_mut().zip(wk) {
                    *e -= lk * w;
                }
            }
            let dc = solve_upper(&rz, &eta);
            let dt: Vec<Complex64> = (0..p)
                .map(|i| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for col in 0..m {
                        acc += qz[(i, col)] * eta[col];
                    }
                    acc
                })
                .collect();

            // dH = L (I - sum_k lambda_k M_k + ht dt^H + dt ht^H) L^H,
            // assembled in the scaled metric so its small-eigenvalue
            // components stay accurate relative to the local norm
            let mut dht = ComplexMatrix::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for (k, col) in metric_cols.iter().enumerate() {
                        re += lambda[k] * col[i * p + j];
                        im += lambda[k] * col[p * p + i * p + j];
                    }
                    dht[(i, j)] = -Complex64::new(re, im)
                        + ht[i] * dt[j].conj()
                        + dt[i] * ht[j].conj();
                }
                dht[(i, i)] += Complex64::new(1.0, 0.0);
            }
            let mut dh = l_mat.mul(&dht).mul(&l_mat.adjoint());
            dh.hermitianize();
            // project the direction back onto A(dH) = b - A(H) exactly; the
            // basis elements are Frobenius-orthogonal, so each constraint is
            // repaired independently
            for (bk, bt) in basis.iter().zip(&targets) {
                let fro = if bk.offset == 0 {
                    p as f64
                } else {
                    2.0 * (p - bk.offset) as f64
                };
                let mis = (bt - bk.value(&h_mat)) - bk.value(&dh);
                if mis != 0.0 {
                    bk.add_scaled(mis / fro, &mut dh);
                }
            }

            // Newton decrement via |L^{-1} dB L^{-H}|_F^2 with B = LL^H:
            // nonnegative by construction
            let d = g_h.mul_vec(&dc);
            let block = match cholesky_factor_only(&assemble_block(&h_mat, &hvec)) {
                Ok(f) => f,
                Err(_) => {
                    status = SolveStatus::NumericalTrouble;
                    break 'outer;
                }
            };
            let mut db = ComplexMatrix::zeros(p + 1, p + 1);
            for i in 0..p {
                for j in 0..p {
                    db[(i, j)] = dh[(i, j)];
                }
                db[(i, p)] = d[i];
                db[(p, i)] = d[i].conj();
            }
            let half = block.forward_solve_mat(&db);
            let scaled = block.forward_solve_mat(&half.adjoint());
            let decrement_sq: f64 = scaled.data().iter().map(|zv| zv.norm_sqr()).sum();

            if std::env::var_os("DOA_SDP_DEBUG").is_some() {
                eprintln!("DBG t={t:.2e} iter={iterations} dec2={decrement_sq:.3e}");
            }
            let delta = decrement_sq.max(0.0).sqrt();
            if best.as_ref().is_none_or(|(bd, _, _)| delta < *bd) {
                best = Some((delta, c.clone(), h_mat.clone()));
            }
            if decrement_sq <= tol * tol {
                break;
            }

            // line search: largest s <= 1 keeping V PD, then Armijo on
            // f = -t Re(c^H y) - log det V (det B = det V). The objective
            // difference is linear in s and the log-det difference is a sum
            // of per-pivot log ratios, so df evaluates without cancellation
            // even when t |f| is huge.
            let obj_step = inner(&dc, yn).re;
            let mut s = 1.0f64;
            let mut accepted = false;
            while s >= MIN_STEP {
                let c_try: Vec<Complex64> =
                    c.iter().zip(&dc).map(|(a, b)| a + s * b).collect();
                let mut h_try =
                    ComplexMatrix::from_fn(p, p, |i, j| h_mat[(i, j)] + s * dh[(i, j)]);
                h_try.hermitianize();
                let hvec_try = g_h.mul_vec(&c_try);
                let v_try = schur_block(&h_try, &hvec_try);
                if let Ok(f_try_chol) = cholesky_factor_only(&v_try) {
                    let mut dlogdet = 0.0;
                    for i in 0..p {
                        dlogdet +=
                            (f_try_chol.lower()[(i, i)].re / v_chol.lower()[(i, i)].re).ln();
                    }
                    let df = -t * s * obj_step - 2.0 * dlogdet;
                    if df <= -ARMIJO * s * decrement_sq + 1e-10 {
                        c = c_try;
                        h_mat = h_try;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if std::env::var_os("DOA_SDP_DEBUG").is_some() && s < 1.0 {
                eprintln!("DBG   step s={s:.3e} accepted={accepted}");
            }
            iterations += 1;
            centering_steps += 1;
            if !accepted {
                // the step is a descent direction; failure to make progress
                // means f64 cannot center further at this t
                stalled = true;
                break;
            }
        }

        if let Some((delta, bc, bh)) = best {
            if delta <= tol || !stalled {
                c = bc;
                h_mat = bh;
            }
            rel_gap = certified_gap(t, &c, delta).min(rel_gap);
        }
        if rel_gap <= opts.gap_tol {
            status = SolveStatus::Optimal;
            break;
        }
        if stalled {
            // retreat into the gap between the last centered t and this one;
            // the certificate tightens as the bisection closes on the cliff
            t_bad = t_bad.min(t);
            if retreats < MAX_RETREATS && t_good > 0.0 && t_bad / t_good > 1.3 {
                retreats += 1;
                t = (t_good * t_bad).sqrt();
                continue;
            }
            status = SolveStatus::NumericalTrouble;
            break;
        }
        t_good = t_good.max(t);
        // aim the final stage directly at the needed barrier parameter
        let t_needed = nu / (GAP_SAFETY * opts.gap_tol * objective(&c).abs().max(OBJ_FLOOR));
        t = ((t * MU).min(t_needed.max(2.0 * t))).min((t * t_bad).sqrt().max(t * 1.3));
    }

    // When the barrier certificate falls short, try to close the gap with a
    // primal rounding certificate plus a dual face polish; the barrier
    // iterate is typically far more accurate than nu/t can certify.
    if status != SolveStatus::Optimal {
        let polish = rounding_polish(g_h, yn, &c, &h_mat, &basis, &targets, opts);
        if std::env::var_os("DOA_SDP_DEBUG").is_some() {
            eprintln!(
                "DBG polish: {:?}",
                polish.as_ref().map(|(_, _, g)| *g)
            );
        }
        if let Some((c2, h2, gap2)) = polish {
            if gap2 <= opts.gap_tol && gap2 < rel_gap {
                return BarrierOutput {
                    c: c2,
                    h: h2,
                    rel_gap: gap2,
                    iterations,
                    status: SolveStatus::Optimal,
                };
            }
        }
    }

    BarrierOutput {
        c,
        h: h_mat,
        rel_gap,
        iterations,
        status,
    }
}

/// Closes the certification gap by rounding the dual iterate to a primal
/// atomic candidate and projecting the dual vector onto the optimal face.
///
/// Rooting the dual polynomial yields candidate angles; least squares gives
/// amplitudes `s` with residual `rho`, so `sum |s_l| + C rho` upper-bounds
/// the optimal value (any residual is representable with atomic norm at most
/// `C` per unit l2 norm, with `C` computed from a fixed invertible steering
/// set). The dual vector is then moved minimally so the polynomial is
/// exactly unimodular at the candidate angles and rescaled by its true sup;
/// weak duality certifies the difference. The Gram block is re-paired by
/// translating the rank-one term, which preserves the Schur complement
/// exactly, then re-projected onto the trace constraints.
#[allow(clippy::too_many_arguments)]
fn rounding_polish(
    g_h: &ComplexMatrix,
    yn: &[Complex64],
    c0: &[Complex64],
    h_mat0: &ComplexMatrix,
    basis: &[ConstraintBasis],
    targets: &[f64],
    opts: &SolverOptions,
) -> Option<(Vec<Complex64>, ComplexMatrix, f64)> {
    use crate::rooting::{extract_doas, nonneg_poly, roots, DualPolynomial, UNIT_CIRCLE_TOL};

    let p = g_h.rows();
    let m = g_h.cols();
    let n_half = (p - 1) / 2;
    let h0 = g_h.mul_vec(c0);

    // primal candidate from the current dual polynomial
    let dual = DualPolynomial::new(h0.clone()).ok()?;
    let q = nonneg_poly(&dual);
    let q_roots = roots(&q).map_err(|e| {
        if std::env::var_os("DOA_SDP_DEBUG").is_some() { eprintln!("DBG polish bail roots: {e}"); }
        e
    }).ok()?;
    let est = extract_doas(&q_roots, UNIT_CIRCLE_TOL, crate::rooting::CLUSTER_DEG);
    let l_count = est.angles.len();
    if l_count == 0 || l_count >= m {
        if std::env::var_os("DOA_SDP_DEBUG").is_some() {
            eprintln!("DBG polish bail: l_count = {l_count} of m = {m}");
        }
        return None;
    }

    // a_m(theta) reconstructed from the basis columns
    let steer = |theta: f64| -> Vec<Complex64> {
        (0..m)
            .map(|col| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (row, k) in (-(n_half as isize)..=n_half as isize).enumerate() {
                    acc += g_h[(row, col)] * Complex64::from_polar(1.0, k as f64 * theta);
                }
                acc.conj()
            })
            .collect()
    };
    let a_cols: Vec<Vec<Complex64>> = est.angles.iter().map(|&th| steer(th)).collect();
    let a_mat = ComplexMatrix::from_fn(m, l_count, |i, j| a_cols[j][i]);
    let s_hat = crate::numkit::lstsq(&a_mat, yn).map_err(|e| {
        if std::env::var_os("DOA_SDP_DEBUG").is_some() { eprintln!("DBG polish bail lstsq: {e}"); }
        e
    }).ok()?;
    let resid: Vec<Complex64> = a_mat
        .mul_vec(&s_hat)
        .iter()
        .zip(yn)
        .map(|(av, yv)| av - yv)
        .collect();
    let rho = crate::numkit::norm2(&resid);
    if s_hat.iter().all(|sv| sv.norm() == 0.0) {
        return None;
    }

    // atomic-norm cost of one unit of l2 residual, via a fixed M-angle set
    let set_mat = ComplexMatrix::from_fn(m, m, |i, j| {
        let theta =
            -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (j as f64 + 1.0) / m as f64;
        steer(theta)[i]
    });
    let mut inv_frob_sq = 0.0f64;
    for col in 0..m {
        let mut e = vec![Complex64::new(0.0, 0.0); m];
        e[col] = Complex64::new(1.0, 0.0);
        let x = crate::numkit::lstsq(&set_mat, &e).ok()?;
        inv_frob_sq += x.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    let c_geom = (m as f64).sqrt() * inv_frob_sq.sqrt();
    let primal_value: f64 = s_hat.iter().map(|sv| sv.norm()).sum::<f64>() + c_geom * rho;

    // dual face projection: set b(theta_l) = s_l / |s_l| exactly, moving c
    // minimally. phi_l^H c = b_c(theta_l).
    let phi: Vec<Vec<Complex64>> = est
        .angles
        .iter()
        .map(|&theta| {
            (0..m)
                .map(|col| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (row, k) in (-(n_half as isize)..=n_half as isize).enumerate() {
                        acc +=
                            g_h[(row, col)] * Complex64::from_polar(1.0, k as f64 * theta);
                    }
                    acc.conj()
                })
                .collect()
        })
        .collect();
    let eval_b = |cv: &[Complex64], l: usize| -> Complex64 {
        phi[l].iter().zip(cv).map(|(pv, cvv)| pv.conj() * cvv).sum()
    };
    let defect: Vec<Complex64> = (0..l_count)
        .map(|l| {
            let target = s_hat[l] / s_hat[l].norm().max(f64::MIN_POSITIVE);
            target - eval_b(c0, l)
        })
        .collect();
    let mut gram_small = ComplexMatrix::from_fn(l_count, l_count, |i, j| {
        phi[i].iter().zip(&phi[j]).map(|(a, b)| a.conj() * b).sum()
    });
    gram_small.hermitianize();
    let mu = cholesky_factor_only(&gram_small).map_err(|e| {
        if std::env::var_os("DOA_SDP_DEBUG").is_some() { eprintln!("DBG polish bail face-chol: {e}"); }
        e
    }).ok()?.solve_vec(&defect);
    let mut c1 = c0.to_vec();
    for (l, muv) in mu.iter().enumerate() {
        for (ci, pv) in c1.iter_mut().zip(&phi[l]) {
            *ci += pv * muv;
        }
    }

    // true sup of |b| for the polished vector, then scale into the ball
    let h1 = g_h.mul_vec(&c1);
    let sup = refined_sup(&h1);
    if !(sup.is_finite() && sup > 0.0) {
        return None;
    }
    let scale = sup.max(1.0);
    let c2: Vec<Complex64> = c1.iter().map(|v| v / scale).collect();
    let h2 = g_h.mul_vec(&c2);

    let obj2 = inner(&c2, yn).re;
    let gap2 = (primal_value - obj2) / obj2.abs().max(OBJ_FLOOR);
    if std::env::var_os("DOA_SDP_DEBUG").is_some() {
        let s_sum: f64 = s_hat.iter().map(|sv| sv.norm()).sum();
        let obj0 = inner(c0, yn).re;
        let defect_n = crate::numkit::norm2(&defect);
        eprintln!(
            "DBG polish parts: L={l_count} s_sum={s_sum:.12e} rho={rho:.3e} c_geom={c_geom:.3e} sup={sup:.12e} obj0={obj0:.12e} obj2={obj2:.12e} defect={defect_n:.3e}"
        );
    }
    if !gap2.is_finite() {
        return None;
    }

    // re-pair the Gram block: translating the rank-one term keeps the Schur
    // complement exactly, then restore the diagonal sums
    let mut h_new = ComplexMatrix::from_fn(p, p, |i, j| {
        h_mat0[(i, j)] + h2[i] * h2[j].conj() - h0[i] * h0[j].conj()
    });
    h_new.hermitianize();
    for (bk, bt) in basis.iter().zip(targets) {
        let fro = if bk.offset == 0 {
            p as f64
        } else {
            2.0 * (p - bk.offset) as f64
        };
        let mis = bt - bk.value(&h_new);
        if mis != 0.0 {
            bk.add_scaled(mis / fro, &mut h_new);
        }
    }
    // the paired block must still clear the PSD slack
    let mut v_new = schur_block(&h_new, &h2);
    for i in 0..p {
        v_new[(i, i)] += Complex64::new(opts.psd_slack, 0.0);
    }
    if cholesky_factor_only(&v_new).is_err() {
        if std::env::var_os("DOA_SDP_DEBUG").is_some() {
            eprintln!("DBG polish bail: paired block fails PSD slack");
        }
        return None;
    }

    Some((c2, h_new, gap2.max(0.0)))
}

/// Maximum of `|b(e^{j theta})|` with Newton refinement of every grid-local
/// maximum of the squared magnitude.
fn refined_sup(h: &[Complex64]) -> f64 {
    let p = h.len();
    // autocorrelation r_k, k = -(P-1)..P-1: |b|^2 = sum_k r_k e^{jk theta}
    let mut r = vec![Complex64::new(0.0, 0.0); 2 * p - 1];
    for k in 0..p {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in k..p {
            acc += h[j] * h[j - k].conj();
        }
        r[p - 1 + k] = acc;
        r[p - 1 - k] = acc.conj();
    }
    let eval = |theta: f64| -> (f64, f64, f64) {
        let mut g = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for (idx, rv) in r.iter().enumerate() {
            let k = idx as f64 - (p - 1) as f64;
            let term = rv * Complex64::from_polar(1.0, k * theta);
            g += term.re;
            g1 += -k * term.im;
            g2 += -k * k * term.re;
        }
        (g, g1, g2)
    };
    let grid = (16 * p).max(256);
    let vals: Vec<f64> = (0..grid)
        .map(|i| {
            let theta =
                -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / grid as f64;
            eval(theta).0
        })
        .collect();
    let mut best: f64 = vals.iter().cloned().fold(0.0, f64::max);
    for i in 0..grid {
        let prev = vals[(i + grid - 1) % grid];
        let next = vals[(i + 1) % grid];
        if vals[i] >= prev && vals[i] >= next {
            let mut theta =
                -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / grid as f64;
            for _ in 0..40 {
                let (_, g1, g2) = eval(theta);
                if g2 >= 0.0 {
                    break;
                }
                let step = g1 / g2;
                theta -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            best = best.max(eval(theta).0);
        }
    }
    best.max(0.0).sqrt()
}

fn assemble_block(h_mat: &ComplexMatrix, hvec: &[Complex64]) -> ComplexMatrix {
    let p = h_mat.rows();
    let mut b = ComplexMatrix::zeros(p + 1, p + 1);
    for i in 0..p {
        for j in 0..p {
            b[(i, j)] = h_mat[(i, j)];
        }
        b[(i, p)] = hvec[i];
        b[(p, i)] = hvec[i].conj();
    }
    b[(p, p)] = Complex64::new(1.0, 0.0);
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian_pd(p: usize, seed: u64) -> ComplexMatrix {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let g = ComplexMatrix::from_fn(p, p, |_, _| c64(next(), next()));
        let mut a = g.adjoint().mul(&g);
        for i in 0..p {
            a[(i, i)] += c64(p as f64 * 0.5, 0.0);
        }
        a.hermitianize();
        a
    }

    /// Dense S_k for the brute-force checks.
    fn dense_basis(bk: &ConstraintBasis, p: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(p, p);
        bk.add_scaled(1.0, &mut m);
        m
    }

/// Gram matrix `tr(S_k V S_l V)` over the constraint basis, built from the
    /// two shift-correlation tables
    /// `F(j,l) = tr(Theta_j V Theta_l V)` and `G2(j,l) = tr(Theta_j V Theta_l^T V)`.
    fn constraint_gram(v: &ComplexMatrix, basis: &[ConstraintBasis]) -> Vec<f64> {
        let p = v.rows();
        let mut f = vec![Complex64::new(0.0, 0.0); p * p];
        let mut g2 = vec![Complex64::new(0.0, 0.0); p * p];
        for j in 0..p {
            for l in 0..p {
                let mut facc = Complex64::new(0.0, 0.0);
                let mut gacc = Complex64::new(0.0, 0.0);
                for a in 0..p - j {
                    let row = a + j;
                    for c in 0..p - l {
                        facc += v[(row, c)] * v[(c + l, a)];
                        gacc += v[(row, c + l)] * v[(c, a)];
                    }
                }
                f[j * p + l] = facc;
                g2[j * p + l] = gacc;
            }
        }
        let n = basis.len();
        let mut gram = vec![0.0; n * n];
        for (k, bk) in basis.iter().enumerate() {
            for (l, bl) in basis.iter().enumerate() {
                let fv = f[bk.offset * p + bl.offset];
                let gv = g2[bk.offset * p + bl.offset];
                let raw = match (bk.imag, bl.imag) {
                    (false, false) => 2.0 * (fv + gv).re,
                    (false, true) => -2.0 * (fv - gv).im,
                    (true, false) => -2.0 * (fv + gv).im,
                    (true, true) => 2.0 * (gv - fv).re,
                };
                gram[k * n + l] = bk.scale * bl.scale * raw;
            }
        }
        gram
    }

    #[test]
    fn metric_columns_reproduce_gram() {
        // X^T X over the metric columns must equal tr(S_k V S_l V)
        let p = 5;
        let v = random_hermitian_pd(p, 17);
        let basis = constraint_basis(p);
        let l = cholesky_factor_only(&v).unwrap();
        let cols = QrFactor::metric_columns(l.lower(), &basis);
        let gram = constraint_gram(&v, &basis);
        let n = basis.len();
        for k in 0..n {
            for l2 in 0..n {
                let dot: f64 = cols[k].iter().zip(&cols[l2]).map(|(a, b)| a * b).sum();
                assert!(
                    (dot - gram[k * n + l2]).abs() < 1e-10 * (1.0 + gram[k * n + l2].abs()),
                    "entry ({k},{l2})"
                );
            }
        }
    }

    #[test]
    fn gram_matches_brute_force() {
        let p = 5;
        let v = random_hermitian_pd(p, 3);
        let basis = constraint_basis(p);
        let gram = constraint_gram(&v, &basis);
        let n = basis.len();
        for (k, bk) in basis.iter().enumerate() {
            let sk = dense_basis(bk, p);
            for (l, bl) in basis.iter().enumerate() {
                let sl = dense_basis(bl, p);
                let prod = sk.mul(&v).mul(&sl).mul(&v);
                let expected = prod.trace().re;
                let got = gram[k * n + l];
                assert!(
                    (got - expected).abs() < 1e-10 * (1.0 + expected.abs()),
                    "entry ({k},{l}): {got} vs {expected}"
                );
            }
        }
        for k in 0..n {
            for l in 0..n {
                assert!((gram[k * n + l] - gram[l * n + k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn basis_apply_matches_dense_multiplication() {
        let p = 6;
        let basis = constraint_basis(p);
        let v: Vec<Complex64> = (0..p)
            .map(|i| c64((i as f64).sin(), (i as f64 * 0.77).cos()))
            .collect();
        for bk in &basis {
            let fast = bk.apply(&v);
            let slow = dense_basis(bk, p).mul_vec(&v);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn basis_value_matches_dense_trace() {
        let p = 5;
        let basis = constraint_basis(p);
        let x = random_hermitian_pd(p, 9);
        for bk in &basis {
            let fast = bk.value(&x);
            let slow = dense_basis(bk, p).mul(&x).trace().re;
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }

    #[test]
    fn constraint_values_identify_diagonal_sums() {
        let p = 4;
        let basis = constraint_basis(p);
        let mut h = ComplexMatrix::zeros(p, p);
        for i in 0..p {
            h[(i, i)] = c64(0.25, 0.0);
        }
        h[(0, 2)] = c64(0.3, -0.1);
        h[(2, 0)] = c64(0.3, 0.1);
        // k = 0 reads tr(H)
        assert!((basis[0].value(&h) - 1.0).abs() < 1e-14);
        // offset-2 real part reads 2 Re sum = 0.6
        let k_re2 = 1 + 2;
        assert_eq!(basis[k_re2].offset, 2);
        assert!((basis[k_re2].value(&h) - 0.6).abs() < 1e-14);
        // offset-2 imaginary part reads 2 Im sum = -0.2
        assert!((basis[k_re2 + 1].value(&h) - (-0.2)).abs() < 1e-14);
    }

    #[test]
    fn schur_block_matches_block_inverse() {
        let p = 6;
        let h_mat = random_hermitian_pd(p, 21);
        let hvec: Vec<Complex64> = (0..p)
            .map(|i| c64((i as f64 * 0.31).sin() * 0.2, (i as f64 * 0.17).cos() * 0.2))
            .collect();
        let v = schur_block(&h_mat, &hvec);
        // W11 = inverse of V must equal the leading block of B^{-1}
        let b = assemble_block(&h_mat, &hvec);
        let w = cholesky_factor_only(&b).unwrap().inverse();
        let w11_direct = cholesky_factor_only(&v).unwrap().inverse();
        for i in 0..p {
            for j in 0..p {
                assert!(
                    (w[(i, j)] - w11_direct[(i, j)]).norm() < 1e-9 * (1.0 + w[(i, j)].norm()),
                    "entry ({i},{j})"
                );
            }
        }
        // det B = det V
        let logdet_b = cholesky_factor_only(&b).unwrap().log_det();
        let logdet_v = cholesky_factor_only(&v).unwrap().log_det();
        assert!((logdet_b - logdet_v).abs() < 1e-9 * (1.0 + logdet_b.abs()));
    }

}
