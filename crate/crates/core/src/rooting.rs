//! DOA extraction by rooting the nonnegative polynomial `p(z) = 1 - |b(z)|^2`.
//!
//! The dual polynomial `b(z) = sum_{k=-N}^{N} h_k z^k` has magnitude one
//! exactly at source angles and strictly less elsewhere, so the sources are
//! the unit-circle zeros of `p`. The Laurent coefficients of `|b|^2` are the
//! autocorrelation of `h`; multiplying `p` by `z^(P-1)` clears the negative
//! powers and leaves an ordinary degree-`2(P-1)` polynomial whose unit-circle
//! roots coincide with those of `p`. Roots come from Aberth-Ehrlich
//! simultaneous iteration with deterministic initialization; on the circle
//! each zero of `p` is a double root which finite precision splits into a
//! conjugate-reciprocal pair at the same angle, so kept roots are clustered
//! by angle and each cluster reports its circular mean.

use crate::geometry::{wrap_angle, wraparound_separation};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RootingError {
    #[error("polynomial is degenerate: |b(z)| is 1 on the whole circle")]
    Degenerate,
    #[error("root iteration did not converge after {sweeps} sweeps (worst residual {worst_residual:.3e})")]
    NoConvergence { sweeps: usize, worst_residual: f64 },
    #[error("dual polynomial must have odd length, got {0}")]
    EvenLength(usize),
}

/// Coefficients of the dual trigonometric polynomial, ordered k = -N..N.
#[derive(Clone, Debug)]
pub struct DualPolynomial {
    h: Vec<Complex64>,
}

impl DualPolynomial {
    pub fn new(h: Vec<Complex64>) -> Result<Self, RootingError> {
        if h.len().is_multiple_of(2) {
            return Err(RootingError::EvenLength(h.len()));
        }
        Ok(Self { h })
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Half-degree N, with P = 2N + 1.
    pub fn half_degree(&self) -> usize {
        (self.h.len() - 1) / 2
    }

    /// Evaluates `b(e^{j theta})`.
    pub fn eval_on_circle(&self, theta: f64) -> Complex64 {
        let n = self.half_degree() as isize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, k) in (-n..=n).enumerate() {
            acc += self.h[i] * Complex64::from_polar(1.0, k as f64 * theta);
        }
        acc
    }
}

/// Diagnostics attached to a [`DoaEstimate`].
#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    /// Certified relative duality gap of the SDP solve (filled by pipeline).
    pub duality_gap: f64,
    /// Number of near-circle roots merged into each reported angle.
    pub cluster_sizes: Vec<usize>,
    /// SDP objective value (filled by pipeline).
    pub objective: f64,
    /// Newton iterations spent by the solver (filled by pipeline).
    pub solver_iterations: usize,
    /// Residual of the least-squares amplitude fit (filled by pipeline).
    pub amplitude_residual: f64,
}

/// Estimated arrival angles with amplitudes and per-angle root diagnostics.
#[derive(Clone, Debug, Default)]
pub struct DoaEstimate {
    /// Angles in radians, ascending, in (-pi, pi].
    pub angles: Vec<f64>,
    /// Complex amplitudes, one per angle (filled by pipeline).
    pub amplitudes: Vec<Complex64>,
    /// Distance from the unit circle of the closest root in each cluster.
    pub root_distances: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl DoaEstimate {
    pub fn no_sources(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Autocorrelation `r_k = sum_j h_j conj(h_{j-k})` for k = -(P-1)..(P-1).
///
/// Hermitian symmetry `r_{-k} = conj(r_k)` holds exactly by construction:
/// each negative-lag entry is stored as the conjugate of its positive twin.
pub fn autocorrelation(h: &DualPolynomial) -> Vec<Complex64> {
    let p = h.len();
    let coeffs = h.coefficients();
    let mut r = vec![Complex64::new(0.0, 0.0); 2 * p - 1];
    for k in 0..p {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in k..p {
            acc += coeffs[j] * coeffs[j - k].conj();
        }
        r[p - 1 + k] = acc;
        r[p - 1 - k] = acc.conj();
    }
    // center lag is real by construction
    r[p - 1] = Complex64::new(r[p - 1].re, 0.0);
    r
}

/// Coefficients of `q(z) = z^(P-1) (1 - sum_k r_k z^k)`, degree `2(P-1)`,
/// whose unit-circle roots are exactly those of `p(z) = 1 - |b(z)|^2`.
pub fn nonneg_poly(h: &DualPolynomial) -> Vec<Complex64> {
    let p = h.len();
    let r = autocorrelation(h);
    let mut q: Vec<Complex64> = r.iter().map(|v| -v).collect();
    q[p - 1] += Complex64::new(1.0, 0.0);
    q
}

/// Evaluates `p(e^{j theta}) = 1 - |b(e^{j theta})|^2` from the
/// autocorrelation sequence (index k = -(P-1)..(P-1)).
pub fn eval_nonneg_on_circle(r: &[Complex64], theta: f64) -> f64 {
    let half = (r.len() - 1) / 2;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, v) in r.iter().enumerate() {
        let k = i as isize - half as isize;
        acc += v * Complex64::from_polar(1.0, k as f64 * theta);
    }
    1.0 - acc.re
}

/// Relative magnitude below which leading/trailing coefficients are trimmed.
const TRIM_TOL: f64 = 1e-14;
/// Degenerate-input threshold on the coefficient norm of `q`.
const DEGENERATE_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 500;

/// All complex roots of the polynomial `q(z) = sum_j q[j] z^j` by
/// Aberth-Ehrlich simultaneous iteration.
///
/// Leading and trailing coefficients smaller than `1e-14` times the largest
/// are trimmed first; trailing trims discard exact roots at the origin,
/// which can never sit near the unit circle. Starting points are placed on
/// the Newton-polygon radii (the convex hull of coefficient magnitudes), so
/// badly graded polynomials start each root near its true magnitude, and
/// evaluation switches to the reversed polynomial outside the unit disk so
/// nothing overflows.
pub fn roots(q: &[Complex64]) -> Result<Vec<Complex64>, RootingError> {
    let max_mag = q.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if max_mag <= DEGENERATE_TOL {
        return Err(RootingError::Degenerate);
    }
    let tol = TRIM_TOL * max_mag;
    let first = q.iter().position(|c| c.norm() > tol).unwrap();
    let last = q.iter().rposition(|c| c.norm() > tol).unwrap();
    let coeffs = &q[first..=last];
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Ok(Vec::new());
    }
    let reversed: Vec<Complex64> = coeffs.iter().rev().cloned().collect();

    // Newton's polygon: radii from the upper convex hull of (j, ln|q_j|)
    let mut z = newton_polygon_start(coeffs);

    // backward-stable Newton ratio q/q' evaluated inside the unit disk on
    // q directly and outside through the reversed polynomial at w = 1/z:
    //   q(z) = z^d q_rev(w),  q(z)/q'(z) = z q_rev(w) / (d q_rev(w) - w q_rev'(w))
    let eval_ratio = |x: Complex64| -> (Complex64, bool) {
        let horner = |cs: &[Complex64], v: Complex64| {
            let mut val = Complex64::new(0.0, 0.0);
            let mut der = Complex64::new(0.0, 0.0);
            let mut scale = 0.0f64;
            let av = v.norm();
            for c in cs.iter().rev() {
                der = der * v + val;
                val = val * v + c;
                scale = scale * av + c.norm();
            }
            (val, der, scale)
        };
        if x.norm() <= 1.0 {
            let (val, der, scale) = horner(coeffs, x);
            let done = val.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE);
            let ratio = if der.norm() > 0.0 {
                val / der
            } else {
                Complex64::new(1e-8, 1e-8)
            };
            (ratio, done)
        } else {
            let w = x.inv();
            let (val, der, scale) = horner(&reversed, w);
            let done = val.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE);
            let denom = val * degree as f64 - w * der;
            let ratio = if denom.norm() > 0.0 {
                x * (val / denom)
            } else {
                Complex64::new(1e-8, 1e-8)
            };
            (ratio, done)
        }
    };

    let mut converged = vec![false; degree];
    for _sweep in 0..MAX_SWEEPS {
        let mut all_done = true;
        for i in 0..degree {
            if converged[i] {
                continue;
            }
            let (newton, done) = eval_ratio(z[i]);
            if done {
                converged[i] = true;
                continue;
            }
            let mut repel = Complex64::new(0.0, 0.0);
            for (k, zk) in z.iter().enumerate() {
                if k != i {
                    let diff = z[i] - zk;
                    if diff.norm() > 0.0 {
                        repel += diff.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repel;
            let step = if denom.norm() > 1e-300 {
                newton / denom
            } else {
                newton
            };
            let candidate = z[i] - step;
            if candidate.re.is_finite() && candidate.im.is_finite() {
                z[i] = candidate;
            } else {
                // deterministic restart near the unit circle
                z[i] = Complex64::from_polar(
                    1.0 + 0.01 * (i as f64 + 1.0),
                    2.0 * std::f64::consts::PI * i as f64 / degree as f64 + 0.997,
                );
                all_done = false;
                continue;
            }
            if step.norm() <= 1e-14 * (1.0 + z[i].norm()) {
                converged[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }

    // verify the backward error of every root in the overflow-safe form
    let mut worst = 0.0f64;
    for zi in &z {
        if !(zi.re.is_finite() && zi.im.is_finite()) {
            return Err(RootingError::NoConvergence {
                sweeps: MAX_SWEEPS,
                worst_residual: f64::INFINITY,
            });
        }
        let (cs, x): (&[Complex64], Complex64) = if zi.norm() <= 1.0 {
            (coeffs, *zi)
        } else {
            (&reversed, zi.inv())
        };
        let mut val = Complex64::new(0.0, 0.0);
        let mut scale = 0.0f64;
        let ax = x.norm();
        for c in cs.iter().rev() {
            val = val * x + c;
            scale = scale * ax + c.norm();
        }
        let backward = val.norm() / scale.max(f64::MIN_POSITIVE);
        worst = worst.max(backward);
    }
    if !(worst <= 1e-8) {
        return Err(RootingError::NoConvergence {
            sweeps: MAX_SWEEPS,
            worst_residual: worst,
        });
    }
    Ok(z)
}

/// Deterministic Aberth starting points from the Newton polygon: for each
/// upper-hull segment of `(j, ln |q_j|)` from `(j1, v1)` to `(j2, v2)`,
/// place `j2 - j1` points on the circle of radius `exp((v1 - v2)/(j2 - j1))`
/// with an irrational angular offset.
fn newton_polygon_start(coeffs: &[Complex64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    let pts: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(j, c)| (j, c.norm().ln()))
        .collect();
    // upper convex hull, left to right (first and last points are always
    // vertices because trimming made them nonzero)
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1)
                - (p.0 as f64 - a.0 as f64) * (b.1 - a.1);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut z = Vec::with_capacity(degree);
    for seg in hull.windows(2) {
        let (j1, v1) = seg[0];
        let (j2, v2) = seg[1];
        let count = j2 - j1;
        let radius = ((v1 - v2) / count as f64).exp().max(1e-300);
        for i in 0..count {
            let ang = 2.0 * std::f64::consts::PI * (j1 + i) as f64 / degree as f64 + 0.376;
            z.push(Complex64::from_polar(radius, ang));
        }
    }
    debug_assert_eq!(z.len(), degree);
    z
}

/// Default radial tolerance for selecting unit-circle roots.
pub const UNIT_CIRCLE_TOL: f64 = 0.02;
/// Default angular clustering width in degrees for split double roots.
pub const CLUSTER_DEG: f64 = 0.05;

/// Keeps roots within `tol` of the unit circle, clusters their angles within
/// `cluster_deg`, and reports one angle (circular mean) per cluster.
/// An empty result means no sources were detected; it is not an error.
pub fn extract_doas(q_roots: &[Complex64], tol: f64, cluster_deg: f64) -> DoaEstimate {
    let mut kept: Vec<(f64, f64)> = q_roots
        .iter()
        .filter_map(|z| {
            let dist = (z.norm() - 1.0).abs();
            (dist <= tol).then(|| (wrap_angle(z.arg()), dist))
        })
        .collect();
    if kept.is_empty() {
        return DoaEstimate::default();
    }
    kept.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let width = cluster_deg.to_radians();
    let mut clusters: Vec<Vec<(f64, f64)>> = Vec::new();
    for item in kept {
        match clusters.last_mut() {
            Some(cluster)
                if wraparound_separation(cluster.last().unwrap().0, item.0) <= width =>
            {
                cluster.push(item)
            }
            _ => clusters.push(vec![item]),
        }
    }
    // the sweep is linear in angle; the first and last cluster may meet
    // across the -pi/pi seam
    if clusters.len() > 1 {
        let first_angle = clusters.first().unwrap().first().unwrap().0;
        let last_angle = clusters.last().unwrap().last().unwrap().0;
        if wraparound_separation(first_angle, last_angle) <= width {
            let tail = clusters.pop().unwrap();
            clusters.first_mut().unwrap().extend(tail);
        }
    }

    let mut entries: Vec<(f64, f64, usize)> = clusters
        .iter()
        .map(|cluster| {
            let (sx, sy) = cluster
                .iter()
                .fold((0.0, 0.0), |(sx, sy), &(a, _)| (sx + a.cos(), sy + a.sin()));
            let mean = wrap_angle(sy.atan2(sx));
            let best = cluster
                .iter()
                .map(|&(_, d)| d)
                .fold(f64::INFINITY, f64::min);
            (mean, best, cluster.len())
        })
        .collect();
    entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    DoaEstimate {
        angles: entries.iter().map(|e| e.0).collect(),
        amplitudes: Vec::new(),
        root_distances: entries.iter().map(|e| e.1).collect(),
        diagnostics: Diagnostics {
            cluster_sizes: entries.iter().map(|e| e.2).collect(),
            ..Diagnostics::default()
        },
    }
}
