//! Fourier-series representation of the conjugate array manifold.
//!
//! Each conjugate sensor response `a*_m(theta)` is 2-pi periodic and
//! effectively band limited, so it is captured by a truncated Fourier series
//! with coefficients computed from a P-point DFT of uniform samples:
//!
//! ```text
//! alpha_m[k] = (1/P) sum_l a*_m(l 2pi/P) exp(-j 2pi l k / P),   k = -N..N
//! ```
//!
//! Stacking the coefficient vectors of all sensors column-wise gives the
//! P x M matrix `G^H` that maps a dual vector `c` to the coefficients of a
//! degree-N trigonometric polynomial approximating `S(theta)^H c`.
//!
//! How large P must be depends only on the normalized distance of a sensor
//! from the reference point; `min_p` scans the coefficient magnitudes with an
//! oversized DFT and returns the smallest odd P whose discarded tail sits
//! below a dB threshold `gamma` relative to the peak.

use crate::geometry::{steering_entry, ArrayGeometry};
use crate::numkit::{dft, ComplexMatrix};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("P must be odd so k spans a symmetric range, got {0}")]
    EvenP(usize),
    #[error("P must be at least 3, got {0}")]
    TooSmallP(usize),
}

/// Fourier-series basis of the conjugate manifold: `G^H` is P x M with
/// column m holding `alpha_m[k]` for k = -N..N.
#[derive(Clone, Debug)]
pub struct ManifoldBasis {
    g_h: ComplexMatrix,
    p: usize,
    n: usize,
    gamma_db: f64,
    /// Smallest odd P the sizing rule recommends for the farthest sensor.
    recommended_p: usize,
}

impl ManifoldBasis {
    pub fn g_h(&self) -> &ComplexMatrix {
        &self.g_h
    }

    /// Number of retained Fourier coefficients (odd).
    pub fn p(&self) -> usize {
        self.p
    }

    /// Half-bandwidth: P = 2N + 1.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma_db(&self) -> f64 {
        self.gamma_db
    }

    pub fn sensors(&self) -> usize {
        self.g_h.cols()
    }

    pub fn recommended_p(&self) -> usize {
        self.recommended_p
    }

    /// True when the basis was built with fewer coefficients than the sizing
    /// rule recommends for this geometry; callers may warn but not fail.
    pub fn is_undersized(&self) -> bool {
        self.p < self.recommended_p
    }

    /// Maps a dual vector to dual-polynomial coefficients: `h = G^H c`.
    pub fn dual_coefficients(&self, c: &[Complex64]) -> Vec<Complex64> {
        self.g_h.mul_vec(c)
    }

    /// Evaluates the basis reconstruction of `a*_m` at angle theta.
    pub fn reconstruct(&self, m: usize, theta: f64) -> Complex64 {
        let n = self.n as isize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, k) in (-n..=n).enumerate() {
            acc += self.g_h[(i, m)] * Complex64::from_polar(1.0, k as f64 * theta);
        }
        acc
    }
}

/// Fourier-series coefficients of `a*_m(theta)` for one sensor, ordered
/// k = -N..N. `P` must be odd and at least 3.
pub fn fourier_coeffs(
    geom: &ArrayGeometry,
    m: usize,
    p: usize,
) -> Result<Vec<Complex64>, ManifoldError> {
    let (radius, angle) = geom.normalized_polar(m);
    fourier_coeffs_polar(radius, angle, p)
}

/// Same as [`fourier_coeffs`] but from normalized polar coordinates directly.
pub fn fourier_coeffs_polar(
    radius_over_lambda: f64,
    sensor_angle: f64,
    p: usize,
) -> Result<Vec<Complex64>, ManifoldError> {
    if p.is_multiple_of(2) {
        return Err(ManifoldError::EvenP(p));
    }
    if p < 3 {
        return Err(ManifoldError::TooSmallP(p));
    }
    let n = (p - 1) / 2;
    if radius_over_lambda == 0.0 {
        // constant manifold: exact unit impulse at k = 0
        let mut out = vec![Complex64::new(0.0, 0.0); p];
        out[n] = Complex64::new(1.0, 0.0);
        return Ok(out);
    }
    let samples: Vec<Complex64> = (0..p)
        .map(|l| {
            let theta = 2.0 * PI * l as f64 / p as f64;
            steering_entry(radius_over_lambda, sensor_angle, theta).conj()
        })
        .collect();
    let spectrum = dft(&samples);
    let scale = 1.0 / p as f64;
    // circular remap so k = -N..-1 come from indices P-N..P-1
    let mut out = Vec::with_capacity(p);
    for k in -(n as isize)..=(n as isize) {
        let idx = k.rem_euclid(p as isize) as usize;
        out.push(spectrum[idx] * scale);
    }
    Ok(out)
}

/// Coefficients of the closed-form linear sizing rule at gamma = -160 dB
/// for normalized radii of two and above.
pub const MIN_P_RULE_SLOPE: f64 = 15.9;
pub const MIN_P_RULE_INTERCEPT: f64 = 27.03;

/// Smallest odd P for a sensor at the given normalized radius so the
/// discarded squared coefficient magnitudes stay `gamma_db` below the peak.
///
/// At gamma = -160 dB and radius >= 2 this is the closed-form linear rule;
/// elsewhere the tail is measured directly with a 4x oversized DFT.
pub fn min_p(max_radius_over_lambda: f64, gamma_db: f64) -> usize {
    assert!(
        max_radius_over_lambda >= 0.0,
        "radius must be nonnegative"
    );
    if gamma_db == -160.0 && max_radius_over_lambda >= 2.0 {
        let estimate = MIN_P_RULE_SLOPE * max_radius_over_lambda + MIN_P_RULE_INTERCEPT;
        return next_odd_at_least(estimate);
    }
    min_p_scanned(max_radius_over_lambda, gamma_db)
}

/// Tail scan behind [`min_p`], always measuring rather than using the rule.
pub fn min_p_scanned(radius_over_lambda: f64, gamma_db: f64) -> usize {
    if radius_over_lambda == 0.0 {
        return 3;
    }
    let mags = coefficient_magnitudes(radius_over_lambda);
    let peak = mags.iter().cloned().fold(0.0f64, f64::max);
    // gamma thresholds squared magnitudes, so amplitudes scale by gamma/20
    let amp_threshold = peak * 10f64.powf(gamma_db / 20.0);
    let mut n_min = 0usize;
    for (k, &m) in mags.iter().enumerate() {
        if m >= amp_threshold {
            n_min = k;
        }
    }
    (2 * n_min + 1).max(3)
}

/// |alpha[k]| for k = 0..K measured with a 4x oversized DFT; the magnitude is
/// even in k, so nonnegative k suffice.
fn coefficient_magnitudes(radius_over_lambda: f64) -> Vec<f64> {
    let x = 2.0 * PI * radius_over_lambda;
    // generous half-bandwidth bound: the coefficient tail decays super-
    // exponentially beyond |k| ~ x, so x plus a wide margin is safe for any
    // gamma down to -200 dB
    let n_upper = (2.0 * x).ceil() as usize + 80;
    let p_probe = 2 * n_upper + 1;
    let p_big = next_odd_at_least(4.0 * p_probe as f64);
    let samples: Vec<Complex64> = (0..p_big)
        .map(|l| {
            let theta = 2.0 * PI * l as f64 / p_big as f64;
            steering_entry(radius_over_lambda, 0.0, theta).conj()
        })
        .collect();
    let spectrum = dft(&samples);
    let scale = 1.0 / p_big as f64;
    (0..=n_upper).map(|k| spectrum[k].norm() * scale).collect()
}

fn next_odd_at_least(x: f64) -> usize {
    let mut p = x.ceil() as usize;
    if p.is_multiple_of(2) {
        p += 1;
    }
    p.max(3)
}

/// Assembles the P x M coefficient matrix `G^H` for a geometry.
///
/// If `p` is below what the sizing rule recommends for the farthest sensor
/// the basis is still built; the caller can inspect
/// [`ManifoldBasis::is_undersized`] and warn.
pub fn build_basis(
    geom: &ArrayGeometry,
    p: usize,
    gamma_db: f64,
) -> Result<ManifoldBasis, ManifoldError> {
    let m = geom.sensors();
    let mut g_h = ComplexMatrix::zeros(p, m);
    for col in 0..m {
        let coeffs = fourier_coeffs(geom, col, p)?;
        for (row, v) in coeffs.into_iter().enumerate() {
            g_h[(row, col)] = v;
        }
    }
    let recommended_p = min_p(geom.farthest_radius_over_lambda(), gamma_db);
    Ok(ManifoldBasis {
        g_h,
        p,
        n: (p - 1) / 2,
        gamma_db,
        recommended_p,
    })
}

/// One row of the bandwidth study: the scanned minimum odd P for a
/// (radius, gamma) pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandwidthRow {
    pub radius_over_lambda: f64,
    pub gamma_db: f64,
    pub min_p: usize,
}

/// Scanned minimum P over a grid of radii and gamma thresholds.
pub fn bandwidth_profile(radii: &[f64], gamma_db_list: &[f64]) -> Vec<BandwidthRow> {
    let mut rows = Vec::with_capacity(radii.len() * gamma_db_list.len());
    for &gamma_db in gamma_db_list {
        for &radius in radii {
            rows.push(BandwidthRow {
                radius_over_lambda: radius,
                gamma_db,
                min_p: min_p_scanned(radius, gamma_db),
            });
        }
    }
    rows
}

/// Least-squares line fit `min_p ~ slope * radius + intercept` over rows with
/// radius >= 2 (the regime where the linear rule applies). Returns `None`
/// with fewer than two usable points.
pub fn fit_min_p_line(rows: &[BandwidthRow]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.radius_over_lambda >= 2.0)
        .map(|r| (r.radius_over_lambda, r.min_p as f64))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Some((slope, intercept))
}
