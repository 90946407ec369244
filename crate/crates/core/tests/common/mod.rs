//! Shared oracles for the integration suites. Everything here is
//! independent of the production code paths it checks.

#![allow(dead_code)]

use num_complex::Complex64;

/// Bessel functions of the first kind `J_0..J_kmax` at real `x >= 0`, by
/// Miller's backward recurrence with normalization
/// `J_0 + 2 J_2 + 2 J_4 + ... = 1`. Accurate to ~1e-13 for the argument
/// range used in these tests.
pub fn bessel_j_all(x: f64, kmax: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    let start = {
        let guess = kmax as f64 + 2.0 * ((kmax as f64).max(x)).sqrt() + 30.0;
        let mut s = guess as usize;
        if s % 2 == 1 {
            s += 1;
        }
        s
    };
    let mut out = vec![0.0; kmax + 1];
    let mut jp = 0.0f64;
    let mut j = 1e-300f64;
    let mut norm = 0.0f64;
    for k in (0..=start).rev() {
        let jm = 2.0 * (k as f64 + 1.0) / x * j - jp;
        jp = j;
        j = jm;
        if k <= kmax {
            out[k] = j;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if j.abs() > 1e250 {
            let scale = 1e-250;
            jp *= scale;
            j *= scale;
            norm *= scale;
            for v in out.iter_mut() {
                *v *= scale;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Exact Fourier-series coefficient of the conjugate response of a sensor
/// at normalized radius `rho` and polar angle `ang`:
/// `alpha_k = j^k J_k(2 pi rho) e^{-j k ang}` (with `J_{-k} = (-1)^k J_k`).
pub fn manifold_coefficient_oracle(_rho: f64, ang: f64, k: isize, bessel: &[f64]) -> Complex64 {
    let jk = if k >= 0 {
        bessel[k as usize]
    } else {
        let a = (-k) as usize;
        if a.is_multiple_of(2) {
            bessel[a]
        } else {
            -bessel[a]
        }
    };
    let i_pow = match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    i_pow * jk * Complex64::from_polar(1.0, -(k as f64) * ang)
}

pub fn max_wraparound_error_deg(estimated: &[f64], truth_deg: &[f64]) -> f64 {
    truth_deg
        .iter()
        .map(|t| {
            estimated
                .iter()
                .map(|e| {
                    let d = (e.to_degrees() - t).rem_euclid(360.0);
                    d.min(360.0 - d)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn bessel_matches_reference_values() {
        // J_0(1), J_1(1), J_5(10) to published precision
        let b1 = bessel_j_all(1.0, 5);
        assert!((b1[0] - 0.7651976865579666).abs() < 1e-12);
        assert!((b1[1] - 0.4400505857449335).abs() < 1e-12);
        let b10 = bessel_j_all(10.0, 10);
        assert!((b10[5] - (-0.2340615281867936)).abs() < 1e-11);
    }
}
