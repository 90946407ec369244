//! Discrete Fourier transform for arbitrary lengths.
//!
//! Mixed-radix Cooley-Tukey recursion with a direct O(P^2) evaluation for
//! prime lengths. Sizes here are at most a few thousand, so the prime
//! fallback is never a bottleneck.

use num_complex::Complex64;

/// Unscaled forward DFT: `X[k] = sum_l x[l] exp(-j 2 pi l k / P)`.
///
/// The caller applies any 1/P scaling and index remapping it needs.
pub fn dft(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    assert!(n >= 1, "dft requires at least one sample");
    let table = root_table(n);
    fft_rec(samples, 0, 1, n, &table, n)
}

/// `exp(-j 2 pi k / n)` for k = 0..n.
fn root_table(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect()
}

fn smallest_prime_factor(n: usize) -> usize {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut p = 3;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return p;
        }
        p += 2;
    }
    n
}

/// DFT of the `m` samples `x[offset], x[offset+stride], ...` using the
/// length-`n` root table (`m` divides `n`).
fn fft_rec(
    x: &[Complex64],
    offset: usize,
    stride: usize,
    m: usize,
    table: &[Complex64],
    n: usize,
) -> Vec<Complex64> {
    if m == 1 {
        return vec![x[offset]];
    }
    let step = n / m;
    let p = smallest_prime_factor(m);
    if p == m {
        // prime length: direct summation
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..m {
                acc += x[offset + l * stride] * table[(l * k) % m * step];
            }
            *o = acc;
        }
        return out;
    }
    let q = m / p;
    let subs: Vec<Vec<Complex64>> = (0..p)
        .map(|r| fft_rec(x, offset + r * stride, stride * p, q, table, n))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, sub) in subs.iter().enumerate() {
            acc += table[(r * k) % m * step] * sub[k % q];
        }
        *o = acc;
    }
    out
}
