use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Module, Result};

/// In-place iterative radix-2 decimation-in-time FFT.
///
/// `buf.len()` must be a power of two.
pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n < 2 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let step = -2.0 * PI / len as f64;
        let half = len / 2;
        let twiddles: Vec<Complex64> = (0..half)
            .map(|k| Complex64::from_polar(1.0, step * k as f64))
            .collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = buf[start + k];
                let b = buf[start + k + half] * twiddles[k];
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Spectrum of a real signal: bins `0..=n/2` of `Σ_t x[t]·e^(−2πi·bt/n)`.
///
/// `x` is zero-padded or truncated to `n`, which must be a power of two ≥ 2.
pub fn fft_real(x: &[f64], n: usize) -> Result<Vec<Complex64>> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::invalid(
            Module::Dsp,
            "fft_real",
            format!("n={n}"),
            "transform size must be a power of two >= 2",
        ));
    }
    let mut buf: Vec<Complex64> = (0..n)
        .map(|t| Complex64::new(x.get(t).copied().unwrap_or(0.0), 0.0))
        .collect();
    fft_in_place(&mut buf);
    buf.truncate(n / 2 + 1);
    Ok(buf)
}

/// Power spectrum `|X[b]|²` for bins `0..=n/2`.
pub(crate) fn power_spectrum(x: &[f64], n: usize) -> Vec<f64> {
    fft_real(x, n)
        .expect("power-of-two size")
        .into_iter()
        .map(|c| c.norm_sqr())
        .collect()
}

/// Linear (non-circular) autocorrelation `r[τ] = Σ_t x[t]·x[t+τ]` for `τ < x.len()`.
pub(crate) fn autocorrelation(x: &[f64]) -> Vec<f64> {
    let n = (2 * x.len()).next_power_of_two().max(2);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|t| Complex64::new(x.get(t).copied().unwrap_or(0.0), 0.0))
        .collect();
    fft_in_place(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    // inverse via conjugation: ifft(X) = conj(fft(conj(X))) / n
    for c in buf.iter_mut() {
        *c = c.conj();
    }
    fft_in_place(&mut buf);
    buf.iter().take(x.len()).map(|c| c.re / n as f64).collect()
}
