//! Windowed discrete Fourier spectra and peak picking.

use std::f64::consts::PI;

use rustfft::{FftDirection, FftPlanner};

use crate::C64;

/// Zero-padding factor applied before the transform.
pub const PAD_FACTOR: usize = 4;

/// Symmetric Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![1.0; n];
    }
    (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos()).collect()
}

/// Magnitude spectrum of complex samples taken every `dt_us`.
///
/// The kernel is `e^{+i 2 pi f t}`, so a component `e^{-i 2 pi f0 t}` peaks at `+f0`.
/// Returns frequencies (MHz, ascending) and magnitudes normalized by the window sum,
/// so an isolated unit-amplitude tone peaks at 1.
pub fn windowed_spectrum(samples: &[C64], dt_us: f64) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let m = n * PAD_FACTOR;
    let w = hann(n);
    let norm: f64 = w.iter().sum();
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for ((b, s), wk) in buf.iter_mut().zip(samples).zip(&w) {
        *b = s * wk;
    }
    FftPlanner::new().plan_fft(m, FftDirection::Inverse).process(&mut buf);
    let df = 1.0 / (m as f64 * dt_us);
    let half = m / 2;
    // Reorder to ascending frequency: indices m/2.. are negative.
    let order = (half..m).chain(0..half);
    let mut freqs = Vec::with_capacity(m);
    let mut mags = Vec::with_capacity(m);
    for k in order {
        let signed = if k >= half { k as f64 - m as f64 } else { k as f64 };
        freqs.push(signed * df);
        mags.push(buf[k].norm() / norm);
    }
    (freqs, mags)
}

/// Unpadded frequency resolution `1 / T`, MHz.
pub fn resolution_mhz(n_samples: usize, dt_us: f64) -> f64 {
    1.0 / (n_samples as f64 * dt_us)
}

/// Local maxima at or above `rel * max(mag)`, as frequencies.
pub fn find_peaks(freqs: &[f64], mags: &[f64], rel: f64) -> Vec<f64> {
    let top = mags.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return Vec::new();
    }
    let n = mags.len();
    (0..n)
        .filter(|&k| {
            let left = if k > 0 { mags[k - 1] } else { f64::NEG_INFINITY };
            let right = if k + 1 < n { mags[k + 1] } else { f64::NEG_INFINITY };
            mags[k] >= rel * top && mags[k] > left && mags[k] >= right
        })
        .map(|k| freqs[k])
        .collect()
}
