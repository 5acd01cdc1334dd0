//! Least-squares fits: straight lines and single sinusoids.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::spectral;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residual variance.
    pub slope_stderr: f64,
    pub residual_rms: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len().min(y.len());
    if n < 3 {
        return Err(Error::TooFewPoints { need: 3, got: n });
    }
    let nf = n as f64;
    // Shifting by y[0] keeps constant data exactly constant (zero slope, zero residual).
    let y0 = y[0];
    let y: Vec<f64> = y[..n].iter().map(|v| v - y0).collect();
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x[..n].iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::config("linear fit needs at least two distinct x values"));
    }
    let sxy: f64 = x[..n].iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x[..n].iter().zip(&y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Ok(LinearFit {
        slope,
        intercept: intercept + y0,
        slope_stderr: (ssr / (nf - 2.0) / sxx).sqrt(),
        residual_rms: (ssr / nf).sqrt(),
    })
}

/// `y(t) = a cos(omega t) + b sin(omega t) + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    /// rad/us.
    pub omega: f64,
    pub a: f64,
    pub b: f64,
    pub offset: f64,
    pub residual_rms: f64,
}

impl SinusoidFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.a * (self.omega * t).cos() + self.b * (self.omega * t).sin() + self.offset
    }

    /// `dy/dt` at `t = 0`.
    pub fn initial_slope(&self) -> f64 {
        self.b * self.omega
    }
}

/// Three-parameter fit at fixed `omega`.
fn fit_at(t: &[f64], y: &[f64], omega: f64) -> SinusoidFit {
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let row = Vector3::new((omega * ti).cos(), (omega * ti).sin(), 1.0);
        ata += row * row.transpose();
        aty += row * yi;
    }
    let p = ata.try_inverse().map(|inv| inv * aty).unwrap_or_else(|| {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        Vector3::new(0.0, 0.0, mean)
    });
    let mut fit = SinusoidFit { omega, a: p[0], b: p[1], offset: p[2], residual_rms: 0.0 };
    let ssr: f64 = t.iter().zip(y).map(|(&ti, &yi)| (yi - fit.eval(ti)).powi(2)).sum();
    fit.residual_rms = (ssr / t.len() as f64).sqrt();
    fit
}

/// Fits a single sinusoid to uniformly sampled data. The frequency is located by a
/// residual scan up to three bins past the dominant Fourier component and refined by
/// golden-section search.
pub fn fit_sinusoid(t: &[f64], y: &[f64]) -> Result<SinusoidFit> {
    let n = t.len().min(y.len());
    if n < 4 {
        return Err(Error::TooFewPoints { need: 4, got: n });
    }
    let (t, y) = (&t[..n], &y[..n]);
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    let mean = y.iter().sum::<f64>() / n as f64;
    let centered: Vec<C64> = y.iter().map(|v| C64::new(v - mean, 0.0)).collect();
    let (freqs, mags) = spectral::windowed_spectrum(&centered, dt);
    // Real data: use the non-negative half, skipping DC.
    let (f0, _) = freqs
        .iter()
        .zip(&mags)
        .filter(|(f, _)| **f > 0.0)
        .fold((0.0, f64::NEG_INFINITY), |best, (&f, &m)| if m > best.1 { (f, m) } else { best });
    // Coarse scan up to a few bins past the peak, then golden-section refinement.
    let bin = 1.0 / (n as f64 * dt);
    let step = bin / 8.0;
    let cost = |w: f64| fit_at(t, y, w).residual_rms;
    let (mut best_f, mut best_c) = (f0, cost(TAU * f0));
    let mut f = step;
    while f <= f0 + 3.0 * bin {
        let c = cost(TAU * f);
        if c < best_c {
            (best_f, best_c) = (f, c);
        }
        f += step;
    }
    let (mut lo, mut hi) = (TAU * (best_f - step).max(0.0), TAU * (best_f + step));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut c1, mut c2) = (cost(x1), cost(x2));
    for _ in 0..80 {
        if c1 < c2 {
            hi = x2;
            x2 = x1;
            c2 = c1;
            x1 = hi - g * (hi - lo);
            c1 = cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            c1 = c2;
            x2 = lo + g * (hi - lo);
            c2 = cost(x2);
        }
    }
    Ok(fit_at(t, y, 0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..8).map(|k| 0.25 + 0.01 * k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.6 * v - 0.03).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 0.6).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
    }

    #[test]
    fn constant_is_flat() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[0.4, 0.4, 0.4]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.residual_rms, 0.0);
        assert_eq!(f.intercept, 0.4);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(linear_fit(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn recovers_sinusoid() {
        let t: Vec<f64> = (0..201).map(|k| k as f64 * 0.002).collect();
        let w = TAU * 10.0;
        let y: Vec<f64> = t.iter().map(|s| 0.3 * (w * s).cos() - 0.12 * (w * s).sin() + 0.5).collect();
        let f = fit_sinusoid(&t, &y).unwrap();
        assert!((f.omega - w).abs() < 1e-6 * w, "{}", f.omega);
        assert!((f.initial_slope() + 0.12 * w).abs() < 1e-6);
        assert!(f.residual_rms < 1e-9);
    }
}
