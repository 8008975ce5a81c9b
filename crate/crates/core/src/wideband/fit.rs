//! Laplace-kernel fit of one antenna's coefficients across subcarriers.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{CalError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    pub a: Complex64,
    pub gamma: f64,
    /// Cycles per subcarrier.
    pub xi: f64,
    /// `Â exp((γ̂ + j2πξ̂) k)` for every `k`.
    pub fitted: Vec<Complex64>,
}

fn kernel(gamma: f64, xi: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::new(gamma * k as f64, TAU * xi * k as f64).exp())
        .collect()
}

/// Least-squares amplitude for a fixed kernel.
fn solve_amplitude(row: &[Complex64], kappa: &[Complex64]) -> Complex64 {
    let num: Complex64 = row.iter().zip(kappa).map(|(c, k)| c * k.conj()).sum();
    let den: f64 = kappa.iter().map(|k| k.norm_sqr()).sum();
    num / den
}

/// Slope of the ordinary least-squares line through `(k, v_k)`.
fn ls_slope(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let kbar = (n - 1.0) / 2.0;
    let vbar = v.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, y) in v.iter().enumerate() {
        let dk = k as f64 - kbar;
        sxy += dk * (y - vbar);
        sxx += dk * dk;
    }
    sxy / sxx
}

/// Phase with successive differences kept in `(−π, π]`. A step of (almost)
/// exactly ±π cannot be attributed to either direction and is an error.
pub(crate) fn unwrap_phase(row: &[Complex64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(row.len());
    let mut prev = row[0].arg();
    out.push(prev);
    for (k, w) in row.windows(2).enumerate() {
        let mut d = (w[1] * w[0].conj()).arg();
        if d <= -PI {
            d += TAU;
        }
        if d.abs() > PI * (1.0 - 1e-9) {
            return Err(CalError::Unwrap(format!(
                "phase step of pi between subcarriers {k} and {}",
                k + 1
            )));
        }
        prev += d;
        out.push(prev);
    }
    Ok(out)
}

/// Fits `Â exp((γ̂ + j2πξ̂) k)`.
///
/// Starts from log-magnitude and unwrapped-phase regressions, then takes one
/// Gauss-Newton step on the complex residual jointly in `(A, γ, ξ)` and
/// re-solves `Â` for the updated kernel.
pub fn wideband_fit(row: &[Complex64]) -> Result<KernelFit> {
    let n = row.len();
    if n < 3 {
        return Err(CalError::invalid(format!("need at least 3 subcarriers, got {n}")));
    }
    if let Some(k) = row.iter().position(|v| !(v.norm() > 0.0) || !v.is_finite()) {
        return Err(CalError::invalid(format!("sample {k} is zero or non-finite")));
    }
    let logmag: Vec<f64> = row.iter().map(|v| v.norm().ln()).collect();
    let mut gamma = ls_slope(&logmag);
    let mut xi = ls_slope(&unwrap_phase(row)?) / TAU;
    if !(xi.abs() < 0.5) {
        return Err(CalError::Unwrap(format!(
            "phase slope {xi} cycles per subcarrier aliases"
        )));
    }
    let kappa = kernel(gamma, xi, n);
    let a = solve_amplitude(row, &kappa);

    // Gauss-Newton on r_k = C_k − A κ_k over (Re A, Im A, γ, ξ).
    let mut jtj = Matrix4::<f64>::zeros();
    let mut jtr = Vector4::<f64>::zeros();
    for (k, (c, kap)) in row.iter().zip(&kappa).enumerate() {
        let model = a * kap;
        let r = c - model;
        let kf = k as f64;
        let cols = [
            *kap,
            Complex64::i() * kap,
            kf * model,
            Complex64::new(0.0, TAU * kf) * model,
        ];
        for i in 0..4 {
            jtr[i] += (cols[i].conj() * r).re;
            for j in 0..4 {
                jtj[(i, j)] += (cols[i].conj() * cols[j]).re;
            }
        }
    }
    if let Some(step) = jtj.lu().solve(&jtr) {
        if step.iter().all(|s| s.is_finite()) {
            gamma += step[2];
            xi += step[3];
        }
    }
    if !(xi.abs() < 0.5) {
        return Err(CalError::Unwrap(format!(
            "refined phase slope {xi} cycles per subcarrier aliases"
        )));
    }
    let kappa = kernel(gamma, xi, n);
    let a = solve_amplitude(row, &kappa);
    let fitted = kappa.iter().map(|k| a * k).collect();
    Ok(KernelFit { a, gamma, xi, fitted })
}
