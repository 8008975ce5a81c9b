//! One-sample Kolmogorov-Smirnov test against a zero-mean Gaussian.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{CalError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// `sup |F_emp − F|`.
    pub d: f64,
    /// `c(α)/√n`.
    pub critical: f64,
    pub pass: bool,
}

/// Asymptotic `c(α) = sqrt(−ln(α/2)/2)`, 1.358 at `α = 0.05`.
pub fn ks_critical_value(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Tests `samples` against `N(0, s²)` with `s²` the unbiased sample
/// variance.
pub fn ks_gaussianity(samples: &[f64], alpha: f64) -> Result<KsResult> {
    let n = samples.len();
    if n < 50 {
        return Err(CalError::invalid(format!("need at least 50 samples, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CalError::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if !(var > 0.0) || !var.is_finite() {
        return Err(CalError::Degenerate("sample variance is zero".into()));
    }
    let dist = Normal::new(0.0, var.sqrt()).map_err(|e| CalError::Numerical(e.to_string()))?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    let critical = ks_critical_value(alpha) / nf.sqrt();
    Ok(KsResult {
        d,
        critical,
        pass: d <= critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn critical_value_at_five_percent() {
        assert!((ks_critical_value(0.05) - 1.358).abs() < 1e-3);
    }

    #[test]
    fn gaussian_samples_pass_at_nominal_rate() {
        let mut rng = stream(1, 0, 0);
        let reps = 1000;
        let passes = (0..reps)
            .filter(|_| {
                let x: Vec<f64> = (0..1200)
                    .map(|_| 0.3 * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                ks_gaussianity(&x, 0.05).unwrap().pass
            })
            .count();
        let rate = passes as f64 / reps as f64;
        // the scale is estimated from the data, which makes the test
        // slightly conservative
        assert!((0.93..=0.995).contains(&rate), "{rate}");
    }

    #[test]
    fn uniform_samples_fail() {
        let mut rng = stream(2, 0, 0);
        let reps = 1000;
        let fails = (0..reps)
            .filter(|_| {
                let x: Vec<f64> = (0..1200).map(|_| rng.random_range(-1.0..1.0)).collect();
                !ks_gaussianity(&x, 0.05).unwrap().pass
            })
            .count();
        assert!(fails as f64 / reps as f64 > 0.99, "{fails}");
    }

    #[test]
    fn degenerate_and_short_inputs_rejected() {
        assert!(ks_gaussianity(&[1.0; 100], 0.05).is_err());
        assert!(ks_gaussianity(&[1.0; 10], 0.05).is_err());
    }
}
