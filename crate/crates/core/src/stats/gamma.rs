use serde::Serialize;
use statrs::function::gamma::{digamma, ln_gamma};

use super::StatsError;

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-10;

/// Maximum-likelihood Gamma parameters (shape `k`, scale `theta`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// Polygamma of order 1. Recurrence up to x >= 10, then the asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x
        + x2 / 2.0
        + x2 / x
            * (1.0 / 6.0
                + x2 * (-1.0 / 30.0 + x2 * (1.0 / 42.0 + x2 * (-1.0 / 30.0 + x2 * 5.0 / 66.0))))
}

/// Fits a Gamma distribution by maximum likelihood.
///
/// Starts from the moment estimate `k = mean^2 / var` and runs Newton's method on
/// `ln k - digamma(k) = ln(mean) - mean(ln x)` until the step is below 1e-10 or 100
/// iterations have run. `theta = mean / k`.
pub fn fit_gamma(samples: &[f64]) -> Result<GammaFit, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::TooFew(2));
    }
    if let Some(&x) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(StatsError::BadValue(x, "Gamma samples must be positive"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let mean_ln = samples.iter().map(|x| x.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_ln;
    if var <= 0.0 || s <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }

    let mut k = mean * mean / var;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let f = k.ln() - digamma(k) - s;
        let df = 1.0 / k - trigamma(k);
        let mut next = k - f / df;
        if !(next > 0.0) || !next.is_finite() {
            next = k / 2.0;
        }
        let step = (next - k).abs();
        k = next;
        if step < TOL {
            break;
        }
    }
    let theta = mean / k;
    let log_likelihood = (k - 1.0) * mean_ln * n - n * mean / theta - n * ln_gamma(k) - n * k * theta.ln();
    Ok(GammaFit {
        shape: k,
        scale: theta,
        log_likelihood,
        iterations,
    })
}
