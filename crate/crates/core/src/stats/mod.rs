//! Corpus statistics and evaluation arithmetic.

mod gamma;
mod ngram;

pub use gamma::{fit_gamma, trigamma, GammaFit};
pub use ngram::{ngram_loglik, ngram_train, NgramModel, BOS, EOS, UNK};

use serde::Serialize;
use statrs::function::factorial::ln_binomial;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("no data")]
    Empty,
    #[error("invalid value {0}: {1}")]
    BadValue(f64, &'static str),
    #[error("samples have zero variance")]
    ZeroVariance,
    #[error("need at least {0} samples")]
    TooFew(usize),
    #[error("n-gram order must be 1, 2 or 3, got {0}")]
    BadOrder(usize),
}

/// Quartile convention used by [`duration_summary`].
pub const QUARTILE_METHOD: &str =
    "linear interpolation between closest ranks: q(p) = x[floor(h)] + (h - floor(h)) * (x[floor(h)+1] - x[floor(h)]), h = (n-1)p";

/// Box-plot statistics of a set of durations (seconds). `std` is the population standard
/// deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DurationSummary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn duration_summary(durations: &[f64]) -> Result<DurationSummary, StatsError> {
    if durations.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(&d) = durations.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(StatsError::BadValue(d, "durations must be finite and non-negative"));
    }
    let mut sorted = durations.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let var = sorted.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
    Ok(DurationSummary {
        n,
        mean,
        std: var.sqrt(),
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[n - 1],
    })
}

/// Rounds to two decimal places, the precision reported in result tables.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Mean relative reduction `(baseline - treatment) / baseline` over pairs, in percent,
/// rounded to two decimals.
pub fn relative_reduction(pairs: &[(f64, f64)]) -> Result<f64, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut total = 0.0;
    for &(base, treat) in pairs {
        if !(base > 0.0 && base.is_finite()) {
            return Err(StatsError::BadValue(base, "baseline must be positive"));
        }
        if !treat.is_finite() {
            return Err(StatsError::BadValue(treat, "treatment must be finite"));
        }
        total += (base - treat) / base;
    }
    Ok(round2(100.0 * total / pairs.len() as f64))
}

/// Name of the significance test reported by [`pc_tally`].
pub const PC_TEST: &str = "exact two-sided binomial sign test, ties excluded, p = 0.5";

/// Pairwise-comparison listening test outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PcResult {
    pub prefer_a: u64,
    pub prefer_b: u64,
    pub equal: u64,
    pub percent_a: f64,
    pub percent_b: f64,
    pub percent_equal: f64,
    pub p_value: f64,
}

impl PcResult {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Exact two-sided sign-test p-value for `k` successes out of `n` fair trials:
/// `min(1, 2 * P(X <= min(k, n-k)))`.
pub fn sign_test_p(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let tail_k = k.min(n - k);
    let ln_half_n = n as f64 * std::f64::consts::LN_2;
    let tail: f64 = (0..=tail_k)
        .map(|i| (ln_binomial(n, i) - ln_half_n).exp())
        .sum();
    (2.0 * tail).min(1.0)
}

/// Percentages (two decimals) and sign-test p-value for `(prefer_a, prefer_b, equal)`.
pub fn pc_tally(prefer_a: u64, prefer_b: u64, equal: u64) -> Result<PcResult, StatsError> {
    let total = prefer_a + prefer_b + equal;
    if total == 0 {
        return Err(StatsError::Empty);
    }
    let pct = |c: u64| round2(100.0 * c as f64 / total as f64);
    Ok(PcResult {
        prefer_a,
        prefer_b,
        equal,
        percent_a: pct(prefer_a),
        percent_b: pct(prefer_b),
        percent_equal: pct(equal),
        p_value: sign_test_p(prefer_a, prefer_a + prefer_b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_durations() {
        let s = duration_summary(&[2.0; 4]).unwrap();
        assert_eq!((s.mean, s.std, s.min, s.q1, s.median, s.q3, s.max), (2.0, 0.0, 2.0, 2.0, 2.0, 2.0, 2.0));
    }

    #[test]
    fn symmetric_quartiles() {
        let s = duration_summary(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
        assert_eq!(s.n, 5);
        let s = duration_summary(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
    }

    #[test]
    fn uniform_sample_mean() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.0..10.0)).collect();
        let s = duration_summary(&xs).unwrap();
        // One standard error of the mean: 10 / sqrt(12) / sqrt(10000) ~ 0.029; allow 3.
        assert!((s.mean - 5.0).abs() < 10.0 * 3.0 / 12f64.sqrt() / 100.0, "{}", s.mean);
        assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
    }

    #[test]
    fn duration_errors() {
        assert_eq!(duration_summary(&[]), Err(StatsError::Empty));
        assert!(duration_summary(&[1.0, -1.0]).is_err());
        assert!(duration_summary(&[f64::NAN]).is_err());
    }

    #[test]
    fn training_time_reductions() {
        assert_eq!(relative_reduction(&[(5.36, 2.18), (6.23, 2.50)]).unwrap(), 59.60);
        assert_eq!(relative_reduction(&[(3.41, 3.13), (3.75, 3.29)]).unwrap(), 10.24);
        assert_eq!(relative_reduction(&[(4.2, 4.2)]).unwrap(), 0.0);
        assert!(relative_reduction(&[(0.0, 1.0)]).is_err());
        assert!(relative_reduction(&[(-1.0, 1.0)]).is_err());
        assert!(relative_reduction(&[]).is_err());
    }

    #[test]
    fn pc_examples() {
        let r = pc_tally(1, 1, 2).unwrap();
        assert_eq!((r.percent_a, r.percent_b, r.percent_equal), (25.0, 25.0, 50.0));
        assert_eq!(r.p_value, 1.0);
        // 2 * (C(10,0) + C(10,1)) / 2^10
        let r = pc_tally(9, 1, 0).unwrap();
        assert!((r.p_value - 22.0 / 1024.0).abs() < 1e-12);
        assert!(r.significant(0.05));
        assert_eq!(pc_tally(5, 5, 0).unwrap().p_value, 1.0);
        assert_eq!(pc_tally(0, 0, 3).unwrap().p_value, 1.0);
        assert_eq!(pc_tally(0, 0, 0), Err(StatsError::Empty));
    }

    #[test]
    fn large_counts_do_not_underflow() {
        let p = sign_test_p(600, 1200);
        assert!(p > 0.9 && p <= 1.0, "{p}");
        assert!(sign_test_p(0, 2000) < 1e-300 || sign_test_p(0, 2000) == 0.0);
    }
}
