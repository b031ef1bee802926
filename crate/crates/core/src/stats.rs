//! Small statistics helpers shared by the regret lab and the harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

pub fn std_error(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    std_dev(xs) / (xs.len() as f64).sqrt()
}

/// Outcome of a paired one-sided t-test of `mean(a − b) > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTest {
    pub mean_difference: f64,
    pub std_error: f64,
    pub t_statistic: f64,
    /// One-sided p-value for the alternative `a > b`.
    pub p_value: f64,
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> PairedTest {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&diffs);
    let se = std_error(&diffs);
    let n = diffs.len();
    let (t, p) = if n < 2 {
        (f64::NAN, 1.0)
    } else if se == 0.0 {
        if m > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (f64::NAN, 1.0)
        }
    } else {
        let t = m / se;
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid degrees of freedom");
        (t, 1.0 - dist.cdf(t))
    };
    PairedTest {
        mean_difference: m,
        std_error: se,
        t_statistic: t,
        p_value: p,
    }
}

/// Ordinary least squares `y = intercept + slope·x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Log-log slope of mean value against `T`, with a percentile bootstrap
/// interval obtained by resampling seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub resamples: usize,
}

/// `samples[k]` holds the per-seed values observed at `horizons[k]`.
/// Returns `None` with fewer than two distinct horizons or non-positive means.
pub fn fit_log_log_slope(horizons: &[f64], samples: &[Vec<f64>], resamples: usize, seed: u64) -> Option<SlopeFit> {
    if horizons.len() < 2 || horizons.len() != samples.len() || samples.iter().any(|s| s.is_empty()) {
        return None;
    }
    let fit = |means: &[f64]| -> Option<(f64, f64)> {
        if means.iter().any(|m| !(*m > 0.0)) {
            return None;
        }
        let lx: Vec<f64> = horizons.iter().map(|h| h.ln()).collect();
        let ly: Vec<f64> = means.iter().map(|m| m.ln()).collect();
        Some(least_squares(&lx, &ly))
    };
    let means: Vec<f64> = samples.iter().map(|s| mean(s)).collect();
    let (intercept, slope) = fit(&means)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let boot: Vec<f64> = samples
            .iter()
            .map(|s| {
                let total: f64 = (0..s.len()).map(|_| s[rng.random_range(0..s.len())]).sum();
                total / s.len() as f64
            })
            .collect();
        if let Some((_, b)) = fit(&boot) {
            slopes.push(b);
        }
    }
    if slopes.is_empty() {
        return None;
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pick = |q: f64| slopes[((q * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
    Some(SlopeFit {
        slope,
        intercept,
        ci_lower: pick(0.025),
        ci_upper: pick(0.975),
        resamples: slopes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let hs = [64.0, 256.0, 1024.0, 4096.0];
        let samples: Vec<Vec<f64>> = hs.iter().map(|h: &f64| vec![3.0 * h.powf(0.75); 5]).collect();
        let fit = fit_log_log_slope(&hs, &samples, 200, 1).unwrap();
        assert!((fit.slope - 0.75).abs() < 1e-9);
        assert!((fit.ci_upper - 0.75).abs() < 1e-9);
        assert!(fit_log_log_slope(&hs[..1], &samples[..1], 10, 1).is_none());
    }

    #[test]
    fn paired_test_detects_shift() {
        let a: Vec<f64> = (0..20).map(|i| 1.0 + (i % 3) as f64 * 0.01).collect();
        let b: Vec<f64> = (0..20).map(|i| 0.9 + (i % 4) as f64 * 0.01).collect();
        let t = paired_t_test(&a, &b);
        assert!(t.p_value < 0.001);
        let t = paired_t_test(&b, &a);
        assert!(t.p_value > 0.99);
    }
}
