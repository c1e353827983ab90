//! Small statistical helpers: least-squares lines, percentile bootstrap.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng::task_rng;

/// Ordinary least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for exact fits or two points.
    pub slope_stderr: f64,
    pub points: usize,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("points", "need at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::NonFiniteFit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if x.len() > 2 {
        let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    if !slope.is_finite() || !intercept.is_finite() {
        return Err(Error::NonFiniteFit("least-squares line".into()));
    }
    Ok(LineFit { slope, intercept, slope_stderr, points: x.len() })
}

/// Slope of `log y` against `log x`; every value must be positive.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::NonFiniteFit("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance (zero for fewer than two values).
pub fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Linear-interpolation quantile of sorted data, `q ∈ [0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Resampled index sets of size `n`, reproducible from `seed`.
pub fn bootstrap_indices(n: usize, resamples: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..resamples)
        .map(|b| {
            let mut rng = task_rng(seed, b as u64);
            (0..n).map(|_| rng.random_range(0..n)).collect()
        })
        .collect()
}

/// Percentile interval of the mean of `values[i]` over the resamples, at level `1 - 2·tail`.
pub fn bootstrap_mean_ci(values: &[f64], resamples: &[Vec<usize>], tail: f64) -> (f64, f64) {
    let mut means: Vec<f64> =
        resamples.iter().map(|idx| idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64).collect();
    means.sort_by(f64::total_cmp);
    (quantile_sorted(&means, tail), quantile_sorted(&means, 1.0 - tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = ols(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!(f.slope_stderr < 1e-14);
        assert!(ols(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn power_law_exponent() {
        let x = [6.0, 9.0, 12.0, 16.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.0)).collect();
        assert!((log_log_fit(&x, &y).unwrap().slope + 2.0).abs() < 1e-13);
        assert!(log_log_fit(&x, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn bootstrap_is_reproducible_and_brackets_mean() {
        let v: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = bootstrap_indices(v.len(), 200, 5);
        let b = bootstrap_indices(v.len(), 200, 5);
        assert_eq!(a, b);
        let (lo, hi) = bootstrap_mean_ci(&v, &a, 0.025);
        let m = mean(&v);
        assert!(lo <= m && m <= hi);
    }

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 5.0);
        assert_eq!(quantile_sorted(&s, 0.5), 3.0);
        assert!((variance(&s) - 2.5).abs() < 1e-15);
    }
}
