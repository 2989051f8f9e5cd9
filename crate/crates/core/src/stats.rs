//! Small statistics toolkit shared by the Monte Carlo experiments.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::ensure;
use crate::Result;

/// Two-sided standard normal quantile for a confidence level, e.g. 1.96 for 0.95.
pub fn z_for_confidence(confidence: f64) -> Result<f64> {
    ensure!(
        confidence > 0.0 && confidence < 1.0,
        Validation,
        "confidence level must lie in (0, 1), got {confidence}"
    );
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + confidence / 2.0))
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    ensure!(trials > 0, Validation, "Wilson interval needs at least one trial");
    ensure!(
        successes <= trials,
        Validation,
        "successes ({successes}) exceed trials ({trials})"
    );
    let z = z_for_confidence(confidence)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // Clamp against rounding at the ends; the exact interval touches 0 and 1.
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Ok((low.min(p), high.max(p)))
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `log y` against `log x`, skipping points with a
/// non-positive coordinate. `None` when fewer than two points remain.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Empirical quantile with linear interpolation; `sorted` must be ascending.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    Some(sorted[lo] * (1.0 - w) + sorted[hi] * w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 100, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100, 0.95).unwrap();
        assert_eq!(hi, 1.0);
        assert!(lo > 0.95);
        assert!(wilson_interval(1, 0, 0.95).is_err());
        assert!(wilson_interval(5, 4, 0.95).is_err());
    }

    #[test]
    fn wilson_half_half() {
        // Closed form evaluated by hand: z = 1.959964, n = 100, p = 1/2
        // centre = 0.5, half-width = z/(1+z^2/n) * sqrt(1/400 + z^2/40000).
        let z: f64 = 1.959_963_984_540_054;
        let half = z / (1.0 + z * z / 100.0) * (0.0025 + z * z / 40000.0).sqrt();
        let (lo, hi) = wilson_interval(50, 100, 0.95).unwrap();
        assert!((0.5 - lo - half).abs() < 1e-12);
        assert!((hi - 0.5 - half).abs() < 1e-12);
        assert!((hi - lo - 0.1923).abs() < 1e-3);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1e-3, 1e-2, 1e-1];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 1.5).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&v, 0.5), Some(1.5));
        assert_eq!(quantile(&v, 1.0), Some(3.0));
    }
}
