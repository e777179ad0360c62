//! The handful of statistics the experiment suites need. Critical values are
//! standard normal quantiles; the sample counts involved (hundreds of seeds)
//! make the normal approximation to the t distribution more than adequate.

/// One-sided 99% normal quantile.
pub const Z_99: f64 = 2.326_347_874_040_841;
/// One-sided 95% normal quantile.
pub const Z_95: f64 = 1.644_853_626_951_472;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample standard deviation; 0 for fewer than two samples.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

/// Upper bound of the one-sided confidence interval for the mean.
pub fn upper_confidence_bound(values: &[f64], z: f64) -> f64 {
    mean(values) + z * sample_sd(values) / (values.len() as f64).sqrt()
}

/// One-sided paired comparison: tests whether `mean(a - b) < 0` at the given
/// confidence quantile. Returns `(mean_diff, t_statistic, significant)`.
pub fn paired_less_than(a: &[f64], b: &[f64], z: f64) -> (f64, f64, bool) {
    assert_eq!(a.len(), b.len(), "paired samples must align");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&diffs);
    let sd = sample_sd(&diffs);
    if sd == 0.0 {
        return (m, f64::NEG_INFINITY * m.signum(), m < 0.0);
    }
    let t = m / (sd / (diffs.len() as f64).sqrt());
    (m, t, t < -z)
}
