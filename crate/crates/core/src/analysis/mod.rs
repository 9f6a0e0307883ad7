//! Quantitative verdicts on coefficient series: exponential envelopes and
//! their onset, truncation sets capturing a target fraction of the norm, and
//! lower bounds on product norms.

mod decay;
mod lower_bound;
mod truncation;

pub use decay::{fit_decay, DecayFit, DecayOptions, NOISE_FLOOR};
pub use lower_bound::{
    lower_bound_experiment, lower_bound_fit, product_norm, sphere_remark_experiment, sphere_remark_norm,
    sphere_rotated_sectoral_samples, LowerBoundFit, RemarkReport,
};
pub use truncation::{captured_ratio, find_truncation, uniform_truncation, TruncationResult, UniformTruncation};

/// Ordinary least squares `y ≈ intercept + slope·x`, with the coefficient of
/// determination. Degenerate abscissae give a zero slope; constant data give `r² = 1`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::linear_fit;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (s, i, r2) = linear_fit(&xs, &ys);
        assert!((s + 0.5).abs() < 1e-15 && (i - 2.0).abs() < 1e-15 && r2 == 1.0);
    }
}
