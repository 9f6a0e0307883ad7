use serde::{Deserialize, Serialize};

use super::linear_fit;
use crate::coefficients::CoefficientSeries;
use crate::error::{param, Result};

/// Coefficients below `NOISE_FLOOR · ‖f‖` are left out of log fits.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Minimum number of entries above the floor beyond `λ = Σλ`.
const MIN_TAIL_ENTRIES: usize = 4;
/// Minimum number of populated bins inside the fit window.
const MIN_BINS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    /// Fit window in `λ`; defaults to `[2Σλ, min(6Σλ, lambda_max)]`.
    pub window: Option<(f64, f64)>,
    /// Bin width in `λ` for the per-bin maxima.
    pub bin_width: f64,
    /// Relative noise floor, multiplied by `‖f‖`.
    pub noise_floor: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self { window: None, bin_width: 1.0, noise_floor: NOISE_FLOOR }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Every coefficient past `Σλ` vanishes; no rate is fitted and `c_hat`,
    /// `C_hat`, `r_squared` are absent.
    pub band_limited: bool,
    pub c_hat: Option<f64>,
    /// `log`-envelope intercept divided by `Σλ`, so that
    /// `|c_i| ≤ e^{−c_hat λ_i} e^{C_hat Σλ}` on the window.
    #[serde(rename = "C_hat")]
    pub growth: Option<f64>,
    /// Least-squares intercept of `log max|c|` before the upward shift.
    pub ls_intercept: Option<f64>,
    /// Intercept after the shift that makes the line dominate the window.
    pub envelope_intercept: Option<f64>,
    pub onset_lambda: f64,
    pub r_squared: Option<f64>,
    pub window: (f64, f64),
    /// `(λ of the bin maximum, max |c|)` for every bin used in the fit.
    pub bins: Vec<(f64, f64)>,
    pub floor: f64,
    pub sum_lambda: f64,
}

impl DecayFit {
    /// `e^{envelope_intercept − c_hat λ}`, or 0 for band-limited series.
    pub fn envelope(&self, lambda: f64) -> f64 {
        match (self.c_hat, self.envelope_intercept) {
            (Some(c), Some(b)) => (b - c * lambda).exp(),
            _ => 0.0,
        }
    }

    /// Whether the envelope bounds every coefficient in the window.
    pub fn dominates(&self, series: &CoefficientSeries) -> bool {
        if self.band_limited {
            return series.entries.iter().filter(|e| e.lambda > self.sum_lambda).all(|e| e.coeff.abs() <= self.floor);
        }
        series
            .entries
            .iter()
            .filter(|e| e.lambda >= self.window.0 && e.lambda <= self.window.1)
            .all(|e| e.coeff.abs() <= self.envelope(e.lambda) * (1.0 + 1e-12))
    }
}

/// Per-bin maxima of `|c|` above `floor` on `[lo, hi]`, bins aligned at `lo`.
fn bin_maxima(series: &CoefficientSeries, lo: f64, hi: f64, width: f64, floor: f64) -> Vec<(f64, f64)> {
    let nbins = (((hi - lo) / width).floor() as usize) + 1;
    let mut bins: Vec<Option<(f64, f64)>> = vec![None; nbins];
    for e in series.entries.iter().filter(|e| e.lambda >= lo && e.lambda <= hi) {
        let a = e.coeff.abs();
        if a <= floor {
            continue;
        }
        let k = (((e.lambda - lo) / width).floor() as usize).min(nbins - 1);
        match bins[k] {
            Some((_, m)) if m >= a => {}
            _ => bins[k] = Some((e.lambda, a)),
        }
    }
    bins.into_iter().flatten().collect()
}

pub fn fit_decay(series: &CoefficientSeries, opts: &DecayOptions) -> Result<DecayFit> {
    if !(opts.bin_width > 0.0) {
        return param("bin width must be positive");
    }
    if !(opts.noise_floor >= 0.0) {
        return param("noise floor must be nonnegative");
    }
    let sum_lambda = series.product.sum_lambda;
    let floor = opts.noise_floor * series.f_norm_sq.max(0.0).sqrt();
    let tail: Vec<f64> =
        series.entries.iter().filter(|e| e.lambda > sum_lambda).map(|e| e.coeff.abs()).collect();

    if tail.iter().all(|c| *c <= floor) {
        return Ok(DecayFit {
            band_limited: true,
            c_hat: None,
            growth: None,
            ls_intercept: None,
            envelope_intercept: None,
            onset_lambda: sum_lambda,
            r_squared: None,
            window: (sum_lambda, series.lambda_max),
            bins: Vec::new(),
            floor,
            sum_lambda,
        });
    }
    let above = tail.iter().filter(|c| **c > floor).count();
    if above < MIN_TAIL_ENTRIES {
        return param(format!(
            "only {above} coefficients above the noise floor beyond lambda = {sum_lambda}; need {MIN_TAIL_ENTRIES}"
        ));
    }

    let (lo, hi) = opts.window.unwrap_or((2.0 * sum_lambda, (6.0 * sum_lambda).min(series.lambda_max)));
    if !(hi > lo) {
        return param(format!("empty fit window [{lo}, {hi}]"));
    }
    let bins = bin_maxima(series, lo, hi, opts.bin_width, floor);
    if bins.len() < MIN_BINS {
        return param(format!("fit window [{lo}, {hi}] holds {} populated bins; need {MIN_BINS}", bins.len()));
    }
    let xs: Vec<f64> = bins.iter().map(|b| b.0).collect();
    let ys: Vec<f64> = bins.iter().map(|b| b.1.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    let c_hat = (-slope).max(0.0);

    let shifted = series
        .entries
        .iter()
        .filter(|e| e.lambda >= lo && e.lambda <= hi && e.coeff != 0.0)
        .map(|e| e.coeff.abs().ln() + c_hat * e.lambda)
        .fold(intercept, f64::max);
    let growth = if sum_lambda > 0.0 { shifted / sum_lambda } else { shifted };

    Ok(DecayFit {
        band_limited: false,
        c_hat: Some(c_hat),
        growth: Some(growth),
        ls_intercept: Some(intercept),
        envelope_intercept: Some(shifted),
        onset_lambda: onset(series, hi, opts.bin_width, floor),
        r_squared: Some(r2),
        window: (lo, hi),
        bins,
        floor,
        sum_lambda,
    })
}

/// `λ` of the bin maximum after which the per-bin maxima decrease strictly
/// (empty bins count as zero) up to `hi`.
fn onset(series: &CoefficientSeries, hi: f64, width: f64, floor: f64) -> f64 {
    let nbins = ((hi / width).floor() as usize) + 1;
    let mut maxima = vec![(0.0, 0.0f64); nbins];
    for (k, m) in maxima.iter_mut().enumerate() {
        m.0 = k as f64 * width;
    }
    for e in series.entries.iter().filter(|e| e.lambda <= hi && e.coeff.abs() > floor) {
        let k = ((e.lambda / width).floor() as usize).min(nbins - 1);
        if e.coeff.abs() > maxima[k].1 {
            maxima[k] = (e.lambda, e.coeff.abs());
        }
    }
    let mut start = nbins - 1;
    while start > 0 {
        let (prev, cur) = (maxima[start - 1].1, maxima[start].1);
        if prev > cur || (prev == 0.0 && cur == 0.0) {
            start -= 1;
        } else {
            break;
        }
    }
    maxima[start].0.min(hi)
}
