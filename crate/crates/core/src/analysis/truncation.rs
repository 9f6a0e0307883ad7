use serde::{Deserialize, Serialize};

use crate::coefficients::{parseval_report, CoefficientSeries};
use crate::error::{param, Error, Result};

/// Step of the `C5` grid.
pub const C5_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationResult {
    #[serde(rename = "C5")]
    pub c5: f64,
    /// Entry indices with `λ_i ≤ C5 · Σλ`.
    pub set: Vec<usize>,
    /// `‖Σ_{i∈A} c_i φ_i‖ / ‖f‖`.
    pub captured_ratio: f64,
    pub target: f64,
    /// `Σ_{i≥1} e^{−C2 λ_i}` over the basis, when `C2` is supplied.
    pub s_partial: Option<f64>,
}

#[inline]
fn in_set(lambda: f64, bound: f64) -> bool {
    lambda <= bound * (1.0 + 1e-12)
}

/// `C5 = k/10` for `k = 1, 2, …`; the last grid point covers every entry.
fn c5_grid(series: &CoefficientSeries) -> Vec<f64> {
    let top = series.entries.last().map_or(0.0, |e| e.lambda);
    let sl = series.product.sum_lambda;
    let kmax = if sl > 0.0 { ((top / sl) / C5_STEP).ceil().max(1.0) as usize } else { 1 };
    (1..=kmax).map(|k| k as f64 / 10.0).collect()
}

/// `‖Σ_{λ_i ≤ C5 Σλ} c_i φ_i‖ / ‖f‖` from the cumulative sum.
pub fn captured_ratio(series: &CoefficientSeries, c5: f64) -> f64 {
    let bound = c5 * series.product.sum_lambda;
    let mass: f64 = series.entries.iter().filter(|e| in_set(e.lambda, bound)).map(|e| e.coeff * e.coeff).sum();
    (mass / series.f_norm_sq).sqrt()
}

pub fn find_truncation(series: &CoefficientSeries, target: f64, c2: Option<f64>) -> Result<TruncationResult> {
    if !(0.0..=1.0).contains(&target) {
        return param(format!("target {target} outside [0, 1]"));
    }
    let (ratio, _) = parseval_report(series)?;
    if ratio.sqrt() < target {
        return Err(Error::BasisTooSmall(format!(
            "the whole basis captures a norm ratio of {:.6} < target {target}; raise lambda_max",
            ratio.sqrt()
        )));
    }
    let s_partial = c2.map(|c2| series.entries.iter().filter(|e| e.lambda > 0.0).map(|e| (-c2 * e.lambda).exp()).sum());
    for c5 in c5_grid(series) {
        let r = captured_ratio(series, c5);
        if r >= target {
            let bound = c5 * series.product.sum_lambda;
            let set = series.entries.iter().filter(|e| in_set(e.lambda, bound)).map(|e| e.index).collect();
            return Ok(TruncationResult { c5, set, captured_ratio: r, target, s_partial });
        }
    }
    // Every entry is inside the last grid point, whose ratio is the full one.
    Err(Error::BasisTooSmall(format!("no C5 on the grid reaches target {target}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformTruncation {
    /// Largest per-product `C5`.
    #[serde(rename = "C5_star")]
    pub c5_star: f64,
    pub per_product: Vec<TruncationResult>,
    /// Captured ratio of every product at `C5_star`.
    pub ratios_at_star: Vec<f64>,
}

pub fn uniform_truncation(family: &[CoefficientSeries], target: f64) -> Result<UniformTruncation> {
    if family.is_empty() {
        return param("empty product family");
    }
    let per_product = family.iter().map(|s| find_truncation(s, target, None)).collect::<Result<Vec<_>>>()?;
    let c5_star = per_product.iter().map(|t| t.c5).fold(0.0, f64::max);
    let ratios_at_star = family.iter().map(|s| captured_ratio(s, c5_star)).collect();
    Ok(UniformTruncation { c5_star, per_product, ratios_at_star })
}
