//! Expansion of products of eigenfunctions in an eigenbasis,
//! `c_i = ⟨∏_j φ_{k_j}, φ_i⟩`.
//!
//! Every expansion is computed by quadrature on the basis grid. Flat tori
//! (frequency convolution) and the sphere (Gaunt coefficients, up to three
//! factors) also have an exact oracle; when it exists its values are the
//! ones stored and the two are required to agree to `1e-10`.

pub mod torus;
pub mod wigner;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::manifolds::{ManifoldModel, Mode, ModeRep, SpectralBasis};

pub use wigner::{gaunt_real, gaunt_real_row, wigner_3j, wigner_3j_series};

/// Exact coefficients below this are stored as zeros.
pub const EXACT_ZERO: f64 = 1e-15;

/// Largest admissible gap between the exact oracle and quadrature.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub factors: Vec<usize>,
    pub sum_lambda: f64,
}

impl ProductSpec {
    pub fn new(basis: &SpectralBasis, factors: &[usize]) -> Result<Self> {
        if factors.is_empty() {
            return param("a product needs at least one factor");
        }
        let mut sum_lambda = 0.0;
        for id in factors {
            sum_lambda += basis.mode(*id)?.lambda;
        }
        Ok(Self { factors: factors.to_vec(), sum_lambda })
    }

    /// Factors given by mode name (`cos2`, `Y1_0`, …) or numeric id.
    pub fn from_names(basis: &SpectralBasis, names: &[&str]) -> Result<Self> {
        let ids = names.iter().map(|n| basis.find(n).map(|m| m.id)).collect::<Result<Vec<_>>>()?;
        Self::new(basis, &ids)
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Quadrature,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub index: usize,
    pub lambda: f64,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSeries {
    pub product: ProductSpec,
    pub lambda_max: f64,
    /// One entry per basis mode, ascending in `λ`.
    pub entries: Vec<CoefficientEntry>,
    /// `‖f‖²` by quadrature.
    pub f_norm_sq: f64,
    /// `Σ c_i²`.
    pub mass_captured: f64,
    pub method: Method,
    /// Largest `|exact − quadrature|` when both were computed.
    pub oracle_gap: Option<f64>,
}

impl CoefficientSeries {
    /// Build a series from raw coefficients (used for synthetic data and tests).
    pub fn from_parts(
        product: ProductSpec,
        lambda_max: f64,
        lambdas: &[f64],
        coeffs: &[f64],
        f_norm_sq: f64,
        method: Method,
    ) -> Result<Self> {
        if lambdas.len() != coeffs.len() {
            return param("lambda and coefficient lists differ in length");
        }
        if lambdas.windows(2).any(|w| w[1] < w[0]) {
            return param("entries must be sorted by ascending lambda");
        }
        let entries: Vec<CoefficientEntry> = lambdas
            .iter()
            .zip(coeffs)
            .enumerate()
            .map(|(index, (lambda, coeff))| CoefficientEntry { index, lambda: *lambda, coeff: *coeff })
            .collect();
        let mass_captured = coeffs.iter().map(|c| c * c).sum();
        Ok(Self { product, lambda_max, entries, f_norm_sq, mass_captured, method, oracle_gap: None })
    }

    pub fn coeff(&self, index: usize) -> Option<f64> {
        self.entries.get(index).map(|e| e.coeff)
    }

    /// `c_i²` summed over entries with `λ_i ≤ lambda`, as a fraction of `‖f‖²`.
    pub fn mass_ratio_below(&self, lambda: f64) -> f64 {
        let s: f64 = self.entries.iter().filter(|e| e.lambda <= lambda).map(|e| e.coeff * e.coeff).sum();
        s / self.f_norm_sq
    }

    /// Header `index,lambda,coeff,abs_coeff,cumulative_mass_ratio`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,lambda,coeff,abs_coeff,cumulative_mass_ratio")?;
        let mut cum = 0.0;
        for e in &self.entries {
            cum += e.coeff * e.coeff;
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                e.index,
                e.lambda,
                e.coeff,
                e.coeff.abs(),
                cum / self.f_norm_sq
            )?;
        }
        Ok(())
    }
}

/// Check that the basis grid integrates the product and its pairings exactly.
pub fn check_resolution(basis: &SpectralBasis, factors: &[&Mode]) -> Result<()> {
    let axes = basis.exactness().len();
    let mut sum = vec![0usize; axes];
    for m in factors {
        for (s, b) in sum.iter_mut().zip(basis.mode_bandwidth(m)) {
            *s += b;
        }
    }
    let mut target = vec![0usize; axes];
    for m in &basis.modes {
        for (t, b) in target.iter_mut().zip(basis.mode_bandwidth(m)) {
            *t = (*t).max(b);
        }
    }
    for a in 0..axes {
        let e = basis.exactness()[a];
        let need = (2 * sum[a]).max(sum[a] + target[a]);
        if need > e {
            return Err(Error::Resolution(format!(
                "axis {a}: product bandwidth {} needs exactness {need}, grid has {e}",
                sum[a]
            )));
        }
    }
    Ok(())
}

/// Values of the product on the basis grid.
pub fn product_samples(basis: &SpectralBasis, factors: &[usize]) -> Result<Vec<f64>> {
    let mut f = vec![1.0; basis.grid().len()];
    for id in factors {
        for (v, s) in f.iter_mut().zip(basis.sample(*id)?) {
            *v *= s;
        }
    }
    Ok(f)
}

pub fn expand_product(basis: &SpectralBasis, spec: &ProductSpec) -> Result<CoefficientSeries> {
    let mut ids = spec.factors.clone();
    if ids.is_empty() {
        return param("a product needs at least one factor");
    }
    // Canonical factor order makes the result independent of permutations.
    ids.sort_unstable();
    let factors = ids.iter().map(|id| basis.mode(*id)).collect::<Result<Vec<_>>>()?;
    check_resolution(basis, &factors)?;

    let f = product_samples(basis, &ids)?;
    let f_norm_sq: f64 = f.iter().zip(basis.grid().weights()).map(|(v, w)| w * v * v).sum();
    let quad = basis.project(&f)?;

    let exact = match &basis.model {
        ManifoldModel::FlatTorus { .. } => Some(torus::exact_coefficients(basis, &factors)),
        ManifoldModel::Sphere2 if factors.len() <= 3 => Some(sphere_exact(basis, &factors)),
        _ => None,
    };
    let (coeffs, method, oracle_gap) = match exact {
        Some(mut ex) => {
            let gap = ex.iter().zip(&quad).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if gap > ORACLE_TOLERANCE {
                return Err(Error::Breakdown(format!(
                    "exact and quadrature coefficients differ by {gap:.3e} (tolerance {ORACLE_TOLERANCE:e})"
                )));
            }
            ex.iter_mut().filter(|c| c.abs() < EXACT_ZERO).for_each(|c| *c = 0.0);
            (ex, Method::Both, Some(gap))
        }
        None => (quad, Method::Quadrature, None),
    };
    let entries: Vec<CoefficientEntry> = basis
        .modes
        .iter()
        .zip(&coeffs)
        .map(|(m, c)| CoefficientEntry { index: m.id, lambda: m.lambda, coeff: *c })
        .collect();
    let mass_captured = coeffs.iter().map(|c| c * c).sum();
    Ok(CoefficientSeries {
        product: spec.clone(),
        lambda_max: basis.lambda_max,
        entries,
        f_norm_sq,
        mass_captured,
        method,
        oracle_gap,
    })
}

fn sphere_lm(m: &Mode) -> (i64, i64) {
    match m.rep {
        ModeRep::Sphere { l, m } => (i64::from(l), i64::from(m)),
        _ => unreachable!(),
    }
}

/// Sphere coefficients from Gaunt rows; three-factor products are contracted
/// through the harmonics of the first pair.
fn sphere_exact(basis: &SpectralBasis, factors: &[&Mode]) -> Vec<f64> {
    let index = |l: i64, m: i64| (l * l + l + m) as usize;
    // Expansion of the product in harmonics of degree ≤ Σ l, indexed l² + l + m.
    let expansion: Vec<f64> = match factors {
        [a] => {
            let (l, m) = sphere_lm(a);
            let mut v = vec![0.0; index(l, l) + 1];
            v[index(l, m)] = 1.0;
            v
        }
        [a, b] => {
            let ((l1, m1), (l2, m2)) = (sphere_lm(a), sphere_lm(b));
            gaunt_real_row(l1, m1, l2, m2)
        }
        [a, b, c] => {
            let ((l1, m1), (l2, m2), (l3, m3)) = (sphere_lm(a), sphere_lm(b), sphere_lm(c));
            let first = gaunt_real_row(l1, m1, l2, m2);
            let top = l1 + l2 + l3;
            let mut v = vec![0.0; ((top + 1) * (top + 1)) as usize];
            for ld in 0..=(l1 + l2) {
                for md in -ld..=ld {
                    let g = first[index(ld, md)];
                    if g == 0.0 {
                        continue;
                    }
                    for (k, h) in gaunt_real_row(ld, md, l3, m3).iter().enumerate() {
                        v[k] += g * h;
                    }
                }
            }
            v
        }
        _ => unreachable!("sphere oracle covers up to three factors"),
    };
    basis
        .modes
        .iter()
        .map(|m| {
            let (l, mm) = sphere_lm(m);
            expansion.get(index(l, mm)).copied().unwrap_or(0.0)
        })
        .collect()
}

/// `(Σ c_i² / ‖f‖², 1 − ratio)`.
pub fn parseval_report(series: &CoefficientSeries) -> Result<(f64, f64)> {
    if !(series.f_norm_sq > 0.0) || !series.f_norm_sq.is_finite() {
        return Err(Error::DegenerateProduct(format!(
            "product norm squared is {} for factors {:?}",
            series.f_norm_sq, series.product.factors
        )));
    }
    let ratio = series.mass_captured / series.f_norm_sq;
    Ok((ratio, 1.0 - ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{build_basis, Resolution};
    use std::f64::consts::{PI, TAU};

    #[test]
    fn circle_cos2_cos3() {
        let b = build_basis(&ManifoldModel::flat_torus(1, TAU).unwrap(), 8.0, &Resolution::default()).unwrap();
        let spec = ProductSpec::from_names(&b, &["cos2", "cos3"]).unwrap();
        assert_eq!(spec.sum_lambda, 5.0);
        let s = expand_product(&b, &spec).unwrap();
        assert_eq!(s.method, Method::Both);
        let want = 1.0 / (2.0 * PI.sqrt());
        for e in &s.entries {
            let name = b.modes[e.index].rep.name();
            if name == "cos1" || name == "cos5" {
                assert!((e.coeff - want).abs() < 1e-15);
            } else {
                assert_eq!(e.coeff, 0.0, "{name}");
            }
        }
        let (ratio, _) = parseval_report(&s).unwrap();
        assert!((ratio - 1.0).abs() < 1e-12);
        assert!((s.f_norm_sq - 1.0 / TAU).abs() < 1e-14);
    }

    #[test]
    fn sphere_y10_squared() {
        let b = build_basis(&ManifoldModel::Sphere2, 6f64.sqrt(), &Resolution::default()).unwrap();
        let s = expand_product(&b, &ProductSpec::from_names(&b, &["Y1_0", "Y1_0"]).unwrap()).unwrap();
        assert!((s.coeff(0).unwrap() - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        let y20 = b.find("Y2_0").unwrap().id;
        assert!((s.coeff(y20).unwrap() - 1.0 / (5.0 * PI).sqrt()).abs() < 1e-15);
        let (ratio, _) = parseval_report(&s).unwrap();
        assert!((ratio - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sphere_three_factor_contraction() {
        let b = build_basis(
            &ManifoldModel::Sphere2,
            (6.0f64 * 7.0).sqrt(),
            &Resolution { product_order: 3, ..Resolution::default() },
        )
        .unwrap();
        let s = expand_product(&b, &ProductSpec::from_names(&b, &["Y2_1", "Y1_-1", "Y3_2"]).unwrap()).unwrap();
        assert_eq!(s.method, Method::Both);
        assert!(s.oracle_gap.unwrap() < 1e-13);
    }

    #[test]
    fn under_resolved_grid_rejected() {
        let b = build_basis(&ManifoldModel::Sphere2, 12f64.sqrt(), &Resolution { product_order: 1, ..Default::default() })
            .unwrap();
        let spec = ProductSpec::from_names(&b, &["Y3_0", "Y3_1", "Y3_2"]).unwrap();
        assert!(matches!(expand_product(&b, &spec), Err(Error::Resolution(_))));
    }

    #[test]
    fn unknown_factor() {
        let b = build_basis(&ManifoldModel::Sphere2, 2.0, &Resolution::default()).unwrap();
        assert!(matches!(ProductSpec::new(&b, &[99]), Err(Error::Parameter(_))));
    }

    #[test]
    fn degenerate_norm_flagged() {
        let spec = ProductSpec { factors: vec![0], sum_lambda: 0.0 };
        let s = CoefficientSeries::from_parts(spec, 1.0, &[0.0], &[0.0], 0.0, Method::Exact).unwrap();
        assert!(matches!(parseval_report(&s), Err(Error::DegenerateProduct(_))));
    }

    #[test]
    fn csv_layout() {
        let spec = ProductSpec { factors: vec![0], sum_lambda: 0.0 };
        let s = CoefficientSeries::from_parts(spec, 1.0, &[0.0, 1.0], &[0.6, -0.8], 1.0, Method::Exact).unwrap();
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,lambda,coeff,abs_coeff,cumulative_mass_ratio");
        assert_eq!(lines[2], "1,1.0000000000000000e0,-8.0000000000000004e-1,8.0000000000000004e-1,1.0000000000000000e0");
    }
}
