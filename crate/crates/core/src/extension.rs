//! Harmonic extension of flat-torus products to `M × (−T, T)`, the chart
//! constants `δ₀`, `δ`, `T`, the Green boundary identity that recovers a
//! coefficient from the extension at height `T`, and a real-variable Cauchy
//! estimate for `∂_t H`.

use std::f64::consts::{E, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientSeries, Method, EXACT_ZERO};
use crate::error::{param, Error, Result};
use crate::manifolds::{ManifoldModel, ModeRep, Parity, SpectralBasis};

/// Default seed of the sampled Laplacian residual check.
pub const RESIDUAL_SEED: u64 = 0x5eed_0003;
pub const RESIDUAL_SAMPLES: usize = 100;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionOverrides {
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    #[serde(rename = "C6")]
    pub c6: Option<f64>,
    #[serde(rename = "C7")]
    pub c7: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionParams {
    pub d: usize,
    pub injectivity_radius: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "R3")]
    pub r3: f64,
    /// `Σ_{|α|≤2} |a_α| (2R3)^{2−|α|}` for the chart Laplacian.
    pub coeff_sup: f64,
    pub delta0: f64,
    pub delta: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "C6")]
    pub c6: Option<f64>,
    #[serde(rename = "C7")]
    pub c7: Option<f64>,
    #[serde(rename = "C8")]
    pub c8: f64,
}

pub fn compute_extension_params(model: &ManifoldModel, overrides: &ExtensionOverrides) -> Result<ExtensionParams> {
    model.validate()?;
    if !model.is_flat() {
        return Err(Error::Unsupported(format!("explicit extension constants need a flat torus, got {}", model.label())));
    }
    let d = model.dim();
    let r_inj = model.injectivity_radius();
    // The flat metric extends holomorphically to all of C^d.
    let r1 = (r_inj / (d as f64).sqrt()).min(f64::INFINITY) / 2.0;
    let r2 = match overrides.r2 {
        Some(r) if !(r > 0.0 && r.is_finite()) => return param(format!("R2 = {r} must be positive")),
        Some(r) => r,
        None => r1 / 2.0,
    };
    let r3 = r2 / 4.0;
    // Only the d pure second derivatives carry a coefficient, each of size 1.
    let coeff_sup = d as f64;
    let delta0 = 2.0 * (2f64.powi(d as i32 + 1) * E).powi(2) * coeff_sup;
    let delta = (1.0 / delta0).sqrt();
    let t = r3 * delta / 2.0;
    let c8 = 1.0 / (2f64.powi(2 * d as i32 + 1) * E * E) + 1.0;
    Ok(ExtensionParams {
        d,
        injectivity_radius: r_inj,
        r1,
        r2,
        r3,
        coeff_sup,
        delta0,
        delta,
        t,
        c6: overrides.c6,
        c7: overrides.c7,
        c8,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionTerm {
    pub mode: usize,
    pub name: String,
    pub freq: Vec<i32>,
    pub parity: Parity,
    pub lambda: f64,
    pub coeff: f64,
}

/// `H(x, t) = Σ c_j φ_j(x) cosh(λ_j t)`, harmonic on `M × R` and equal to the
/// product at `t = 0` with vanishing normal derivative there.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicExtension {
    pub factors: Vec<usize>,
    pub sum_lambda: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub terms: Vec<ExtensionTerm>,
    #[serde(skip)]
    basis: SpectralBasis,
}

pub fn harmonic_extension_flat(basis: &SpectralBasis, series: &CoefficientSeries, t: f64) -> Result<HarmonicExtension> {
    if !basis.model.is_flat() {
        return Err(Error::Unsupported(format!("harmonic extension is only explicit on flat tori, not {}", basis.model.label())));
    }
    if series.method == Method::Quadrature {
        return Err(Error::Unsupported("harmonic extension needs exact coefficients".into()));
    }
    if series.entries.len() != basis.len() || series.lambda_max != basis.lambda_max {
        return param("coefficient series was not computed on this basis");
    }
    if !(t > 0.0 && t.is_finite()) {
        return param(format!("extension height T = {t} must be positive"));
    }
    let terms = series
        .entries
        .iter()
        .filter(|e| e.coeff.abs() > EXACT_ZERO)
        .map(|e| {
            let mode = basis.mode(e.index)?;
            let ModeRep::Torus { freq, parity } = &mode.rep else { unreachable!() };
            Ok(ExtensionTerm {
                mode: e.index,
                name: mode.rep.name(),
                freq: freq.clone(),
                parity: *parity,
                lambda: mode.lambda,
                coeff: e.coeff,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HarmonicExtension {
        factors: series.product.factors.clone(),
        sum_lambda: series.product.sum_lambda,
        t,
        terms,
        basis: basis.clone(),
    })
}

impl HarmonicExtension {
    fn phi(&self, term: &ExtensionTerm, x: &[f64]) -> Result<f64> {
        self.basis.evaluate(self.basis.mode(term.mode)?, x)
    }

    pub fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        let mut s = 0.0;
        for term in &self.terms {
            s += term.coeff * self.phi(term, x)? * (term.lambda * t).cosh();
        }
        Ok(s)
    }

    pub fn dt(&self, x: &[f64], t: f64) -> Result<f64> {
        let mut s = 0.0;
        for term in &self.terms {
            s += term.coeff * self.phi(term, x)? * term.lambda * (term.lambda * t).sinh();
        }
        Ok(s)
    }

    /// `Σ |c_j| cosh(λ_j t)`, an upper bound for `sup_x |H(x, t)|`.
    pub fn sup_bound(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.coeff.abs() * (term.lambda * t).cosh()).sum()
    }

    /// Largest `|−Δ_x H − ∂_t² H|` over `RESIDUAL_SAMPLES` seeded random points of `M × [−T, T]`,
    /// relative to `Σ |c_j| λ_j² cosh(λ_j T)`. The spatial Laplacian is taken
    /// from the frequencies, the normal one from the stored eigenvalues.
    pub fn laplace_residual(&self, seed: u64) -> Result<f64> {
        let ManifoldModel::FlatTorus { periods } = &self.basis.model else { unreachable!() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale: f64 =
            self.terms.iter().map(|term| term.coeff.abs() * term.lambda.powi(2) * (term.lambda * self.t).cosh()).sum();
        let mut worst: f64 = 0.0;
        for _ in 0..RESIDUAL_SAMPLES {
            let x: Vec<f64> = periods.iter().map(|p| rng.gen_range(0.0..*p)).collect();
            let t = rng.gen_range(-self.t..=self.t);
            let mut r = 0.0;
            for term in &self.terms {
                let k2: f64 = term.freq.iter().zip(periods).map(|(k, p)| (f64::from(*k) * TAU / p).powi(2)).sum();
                let u = term.coeff * self.phi(term, &x)? * (term.lambda * t).cosh();
                r += k2 * u - term.lambda.powi(2) * u;
            }
            worst = worst.max(r.abs());
        }
        Ok(if scale > 0.0 { worst / scale } else { worst })
    }

    /// Values of `H(·, t)` and `∂_t H(·, t)` on the basis grid.
    fn boundary_samples(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.basis.grid().len();
        let (mut h, mut ht) = (vec![0.0; n], vec![0.0; n]);
        for term in &self.terms {
            let s = self.basis.sample(term.mode)?;
            let (a, b) = (term.coeff * (term.lambda * t).cosh(), term.coeff * term.lambda * (term.lambda * t).sinh());
            for ((h, ht), s) in h.iter_mut().zip(ht.iter_mut()).zip(&s) {
                *h += a * s;
                *ht += b * s;
            }
        }
        Ok((h, ht))
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }
}

/// `c_i = e^{−Tλ_i} λ_i^{−1} ∫_{M×{T}} (φ_i ∂_t H + λ_i φ_i H)` with the slice
/// integral done on the basis grid.
pub fn greens_coefficient(ext: &HarmonicExtension, i: usize, t: f64) -> Result<f64> {
    let lambda = ext.basis.mode(i)?.lambda;
    if !(lambda > 0.0) {
        return param(format!("mode {i} has lambda = 0; the boundary identity divides by lambda"));
    }
    if !(t > 0.0 && t <= ext.t * (1.0 + 1e-12)) {
        return param(format!("height {t} outside (0, {}]", ext.t));
    }
    let (h, ht) = ext.boundary_samples(t)?;
    let phi = ext.basis.sample(i)?;
    let w = ext.basis.grid().weights();
    let integral: f64 = (0..w.len()).map(|k| w[k] * phi[k] * (ht[k] + lambda * h[k])).sum();
    Ok((-t * lambda).exp() * integral / lambda)
}

/// [`greens_coefficient`] for every mode with `λ_i > 0`, as `(id, c_i)`,
/// sharing one evaluation of the boundary data.
pub fn greens_coefficients(ext: &HarmonicExtension, t: f64) -> Result<Vec<(usize, f64)>> {
    if !(t > 0.0 && t <= ext.t * (1.0 + 1e-12)) {
        return param(format!("height {t} outside (0, {}]", ext.t));
    }
    let (h, ht) = ext.boundary_samples(t)?;
    let ph = ext.basis.project(&h)?;
    let pht = ext.basis.project(&ht)?;
    Ok(ext
        .basis
        .modes
        .iter()
        .filter(|m| m.lambda > 0.0)
        .map(|m| (m.id, (-t * m.lambda).exp() * (pht[m.id] + m.lambda * ph[m.id]) / m.lambda))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Points per axis of the spatial sampling lattice.
fn lattice_size(d: usize) -> usize {
    if d == 1 {
        512
    } else {
        96
    }
}

const HEIGHT_SAMPLES: usize = 65;

/// `sup |∂_t H|` on `M × [−Rδ/2, Rδ/2]` against `2/(δR) · sup |H|` on
/// `M × [−Rδ, Rδ]`, both sampled on a fixed lattice.
pub fn cauchy_estimate_check(ext: &HarmonicExtension, r: f64, delta: f64) -> Result<CauchyCheck> {
    if !(r > 0.0 && delta > 0.0) {
        return param("R and delta must be positive");
    }
    if r * delta > 2.0 * ext.t * (1.0 + 1e-12) {
        return param(format!("R·delta = {} exceeds 2T = {}", r * delta, 2.0 * ext.t));
    }
    let ManifoldModel::FlatTorus { periods } = &ext.basis.model else { unreachable!() };
    let n = lattice_size(periods.len());
    let points: Vec<Vec<f64>> = match periods.as_slice() {
        [p] => (0..n).map(|i| vec![p * i as f64 / n as f64]).collect(),
        [p, q] => (0..n * n).map(|k| vec![p * (k / n) as f64 / n as f64, q * (k % n) as f64 / n as f64]).collect(),
        _ => unreachable!(),
    };
    let table: Vec<Vec<f64>> =
        ext.terms.iter().map(|term| points.iter().map(|x| ext.phi(term, x)).collect()).collect::<Result<_>>()?;
    let sup = |half: f64, derivative: bool| -> f64 {
        let mut best: f64 = 0.0;
        for j in 0..HEIGHT_SAMPLES {
            let t = -half + 2.0 * half * j as f64 / (HEIGHT_SAMPLES - 1) as f64;
            let amp: Vec<f64> = ext
                .terms
                .iter()
                .map(|term| {
                    if derivative {
                        term.coeff * term.lambda * (term.lambda * t).sinh()
                    } else {
                        term.coeff * (term.lambda * t).cosh()
                    }
                })
                .collect();
            for p in 0..points.len() {
                let v: f64 = amp.iter().zip(&table).map(|(a, row)| a * row[p]).sum();
                best = best.max(v.abs());
            }
        }
        best
    };
    let lhs = sup(r * delta / 2.0, true);
    let rhs = 2.0 / (delta * r) * sup(r * delta, false);
    Ok(CauchyCheck { lhs, rhs, ok: lhs <= rhs * (1.0 + 1e-9) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{expand_product, ProductSpec};
    use crate::manifolds::{build_basis, Resolution};
    use std::f64::consts::PI;

    fn torus(d: usize, lmax: f64) -> SpectralBasis {
        build_basis(&ManifoldModel::flat_torus(d, TAU).unwrap(), lmax, &Resolution::default()).unwrap()
    }

    #[test]
    fn params_one_dimensional() {
        let p = compute_extension_params(&ManifoldModel::flat_torus(1, TAU).unwrap(), &Default::default()).unwrap();
        assert!((p.r1 - PI / 2.0).abs() < 1e-15 && (p.r3 - PI / 16.0).abs() < 1e-15);
        assert!((p.delta0 - 32.0 * E * E).abs() < 1e-12);
        assert!((p.delta - (32.0 * E * E).sqrt().recip()).abs() < 1e-17);
        assert!((p.delta - 0.0650324).abs() < 2e-7);
        assert!((p.t - 0.0063846).abs() < 1e-7);
        assert!((p.delta * p.delta * p.delta0 - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn params_two_dimensional_and_override() {
        let p = compute_extension_params(&ManifoldModel::flat_torus(2, TAU).unwrap(), &Default::default()).unwrap();
        assert!((p.delta0 - 256.0 * E * E).abs() < 1e-10);
        assert!((p.delta - 0.0229926).abs() < 2e-7);
        let o = ExtensionOverrides { r2: Some(0.5), ..Default::default() };
        let q = compute_extension_params(&ManifoldModel::flat_torus(1, TAU).unwrap(), &o).unwrap();
        assert_eq!(q.r3, 0.125);
        assert_eq!(q.t, 0.125 * q.delta / 2.0);
        assert!(compute_extension_params(&ManifoldModel::Sphere2, &Default::default()).is_err());
    }

    #[test]
    fn single_cosine_extension() {
        let basis = torus(1, 4.0);
        let spec = ProductSpec::from_names(&basis, &["cos1"]).unwrap();
        let series = expand_product(&basis, &spec).unwrap();
        let ext = harmonic_extension_flat(&basis, &series, 0.1).unwrap();
        let s = PI.sqrt();
        for (x, t) in [(0.3, 0.05), (2.0, -0.07)] {
            assert!((ext.value(&[x], t).unwrap() - x.cos() * t.cosh() / s).abs() < 1e-14);
        }
        assert!(ext.laplace_residual(RESIDUAL_SEED).unwrap() < 1e-12);
        let c = cauchy_estimate_check(&ext, PI / 16.0, 0.065).unwrap();
        let rd = PI / 16.0 * 0.065;
        assert!((c.lhs - (rd / 2.0).sinh() / s).abs() < 1e-15);
        assert!((c.rhs - 2.0 / rd * rd.cosh() / s).abs() < 1e-12);
        assert!(c.ok);
    }

    #[test]
    fn product_extension_and_green_identity() {
        let basis = torus(1, 8.0);
        let spec = ProductSpec::from_names(&basis, &["cos2", "cos3"]).unwrap();
        let series = expand_product(&basis, &spec).unwrap();
        let p = compute_extension_params(&basis.model, &Default::default()).unwrap();
        let ext = harmonic_extension_flat(&basis, &series, p.t).unwrap();
        let want_sup = (p.t.cosh() + (5.0 * p.t).cosh()) / (2.0 * PI.sqrt());
        assert!((ext.sup_bound(p.t) - want_sup).abs() < 1e-14);
        // φ2·φ3 = (φ1 + φ5)/(2√π) with φk = cos(kx)/√π
        let at_zero = (p.t.cosh() + (5.0 * p.t).cosh()) / (2.0 * PI);
        assert!((ext.value(&[0.0], p.t).unwrap() - at_zero).abs() < 1e-14);

        let cos5 = basis.find("cos5").unwrap().id;
        let cos4 = basis.find("cos4").unwrap().id;
        let a = greens_coefficient(&ext, cos5, 0.006).unwrap();
        assert!((a - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-10);
        assert!((a - series.coeff(cos5).unwrap()).abs() < 1e-10);
        assert!(greens_coefficient(&ext, cos4, 0.006).unwrap().abs() < 1e-12);
        let b = greens_coefficient(&ext, cos5, 0.003).unwrap();
        assert!((a - b).abs() < 1e-10);
        assert!(greens_coefficient(&ext, 0, 0.003).is_err());
        for (id, c) in greens_coefficients(&ext, 0.005).unwrap() {
            assert!((c - series.coeff(id).unwrap()).abs() < 1e-12);
        }

        let c = cauchy_estimate_check(&ext, p.r3, p.delta).unwrap();
        assert!(c.ok && c.lhs > 0.0);
    }

    #[test]
    fn constant_extension() {
        let basis = torus(2, 3.0);
        let series = expand_product(&basis, &ProductSpec::new(&basis, &[0]).unwrap()).unwrap();
        let ext = harmonic_extension_flat(&basis, &series, 0.01).unwrap();
        let v = 1.0 / TAU;
        assert!((ext.value(&[1.0, 2.0], 0.009).unwrap() - v).abs() < 1e-15);
        let c = cauchy_estimate_check(&ext, 0.1, 0.1).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.ok);
        assert!(cauchy_estimate_check(&ext, 1.0, 0.1).is_err());
    }
}
