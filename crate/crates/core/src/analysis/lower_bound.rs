use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linear_fit;
use crate::coefficients::{product_samples, ProductSpec};
use crate::error::{param, Error, Result};
use crate::manifolds::legendre::real_harmonic_cartesian;
use crate::manifolds::SpectralBasis;
use crate::numerics::{gauss_legendre, uniform_periodic, QuadratureGrid};

/// Norms at or below this value are treated as a numerical breakdown.
pub const NORM_BREAKDOWN: f64 = 1e-13;

/// Largest `k` accepted by the rotated-power experiment.
pub const MAX_REMARK_K: u32 = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundFit {
    #[serde(rename = "C3_hat")]
    pub c3_hat: f64,
    #[serde(rename = "C4_hat")]
    pub c4_hat: f64,
    /// `(Σλ, ‖∏φ‖)` per product.
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub r_squared: f64,
}

impl LowerBoundFit {
    pub fn envelope(&self, sum_lambda: f64) -> f64 {
        self.c3_hat * (-self.c4_hat * sum_lambda).exp()
    }

    /// Whether the envelope stays below every sample.
    pub fn is_below(&self) -> bool {
        self.samples.iter().all(|(s, n)| self.envelope(*s) <= n * (1.0 + 1e-12))
    }
}

/// `‖∏φ_k‖_{L²}` by quadrature on the basis grid.
pub fn product_norm(basis: &SpectralBasis, factors: &[usize]) -> Result<f64> {
    let modes = factors.iter().map(|id| basis.mode(*id)).collect::<Result<Vec<_>>>()?;
    let mut band = vec![0usize; basis.exactness().len()];
    for m in &modes {
        for (s, b) in band.iter_mut().zip(basis.mode_bandwidth(m)) {
            *s += b;
        }
    }
    for (a, (s, e)) in band.iter().zip(basis.exactness()).enumerate() {
        if 2 * s > *e {
            return Err(Error::Resolution(format!("axis {a}: squared product needs exactness {}, grid has {e}", 2 * s)));
        }
    }
    let f = product_samples(basis, factors)?;
    let sq: f64 = f.iter().zip(basis.grid().weights()).map(|(v, w)| w * v * v).sum();
    Ok(sq.max(0.0).sqrt())
}

/// Least squares on `log‖∏φ‖` against `Σλ`, then shifted down to touch the
/// lowest sample.
pub fn lower_bound_fit(samples: &[(f64, f64)]) -> Result<LowerBoundFit> {
    if samples.len() < 2 {
        return param("a lower-bound fit needs at least two samples");
    }
    if let Some((s, n)) = samples.iter().find(|(_, n)| !(*n > NORM_BREAKDOWN)) {
        return Err(Error::Breakdown(format!("product norm {n:e} at sum lambda {s} is numerically zero")));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (slope, _, r_squared) = linear_fit(&xs, &ys);
    let c4_hat = (-slope).max(0.0);
    let log_c3 = xs.iter().zip(&ys).map(|(x, y)| y + c4_hat * x).fold(f64::INFINITY, f64::min);
    Ok(LowerBoundFit { c3_hat: log_c3.exp(), c4_hat, samples: samples.to_vec(), slope, r_squared })
}

pub fn lower_bound_experiment(basis: &SpectralBasis, family: &[ProductSpec]) -> Result<LowerBoundFit> {
    if family.len() < 4 {
        return param(format!("lower-bound family has {} products; need at least 4", family.len()));
    }
    let order = family[0].order();
    if family.iter().any(|p| p.order() != order) {
        return param("products in a lower-bound family must share the number of factors");
    }
    let samples = family
        .iter()
        .map(|p| Ok((p.sum_lambda, product_norm(basis, &p.factors)?)))
        .collect::<Result<Vec<_>>>()?;
    lower_bound_fit(&samples)
}

/// Tensor grid in `(cos θ, φ)` on the unit sphere with polynomial exactness `e`.
fn sphere_grid(e: usize) -> Result<QuadratureGrid> {
    Ok(gauss_legendre(e / 2 + 1)?.tensor(&uniform_periodic(e + 1, std::f64::consts::TAU)?))
}

fn unit_vector(node: &[f64]) -> [f64; 3] {
    let (z, phi) = (node[0], node[1]);
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

/// `(Σλ, ‖Y_l^l · Y_l^l∘R‖)` for each degree, where `R` is the quarter turn
/// about the `x` axis and `Σλ = 2√(l(l+1))`.
pub fn sphere_rotated_sectoral_samples(degrees: RangeInclusive<u32>) -> Result<Vec<(f64, f64)>> {
    degrees
        .map(|l| {
            let grid = sphere_grid(4 * l as usize)?;
            let sq = grid.integrate(|node| {
                let [x, y, z] = unit_vector(node);
                let v = real_harmonic_cartesian(l, l as i32, [x, y, z])
                    * real_harmonic_cartesian(l, l as i32, [x, -z, y]);
                v * v
            });
            let lambda = f64::from(l * (l + 1)).sqrt();
            Ok((2.0 * lambda, sq.sqrt()))
        })
        .collect()
}

/// `‖Re(x+iy)^k · Re(x+iz)^k · Re(y+iz)^k‖_{L²(S²)}`. The integrand of the
/// squared norm has degree `6k`; `exactness` overrides that default.
pub fn sphere_remark_norm(k: u32, exactness: Option<usize>) -> Result<f64> {
    if !(1..=MAX_REMARK_K).contains(&k) {
        return param(format!("k = {k} outside 1..={MAX_REMARK_K}"));
    }
    let need = 6 * k as usize;
    let grid = match exactness {
        Some(e) if e < need => {
            return Err(Error::Resolution(format!("k = {k} needs exactness {need}, got {e}")));
        }
        Some(e) => sphere_grid(e)?,
        None => gauss_legendre(3 * k as usize + 5)?.tensor(&uniform_periodic(need + 9, std::f64::consts::TAU)?),
    };
    let sq = grid.integrate(|node| {
        let [x, y, z] = unit_vector(node);
        let v = Complex64::new(x, y).powu(k).re * Complex64::new(x, z).powu(k).re * Complex64::new(y, z).powu(k).re;
        v * v
    });
    Ok(sq.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemarkReport {
    pub samples: Vec<(u32, f64)>,
    /// Slope of `log norm` against `k`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub strictly_decreasing: bool,
}

pub fn sphere_remark_experiment(ks: RangeInclusive<u32>) -> Result<RemarkReport> {
    if ks.is_empty() {
        return param("empty k range");
    }
    let samples = ks.map(|k| Ok((k, sphere_remark_norm(k, None)?))).collect::<Result<Vec<_>>>()?;
    if let Some((k, n)) = samples.iter().find(|(_, n)| !(*n > NORM_BREAKDOWN)) {
        return Err(Error::Breakdown(format!("norm {n:e} at k = {k} is numerically zero")));
    }
    let xs: Vec<f64> = samples.iter().map(|s| f64::from(s.0)).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    let strictly_decreasing = samples.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(RemarkReport { samples, slope, intercept, r_squared, strictly_decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{build_basis, ManifoldModel, Resolution};
    use std::collections::BTreeMap;
    use std::f64::consts::{PI, TAU};

    /// `∫_{S²} x^a y^b z^c`.
    fn moment(a: u32, b: u32, c: u32) -> f64 {
        if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
            return 0.0;
        }
        let g = |s: u32| gamma((f64::from(s) + 1.0) / 2.0);
        2.0 * g(a) * g(b) * g(c) / gamma(f64::from(a + b + c + 3) / 2.0)
    }

    /// Γ at positive half-integers and integers.
    fn gamma(x: f64) -> f64 {
        let mut v = if x.fract() == 0.0 { 1.0 } else { PI.sqrt() };
        let mut t = if x.fract() == 0.0 { 1.0 } else { 0.5 };
        while t < x - 1e-9 {
            v *= t;
            t += 1.0;
        }
        v
    }

    type Poly = BTreeMap<(u32, u32, u32), f64>;

    fn mul(p: &Poly, q: &Poly) -> Poly {
        let mut r = Poly::new();
        for (a, x) in p {
            for (b, y) in q {
                *r.entry((a.0 + b.0, a.1 + b.1, a.2 + b.2)).or_insert(0.0) += x * y;
            }
        }
        r
    }

    #[test]
    fn remark_k1_matches_monomial_moments() {
        // Re(x+iy) Re(x+iz) Re(y+iz) = x·x·y
        let p: Poly = [((2, 1, 0), 1.0)].into_iter().collect();
        let sq = mul(&p, &p);
        let exact: f64 = sq.iter().map(|(e, c)| c * moment(e.0, e.1, e.2)).sum();
        let got = sphere_remark_norm(1, None).unwrap();
        assert!((got - exact.sqrt()).abs() < 1e-13, "{got} vs {}", exact.sqrt());
        assert!((moment(0, 0, 0) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn remark_k2_matches_monomial_moments() {
        // (x²−y²)(x²−z²)(y²−z²)
        let a: Poly = [((2, 0, 0), 1.0), ((0, 2, 0), -1.0)].into_iter().collect();
        let b: Poly = [((2, 0, 0), 1.0), ((0, 0, 2), -1.0)].into_iter().collect();
        let c: Poly = [((0, 2, 0), 1.0), ((0, 0, 2), -1.0)].into_iter().collect();
        let p = mul(&mul(&a, &b), &c);
        let sq = mul(&p, &p);
        let exact: f64 = sq.iter().map(|(e, c)| c * moment(e.0, e.1, e.2)).sum();
        let got = sphere_remark_norm(2, Some(12)).unwrap();
        assert!((got - exact.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn remark_resolution_and_range() {
        assert!(matches!(sphere_remark_norm(3, Some(17)), Err(Error::Resolution(_))));
        assert!(sphere_remark_norm(0, None).is_err());
        assert!(sphere_remark_norm(25, None).is_err());
    }

    #[test]
    fn torus_self_products_have_constant_norm() {
        let basis = build_basis(&ManifoldModel::flat_torus(1, TAU).unwrap(), 8.0, &Resolution::default()).unwrap();
        let family: Vec<ProductSpec> =
            (1..=8)
                .map(|k| {
                    let name = format!("cos{k}");
                    ProductSpec::from_names(&basis, &[&name, &name]).unwrap()
                })
                .collect();
        let fit = lower_bound_experiment(&basis, &family).unwrap();
        let want = 3f64.sqrt() / (2.0 * PI.sqrt());
        for (_, n) in &fit.samples {
            assert!((n - want).abs() < 1e-12);
        }
        assert!(fit.c4_hat.abs() < 1e-12);
        assert!((fit.c3_hat - want).abs() < 1e-12);
        assert!(fit.is_below());
    }

    #[test]
    fn single_factor_family() {
        let basis = build_basis(&ManifoldModel::Sphere2, 5.0, &Resolution::default()).unwrap();
        let family: Vec<ProductSpec> = [1, 4, 9, 16].iter().map(|id| ProductSpec::new(&basis, &[*id]).unwrap()).collect();
        let fit = lower_bound_experiment(&basis, &family).unwrap();
        assert!((fit.c3_hat - 1.0).abs() < 1e-12 && fit.c4_hat < 1e-12);
    }

    #[test]
    fn mixed_orders_rejected() {
        let basis = build_basis(&ManifoldModel::flat_torus(1, TAU).unwrap(), 4.0, &Resolution::default()).unwrap();
        let mut family: Vec<ProductSpec> = (1..=3).map(|id| ProductSpec::new(&basis, &[id, id]).unwrap()).collect();
        family.push(ProductSpec::new(&basis, &[1]).unwrap());
        assert!(lower_bound_experiment(&basis, &family).is_err());
    }

    #[test]
    fn breakdown_on_zero_norm() {
        assert!(matches!(lower_bound_fit(&[(1.0, 0.5), (2.0, 0.0)]), Err(Error::Breakdown(_))));
    }
}
