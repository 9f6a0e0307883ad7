//! Doubling indices, sublevel-set measures and the Remez-type bound
//! `μ(E_a) ≤ C_R e^{−βa/N} s(Q)^d`, plus the good-set construction that
//! bounds every factor of a product from below on half of a cube.
//!
//! All sups and measures are taken on fixed deterministic lattices, so the
//! sublevel measures are exactly monotone in the threshold.

use serde::{Deserialize, Serialize};

use crate::analysis::linear_fit;
use crate::analysis::product_norm;
use crate::coefficients::ProductSpec;
use crate::error::{param, Error, Result};
use crate::manifolds::SpectralBasis;

/// A real function on a chart of `R^d`.
pub trait Field {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn label(&self) -> String;
}

/// A closure as a [`Field`].
pub struct FnField<F> {
    dim: usize,
    label: String,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnField<F> {
    pub fn new(dim: usize, label: impl Into<String>, f: F) -> Self {
        Self { dim, label: label.into(), f }
    }
}

impl<F: Fn(&[f64]) -> f64> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.f)(x))
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Basis mode `φ_k` in the chart coordinates of its manifold.
pub struct ModeField<'a> {
    basis: &'a SpectralBasis,
    id: usize,
}

impl<'a> ModeField<'a> {
    pub fn new(basis: &'a SpectralBasis, id: usize) -> Result<Self> {
        basis.mode(id)?;
        Ok(Self { basis, id })
    }
}

impl Field for ModeField<'_> {
    fn dim(&self) -> usize {
        self.basis.model.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.basis.evaluate(&self.basis.modes[self.id], x)
    }
    fn label(&self) -> String {
        self.basis.modes[self.id].rep.name()
    }
}

/// Harmonic lift `h_k(x, y) = φ_k(x) e^{λ_k y}` on `M × R`.
pub struct Lift<'a> {
    mode: ModeField<'a>,
    lambda: f64,
}

pub fn lift(basis: &SpectralBasis, id: usize) -> Result<Lift<'_>> {
    let lambda = basis.mode(id)?.lambda;
    Ok(Lift { mode: ModeField::new(basis, id)?, lambda })
}

impl Field for Lift<'_> {
    fn dim(&self) -> usize {
        self.mode.dim() + 1
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        let d = self.mode.dim();
        Ok(self.mode.value(&x[..d])? * (self.lambda * x[d]).exp())
    }
    fn label(&self) -> String {
        format!("lift({})", self.mode.label())
    }
}

/// Axis-parallel cube with center `center` and side length `side`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        if center.is_empty() || center.len() > 3 || center.iter().any(|c| !c.is_finite()) {
            return param(format!("cube center {center:?} must have 1 to 3 finite coordinates"));
        }
        if !(side > 0.0 && side.is_finite()) {
            return param(format!("cube side {side} must be positive"));
        }
        Ok(Self { center, side })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn half(&self) -> Cube {
        Cube { center: self.center.clone(), side: self.side / 2.0 }
    }

    pub fn measure(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }
}

/// Nodes per axis of the closed lattice used for sups over balls.
fn ball_lattice(d: usize) -> usize {
    match d {
        1 => 4097,
        2 => 257,
        _ => 65,
    }
}

/// Cells per axis of the midpoint lattice used for measures.
pub fn cell_lattice(d: usize) -> usize {
    match d {
        1 => 65536,
        2 => 256,
        _ => 128,
    }
}

fn check_dim(field: &dyn Field, d: usize) -> Result<()> {
    if field.dim() != d {
        return param(format!("{} is {}-dimensional, the domain is {d}-dimensional", field.label(), field.dim()));
    }
    Ok(())
}

/// Visit every multi-index of an `n^d` lattice.
fn for_each_index(d: usize, n: usize, mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    let mut idx = vec![0usize; d];
    loop {
        f(&idx)?;
        let mut a = d;
        loop {
            if a == 0 {
                return Ok(());
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < n {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// `sup |u|` over lattice points of the closed ball `B(center, rho)`.
pub fn ball_sup(field: &dyn Field, center: &[f64], rho: f64) -> Result<f64> {
    check_dim(field, center.len())?;
    let n = ball_lattice(center.len());
    let h = 2.0 * rho / (n - 1) as f64;
    let mut best: f64 = 0.0;
    let mut x = vec![0.0; center.len()];
    for_each_index(center.len(), n, |idx| {
        let mut r2 = 0.0;
        for (a, i) in idx.iter().enumerate() {
            let off = if 2 * i + 1 == n { 0.0 } else { -rho + h * *i as f64 };
            x[a] = center[a] + off;
            r2 += off * off;
        }
        if r2 <= rho * rho * (1.0 + 1e-12) {
            best = best.max(field.value(&x)?.abs());
        }
        Ok(())
    })?;
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub function: String,
    pub center: Vec<f64>,
    pub r: f64,
    pub sup_r: f64,
    pub sup_2r: f64,
    #[serde(rename = "N")]
    pub n: f64,
}

/// `N = ln(sup_{B_2r}|u| / sup_{B_r}|u|)`.
pub fn doubling_index(field: &dyn Field, center: &[f64], r: f64) -> Result<DoublingReport> {
    if !(r > 0.0 && r.is_finite()) {
        return param(format!("radius {r} must be positive"));
    }
    let sup_r = ball_sup(field, center, r)?;
    if !(sup_r >= 1e-300) {
        return Err(Error::DegenerateProduct(format!("{} vanishes on the ball of radius {r}", field.label())));
    }
    let sup_2r = ball_sup(field, center, 2.0 * r)?.max(sup_r);
    Ok(DoublingReport { function: field.label(), center: center.to_vec(), r, sup_r, sup_2r, n: (sup_2r / sup_r).ln() })
}

/// Midpoint values `|u|` on the lattice of `cube`, with the cell volume.
fn cell_values(field: &dyn Field, cube: &Cube, scale: f64) -> Result<(Vec<f64>, f64)> {
    check_dim(field, cube.dim())?;
    let d = cube.dim();
    let n = cell_lattice(d);
    let h = cube.side / n as f64;
    let lo: Vec<f64> = cube.center.iter().map(|c| c - cube.side / 2.0).collect();
    let mut out = Vec::with_capacity(n.pow(d as u32));
    let mut x = vec![0.0; d];
    for_each_index(d, n, |idx| {
        for a in 0..d {
            x[a] = lo[a] + h * (idx[a] as f64 + 0.5);
        }
        out.push((field.value(&x)? * scale).abs());
        Ok(())
    })?;
    Ok((out, h.powi(d as i32)))
}

fn count_below(values: &[f64], a: f64) -> usize {
    let level = (-a).exp();
    values.iter().filter(|v| **v < level).count()
}

/// Lattice measure of `E_a = {x ∈ ½Q : |u(x)| < e^{−a}}`.
pub fn sublevel_measure(field: &dyn Field, cube: &Cube, a: f64) -> Result<f64> {
    let (values, cell) = cell_values(field, &cube.half(), 1.0)?;
    Ok(count_below(&values, a) as f64 * cell)
}

/// Thresholds `0.25, 0.5, …, 12`.
pub fn default_a_grid() -> Vec<f64> {
    (1..=48).map(|k| f64::from(k) * 0.25).collect()
}

/// Measures covering fewer lattice cells than this stay out of the fit.
pub const MIN_FIT_CELLS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemezReport {
    pub function: String,
    pub cube: Cube,
    pub a_grid: Vec<f64>,
    pub measures: Vec<f64>,
    pub half_cube_measure: f64,
    /// `sup_Q |u|` used to normalize.
    pub sup_q: f64,
    /// Doubling index on the balls inscribed in `½Q` and `Q`.
    #[serde(rename = "N")]
    pub n: f64,
    /// `None` when too few measures are resolvable for a fit.
    pub beta_hat: Option<f64>,
    #[serde(rename = "CR_hat")]
    pub cr_hat: Option<f64>,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    /// Indices into `a_grid` used in the least-squares fit.
    pub fitted: Vec<usize>,
}

impl RemezReport {
    /// `C_R e^{−βa/N} s^d`.
    pub fn bound(&self, a: f64) -> Option<f64> {
        let (slope, cr) = (self.slope?, self.cr_hat?);
        Some(cr * (slope * a).exp() * self.cube.measure())
    }

    pub fn dominates(&self) -> bool {
        self.a_grid.iter().zip(&self.measures).all(|(a, m)| match self.bound(*a) {
            Some(b) => *m <= b * (1.0 + 1e-12),
            None => *m == 0.0,
        })
    }
}

pub fn remez_fit(field: &dyn Field, cube: &Cube, a_grid: &[f64]) -> Result<RemezReport> {
    if a_grid.len() < 5 {
        return param(format!("a-grid has {} points; need at least 5", a_grid.len()));
    }
    if a_grid.windows(2).any(|w| !(w[1] > w[0])) || !(a_grid[0] > 0.0) {
        return param("a-grid must be positive and strictly ascending");
    }
    let sup_q = {
        let (v, _) = cell_values(field, cube, 1.0)?;
        v.into_iter().fold(0.0, f64::max)
    };
    if !(sup_q > 1e-300) {
        return Err(Error::DegenerateProduct(format!("{} vanishes on the cube", field.label())));
    }
    let (values, cell) = cell_values(field, &cube.half(), 1.0 / sup_q)?;
    let half_cube_measure = values.len() as f64 * cell;
    let counts: Vec<usize> = a_grid.iter().map(|a| count_below(&values, *a)).collect();
    let measures: Vec<f64> = counts.iter().map(|c| *c as f64 * cell).collect();
    let n = doubling_index(field, &cube.center, cube.side / 4.0)?.n;

    let fitted: Vec<usize> =
        (0..a_grid.len()).filter(|j| counts[*j] >= MIN_FIT_CELLS && counts[*j] < values.len()).collect();
    let mut report = RemezReport {
        function: field.label(),
        cube: cube.clone(),
        a_grid: a_grid.to_vec(),
        measures,
        half_cube_measure,
        sup_q,
        n,
        beta_hat: None,
        cr_hat: None,
        slope: None,
        r_squared: None,
        fitted,
    };
    if report.fitted.len() < 2 {
        return Ok(report);
    }
    let xs: Vec<f64> = report.fitted.iter().map(|j| a_grid[*j]).collect();
    let ys: Vec<f64> = report.fitted.iter().map(|j| report.measures[*j].ln()).collect();
    let (slope, _, r2) = linear_fit(&xs, &ys);
    let log_s = cube.dim() as f64 * cube.side.ln();
    let log_cr = a_grid
        .iter()
        .zip(&report.measures)
        .filter(|(_, m)| **m > 0.0)
        .map(|(a, m)| m.ln() - slope * a - log_s)
        .fold(f64::NEG_INFINITY, f64::max);
    report.beta_hat = Some(-slope * n);
    report.cr_hat = Some(log_cr.exp());
    report.slope = Some(slope);
    report.r_squared = Some(r2);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodSetReport {
    pub product: ProductSpec,
    pub cube: Cube,
    /// Smallest grid threshold per factor meeting the `μ(½Q)/(2n)` budget.
    pub thresholds: Vec<f64>,
    /// `μ{x ∈ ½Q : |φ_kj| < e^{−a_j}}` per factor.
    pub factor_measures: Vec<f64>,
    pub half_cube_measure: f64,
    /// Measure of `E = ½Q` minus every factor's sublevel set.
    pub good_measure: f64,
    /// `min_E ∏|φ_kj|` on the lattice.
    pub min_product_on_e: f64,
    /// `∏ e^{−a_j}`.
    pub product_floor: f64,
    /// `‖∏φ‖_{L²(E)}` in chart measure.
    pub norm_on_e: f64,
    /// `μ(E)^{1/2} ∏ e^{−a_j}`.
    pub chain_bound: f64,
    /// `‖∏φ‖_{L²(M)}` by quadrature on the basis grid, when the chart measure is
    /// the Riemannian one.
    pub full_norm: Option<f64>,
    pub chain_ok: bool,
}

pub fn good_set_experiment(
    basis: &SpectralBasis,
    product: &ProductSpec,
    cube: &Cube,
    a_grid: &[f64],
) -> Result<GoodSetReport> {
    if a_grid.is_empty() || a_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return param("a-grid must be nonempty and strictly ascending");
    }
    let nf = product.factors.len();
    if nf == 0 {
        return param("a product needs at least one factor");
    }
    let half = cube.half();
    let mut columns = Vec::with_capacity(nf);
    let mut cell = 0.0;
    for id in &product.factors {
        let (v, c) = cell_values(&ModeField::new(basis, *id)?, &half, 1.0)?;
        columns.push(v);
        cell = c;
    }
    let points = columns[0].len();
    let half_cube_measure = points as f64 * cell;
    let budget = half_cube_measure / (2.0 * nf as f64);

    let mut thresholds = Vec::with_capacity(nf);
    let mut factor_measures = Vec::with_capacity(nf);
    for (col, id) in columns.iter().zip(&product.factors) {
        let hit = a_grid.iter().map(|a| (*a, count_below(col, *a) as f64 * cell)).find(|(_, m)| *m <= budget);
        let Some((a, m)) = hit else {
            return Err(Error::GridExhausted(format!(
                "factor {} keeps a sublevel set above {budget:.3e} up to a = {}",
                basis.modes[*id].rep.name(),
                a_grid[a_grid.len() - 1]
            )));
        };
        thresholds.push(a);
        factor_measures.push(m);
    }

    let levels: Vec<f64> = thresholds.iter().map(|a| (-a).exp()).collect();
    let mut good = 0usize;
    let mut min_product = f64::INFINITY;
    let mut sq = 0.0;
    for p in 0..points {
        if columns.iter().zip(&levels).all(|(c, l)| c[p] >= *l) {
            let v: f64 = columns.iter().map(|c| c[p]).product();
            good += 1;
            min_product = min_product.min(v);
            sq += v * v * cell;
        }
    }
    let good_measure = good as f64 * cell;
    if good_measure < half_cube_measure / 2.0 {
        return Err(Error::Breakdown(format!(
            "good set measure {good_measure:.6e} below half of {half_cube_measure:.6e}"
        )));
    }
    let product_floor: f64 = levels.iter().product();
    let norm_on_e = sq.sqrt();
    let chain_bound = good_measure.sqrt() * product_floor;
    let full_norm = if basis.model.is_flat() { Some(product_norm(basis, &product.factors)?) } else { None };
    let chain_ok = norm_on_e >= chain_bound && full_norm.is_none_or(|f| f >= norm_on_e * (1.0 - 1e-9));
    Ok(GoodSetReport {
        product: product.clone(),
        cube: cube.clone(),
        thresholds,
        factor_measures,
        half_cube_measure,
        good_measure,
        min_product_on_e: min_product,
        product_floor,
        norm_on_e,
        chain_bound,
        full_norm,
        chain_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{build_basis, ManifoldModel, Resolution};
    use num_complex::Complex64;
    use std::f64::consts::{LN_2, TAU};

    fn re_power(k: u32) -> impl Fn(&[f64]) -> f64 {
        move |x: &[f64]| Complex64::new(x[0], x[1]).powu(k).re
    }

    #[test]
    fn homogeneous_doubling() {
        for k in 1..=5 {
            let u = FnField::new(2, "re", re_power(k));
            for r in [0.1, 0.7] {
                let rep = doubling_index(&u, &[0.0, 0.0], r).unwrap();
                assert!((rep.n - f64::from(k) * LN_2).abs() < 1e-6);
            }
        }
        let one = FnField::new(1, "one", |_: &[f64]| 1.0);
        assert_eq!(doubling_index(&one, &[0.3], 0.2).unwrap().n, 0.0);
        let zero = FnField::new(1, "zero", |_: &[f64]| 0.0);
        assert!(doubling_index(&zero, &[0.0], 0.2).is_err());
    }

    #[test]
    fn identity_sublevel() {
        let q = Cube::new(vec![0.0], 2.0).unwrap();
        let u = FnField::new(1, "x", |x: &[f64]| x[0]);
        let h = 1.0 / cell_lattice(1) as f64;
        assert!((sublevel_measure(&u, &q, 2.0).unwrap() - 2.0 * (-2.0f64).exp()).abs() <= h);
        let one = FnField::new(1, "one", |_: &[f64]| 1.0);
        assert_eq!(sublevel_measure(&one, &q, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn remez_identity_recovers_ln2() {
        let q = Cube::new(vec![0.0], 2.0).unwrap();
        let u = FnField::new(1, "x", |x: &[f64]| x[0]);
        let rep = remez_fit(&u, &q, &default_a_grid()).unwrap();
        assert!((rep.n - LN_2).abs() < 1e-9);
        let beta = rep.beta_hat.unwrap();
        assert!((beta - LN_2).abs() < 0.02 * LN_2, "beta {beta}");
        assert!(rep.dominates());
        assert!(rep.measures.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn remez_constant_is_flagged() {
        let q = Cube::new(vec![0.0, 0.0], 1.0).unwrap();
        let u = FnField::new(2, "one", |_: &[f64]| 3.0);
        let rep = remez_fit(&u, &q, &default_a_grid()).unwrap();
        assert!(rep.beta_hat.is_none() && rep.measures.iter().all(|m| *m == 0.0));
        assert!(rep.dominates());
    }

    #[test]
    fn remez_harmonic_polynomial() {
        let q = Cube::new(vec![0.0, 0.0], 1.0).unwrap();
        let u = FnField::new(2, "re z^4", re_power(4));
        let rep = remez_fit(&u, &q, &default_a_grid()).unwrap();
        assert!(rep.beta_hat.unwrap() > 0.0);
        assert!(rep.dominates());
    }

    #[test]
    fn good_set_on_circle() {
        let basis = build_basis(&ManifoldModel::flat_torus(1, TAU).unwrap(), 3.0, &Resolution::default()).unwrap();
        let q = Cube::new(vec![0.0], 2.0).unwrap();
        let spec = ProductSpec::from_names(&basis, &["cos1", "cos2"]).unwrap();
        let rep = good_set_experiment(&basis, &spec, &q, &default_a_grid()).unwrap();
        assert_eq!(rep.thresholds, vec![0.75, 1.0]);
        assert!(rep.good_measure >= rep.half_cube_measure / 2.0);
        assert!(rep.min_product_on_e >= rep.product_floor);
        assert!(rep.chain_ok);

        let constant = ProductSpec::new(&basis, &[0]).unwrap();
        let rep = good_set_experiment(&basis, &constant, &q, &default_a_grid()).unwrap();
        // φ0 = 1/√(2π) ≈ 0.399 sits below e^{−a} until a = 1.
        assert_eq!(rep.thresholds, vec![1.0]);
        assert_eq!(rep.good_measure, rep.half_cube_measure);
    }

    #[test]
    fn lift_grows_along_the_normal() {
        let basis = build_basis(&ManifoldModel::flat_torus(1, TAU).unwrap(), 3.0, &Resolution::default()).unwrap();
        let id = basis.find("cos2").unwrap().id;
        let h = lift(&basis, id).unwrap();
        assert_eq!(h.dim(), 2);
        let v = h.value(&[0.0, 0.5]).unwrap();
        assert!((v - (1.0f64).exp() / std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }
}
