//! Fourier-Galerkin discretization of periodic Sturm-Liouville problems
//!
//! ```text
//! -(p u')' + m² q u = μ w u      on the circle [0, 2π)
//! ```
//!
//! in the real orthonormal Fourier basis
//! `1/√(2π), cos s/√π, sin s/√π, cos 2s/√π, sin 2s/√π, …` of size `2N + 1`.

use std::f64::consts::PI;

use crate::error::{param, Error, Result};
use crate::numerics::eigen::{Matrix, SymmetricPencil};
use crate::numerics::quadrature::uniform_periodic;

pub const MAX_TRUNCATION: usize = 1024;

/// Extra trapezoid points beyond `4N`; absorbs the analytic (not band-limited)
/// weight `1/a` whose Fourier coefficients decay geometrically.
const QUADRATURE_MARGIN: usize = 64;

/// Frequency of basis function `j`: 0 for the constant, `k` for `cos ks`/`sin ks`.
pub fn basis_frequency(j: usize) -> usize {
    j.div_ceil(2)
}

/// Value and first two derivatives of basis function `j` at `s`.
pub fn fourier_basis(j: usize, s: f64) -> (f64, f64, f64) {
    if j == 0 {
        return (1.0 / (2.0 * PI).sqrt(), 0.0, 0.0);
    }
    let k = basis_frequency(j) as f64;
    let norm = 1.0 / PI.sqrt();
    let (sin, cos) = (k * s).sin_cos();
    if j % 2 == 1 {
        (norm * cos, -norm * k * sin, -norm * k * k * cos)
    } else {
        (norm * sin, norm * k * cos, -norm * k * k * sin)
    }
}

/// Evaluate `Σ c_j e_j(s)` together with its first two derivatives.
pub fn fourier_series(coeffs: &[f64], s: f64) -> (f64, f64, f64) {
    let mut out = (coeffs.first().copied().unwrap_or(0.0) / (2.0 * PI).sqrt(), 0.0, 0.0);
    let norm = 1.0 / PI.sqrt();
    let (s1, c1) = s.sin_cos();
    // Angle addition recurrence for (cos ks, sin ks).
    let (mut ck, mut sk) = (1.0, 0.0);
    for k in 1..=coeffs.len() / 2 {
        let next_c = ck * c1 - sk * s1;
        let next_s = sk * c1 + ck * s1;
        ck = next_c;
        sk = next_s;
        let kf = k as f64;
        let a = coeffs[2 * k - 1] * norm;
        let b = coeffs.get(2 * k).copied().unwrap_or(0.0) * norm;
        out.0 += a * ck + b * sk;
        out.1 += kf * (b * ck - a * sk);
        out.2 -= kf * kf * (a * ck + b * sk);
    }
    out
}

/// Coefficient weights of a periodic Sturm-Liouville operator.
pub struct SturmLiouville<'a> {
    pub stiffness: &'a dyn Fn(f64) -> f64,
    pub potential: &'a dyn Fn(f64) -> f64,
    pub mass: &'a dyn Fn(f64) -> f64,
}

pub fn assemble_sturm_liouville(op: &SturmLiouville<'_>, m: u32, n: usize) -> Result<SymmetricPencil> {
    if n > MAX_TRUNCATION {
        return param(format!("Galerkin truncation N = {n} exceeds {MAX_TRUNCATION}"));
    }
    let dim = 2 * n + 1;
    let grid = uniform_periodic(4 * n + QUADRATURE_MARGIN, 2.0 * PI)?;
    let m2 = f64::from(m) * f64::from(m);

    let mut a = Matrix::zeros(dim);
    let mut b = Matrix::zeros(dim);
    let mut val = vec![0.0; dim];
    let mut der = vec![0.0; dim];
    for (node, h) in grid.nodes().zip(grid.weights()) {
        let s = node[0];
        let (p, q, w) = ((op.stiffness)(s), (op.potential)(s), (op.mass)(s));
        for (name, v) in [("stiffness", p), ("mass", w)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Geometry(format!("{name} weight {v} at s = {s} is not positive")));
            }
        }
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::Geometry(format!("potential weight {q} at s = {s} is negative")));
        }
        for j in 0..dim {
            let (v, d, _) = fourier_basis(j, s);
            val[j] = v;
            der[j] = d;
        }
        let (hp, hq, hw) = (h * p, h * m2 * q, h * w);
        for i in 0..dim {
            for j in 0..=i {
                a[(i, j)] += hp * der[i] * der[j] + hq * val[i] * val[j];
                b[(i, j)] += hw * val[i] * val[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            a[(j, i)] = a[(i, j)];
            b[(j, i)] = b[(i, j)];
        }
    }
    SymmetricPencil::new(a, b)
}

/// Weak form of `-(1/b)(a u')' + (m²/a²) u` for a surface of revolution with
/// volume density `a` and mass weight `b` (both `f(s)` for the metric `ds² + f² dθ²`).
pub fn assemble_periodic_galerkin(
    a: &dyn Fn(f64) -> f64,
    b: &dyn Fn(f64) -> f64,
    m: u32,
    n: usize,
) -> Result<SymmetricPencil> {
    let potential = |s: f64| 1.0 / a(s);
    assemble_sturm_liouville(&SturmLiouville { stiffness: a, potential: &potential, mass: b }, m, n)
}
