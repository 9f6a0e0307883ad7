//! Orthonormal associated Legendre functions and real spherical harmonics.
//!
//! `legendre_table(lmax, x)` returns
//! `sqrt((2l+1)/(4π) · (l-m)!/(l+m)!) · P_l^m(x)` for `0 ≤ m ≤ l ≤ lmax`,
//! without the Condon-Shortley phase, so that every entry is nonnegative at
//! `x = 1` and the real harmonics built from it are
//!
//! ```text
//! Y_l^m  = √2 · P̄_l^m(cos θ) · cos(mφ)     m > 0
//! Y_l^0  =      P̄_l^0(cos θ)
//! Y_l^-m = √2 · P̄_l^m(cos θ) · sin(mφ)     m > 0
//! ```

use std::f64::consts::{PI, SQRT_2};

#[inline]
pub fn table_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

pub fn legendre_table(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; table_index(lmax, lmax) + 1];
    let sin_theta = (1.0 - x * x).max(0.0).sqrt();

    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= sin_theta * ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt();
        }
        out[table_index(m, m)] = pmm;
        if m == lmax {
            break;
        }
        let mf = m as f64;
        let mut p_prev = pmm;
        let mut p_cur = x * (2.0 * mf + 3.0).sqrt() * pmm;
        out[table_index(m + 1, m)] = p_cur;
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            let p_next = a * (x * p_cur - b * p_prev);
            out[table_index(l, m)] = p_next;
            p_prev = p_cur;
            p_cur = p_next;
        }
    }
    out
}

/// Azimuthal factor of the real harmonic of order `m`, including the √2.
#[inline]
pub fn azimuthal(m: i32, phi: f64) -> f64 {
    match m.signum() {
        0 => 1.0,
        1 => SQRT_2 * (f64::from(m) * phi).cos(),
        _ => SQRT_2 * (f64::from(-m) * phi).sin(),
    }
}

/// Real spherical harmonic `Y_l^m(θ, φ)`.
pub fn real_harmonic(l: u32, m: i32, theta: f64, phi: f64) -> f64 {
    let table = legendre_table(l as usize, theta.cos());
    table[table_index(l as usize, m.unsigned_abs() as usize)] * azimuthal(m, phi)
}

/// Real spherical harmonic at a unit vector `(x, y, z)`.
pub fn real_harmonic_cartesian(l: u32, m: i32, p: [f64; 3]) -> f64 {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let theta = (p[2] / r).clamp(-1.0, 1.0).acos();
    let phi = p[1].atan2(p[0]);
    real_harmonic(l, m, theta, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::gauss_legendre;

    #[test]
    fn low_order_closed_forms() {
        let x: f64 = 0.3;
        let t = legendre_table(2, x);
        let c = 1.0 / (4.0 * PI);
        assert!((t[table_index(0, 0)] - c.sqrt()).abs() < 1e-15);
        assert!((t[table_index(1, 0)] - (3.0 * c).sqrt() * x).abs() < 1e-15);
        // P_1^1 = sin θ, normalization sqrt(3/(4π) · 1/2)
        let s = (1.0 - x * x).sqrt();
        assert!((t[table_index(1, 1)] - (1.5 * c).sqrt() * s).abs() < 1e-15);
        // P_2^0 = (3x² - 1)/2
        assert!((t[table_index(2, 0)] - (5.0 * c).sqrt() * (3.0 * x * x - 1.0) / 2.0).abs() < 1e-15);
        // P_2^2 = 3 sin²θ, normalization sqrt(5/(4π) · 1/24)
        assert!((t[table_index(2, 2)] - (5.0 * c / 24.0).sqrt() * 3.0 * s * s).abs() < 1e-15);
    }

    #[test]
    fn north_pole_values() {
        assert!((real_harmonic(0, 0, 0.7, 1.1) - 0.2820947918).abs() < 1e-10);
        assert!((real_harmonic(1, 0, 0.0, 0.0) - 0.4886025119).abs() < 1e-10);
    }

    #[test]
    fn columns_are_orthonormal_in_x() {
        // ∫ P̄_l^m P̄_l'^m dx · 2π = δ_ll'  (the azimuthal normalization supplies the rest)
        let lmax = 30;
        let g = gauss_legendre(40).unwrap();
        let tables: Vec<Vec<f64>> = g.nodes().map(|x| legendre_table(lmax, x[0])).collect();
        for m in [0usize, 1, 5, 17] {
            for l in m..=lmax {
                for l2 in m..=lmax {
                    let v: f64 = tables
                        .iter()
                        .zip(g.weights())
                        .map(|(t, w)| w * t[table_index(l, m)] * t[table_index(l2, m)])
                        .sum::<f64>()
                        * 2.0
                        * PI;
                    let want = if l == l2 { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-12, "m={m} l={l} l2={l2} v={v}");
                }
            }
        }
    }
}
