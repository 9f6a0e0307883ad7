//! Exact Fourier coefficients of products of flat-torus modes by frequency
//! convolution: each factor is split into `e^{±i k·x}` and the products of
//! exponentials are collected by total frequency.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::manifolds::{ManifoldModel, Mode, ModeRep, Parity, SpectralBasis};

/// Complex amplitudes `a(q)` with `f = Σ_q a(q) e^{i ω q·x}`.
pub fn frequency_content(basis: &SpectralBasis, factors: &[&Mode]) -> BTreeMap<Vec<i32>, Complex64> {
    let ManifoldModel::FlatTorus { periods } = &basis.model else {
        unreachable!("frequency content of a non-flat model");
    };
    let vol: f64 = periods.iter().product();
    let mut acc: BTreeMap<Vec<i32>, Complex64> = BTreeMap::new();
    acc.insert(vec![0; periods.len()], Complex64::new(1.0, 0.0));
    for mode in factors {
        let ModeRep::Torus { freq, parity } = &mode.rep else { unreachable!() };
        let mut next = BTreeMap::new();
        if freq.iter().all(|k| *k == 0) {
            let s = 1.0 / vol.sqrt();
            for (q, a) in acc {
                next.insert(q, a * s);
            }
        } else {
            let h = (2.0 / vol).sqrt() / 2.0;
            // cos = (e⁺ + e⁻)/2, sin = (e⁺ − e⁻)/(2i)
            let (plus, minus) = match parity {
                Parity::Cos => (Complex64::new(h, 0.0), Complex64::new(h, 0.0)),
                Parity::Sin => (Complex64::new(0.0, -h), Complex64::new(0.0, h)),
            };
            for (q, a) in &acc {
                for (sign, w) in [(1, plus), (-1, minus)] {
                    let key: Vec<i32> = q.iter().zip(freq).map(|(q, k)| q + sign * k).collect();
                    *next.entry(key).or_insert(Complex64::new(0.0, 0.0)) += a * w;
                }
            }
        }
        acc = next;
    }
    acc
}

/// `⟨f, φ_i⟩` for every basis mode from the frequency content of `f`.
pub fn exact_coefficients(basis: &SpectralBasis, factors: &[&Mode]) -> Vec<f64> {
    let content = frequency_content(basis, factors);
    let vol = basis.model.volume();
    basis
        .modes
        .iter()
        .map(|mode| {
            let ModeRep::Torus { freq, parity } = &mode.rep else { unreachable!() };
            let Some(a) = content.get(freq) else { return 0.0 };
            if freq.iter().all(|k| *k == 0) {
                a.re * vol.sqrt()
            } else {
                match parity {
                    Parity::Cos => (2.0 * vol).sqrt() * a.re,
                    Parity::Sin => -(2.0 * vol).sqrt() * a.im,
                }
            }
        })
        .collect()
}
