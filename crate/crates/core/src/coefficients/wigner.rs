//! Wigner 3j symbols and Gaunt integrals of real spherical harmonics.
//!
//! 3j symbols are generated for a whole range of the first angular momentum
//! by the three-term recursion of Schulten and Gordon, run forward from the
//! lower end and backward from the upper end and joined by a least-squares
//! match on an overlap; the family is then normalized by
//! `Σ_j (2j+1) f(j)² = 1` with the sign of the stretched state fixed.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{param, Result};

/// `(j j2 j3; -m2-m3 m2 m3)` for every admissible `j`, as `(jmin, values)`.
/// Empty when no `j` satisfies the triangle and projection constraints.
pub fn wigner_3j_series(j2: i64, j3: i64, m2: i64, m3: i64) -> (i64, Vec<f64>) {
    let m1 = -m2 - m3;
    if j2 < 0 || j3 < 0 || m2.abs() > j2 || m3.abs() > j3 {
        return (0, Vec::new());
    }
    let jmin = (j2 - j3).abs().max(m1.abs());
    let jmax = j2 + j3;
    if jmin > jmax {
        return (jmin, Vec::new());
    }
    let n = (jmax - jmin + 1) as usize;
    let (fj2, fj3, fm1, fm2, fm3) = (j2 as f64, j3 as f64, m1 as f64, m2 as f64, m3 as f64);
    let a = |j: f64| -> f64 {
        ((j * j - (fj2 - fj3).powi(2)) * ((fj2 + fj3 + 1.0).powi(2) - j * j) * (j * j - fm1 * fm1))
            .max(0.0)
            .sqrt()
    };
    let b = |j: f64| -> f64 {
        -(2.0 * j + 1.0) * (fj2 * (fj2 + 1.0) * fm1 - fj3 * (fj3 + 1.0) * fm1 - j * (j + 1.0) * (fm3 - fm2))
    };
    let at = |k: usize| (jmin + k as i64) as f64;

    if n == 1 {
        return (jmin, finish(vec![1.0], jmin, j2, j3, m1));
    }

    // Backward from jmax while the magnitude envelope grows.
    let mut back = vec![0.0; n];
    back[n - 1] = 1.0;
    let mut b_stop = n - 1;
    let mut env_prev = 1.0f64;
    for k in (0..n - 1).rev() {
        let j = at(k + 1);
        let next = back.get(k + 2).copied().unwrap_or(0.0);
        // j A(j+1) f(j+1) + B(j) f(j) + (j+1) A(j) f(j-1) = 0, solved for f(j-1).
        back[k] = -(b(j) * back[k + 1] + j * a(j + 1.0) * next) / ((j + 1.0) * a(j));
        rescale(&mut back[k..]);
        let env = back[k].abs().max(back[k + 1].abs());
        b_stop = k;
        if jmin > 0 && env < env_prev {
            break;
        }
        env_prev = env;
    }
    if jmin == 0 || b_stop == 0 {
        // Backward recursion reached the lower end; nothing to match.
        return (jmin, finish(back, jmin, j2, j3, m1));
    }

    // Forward from jmin while the envelope grows, extended to overlap the backward run.
    let mut fwd = vec![0.0; n];
    fwd[0] = 1.0;
    let mut f_stop = 0;
    let mut env_prev = 1.0f64;
    for k in 1..n {
        let j = at(k - 1);
        let prev = if k >= 2 { fwd[k - 2] } else { 0.0 };
        fwd[k] = -(b(j) * fwd[k - 1] + (j + 1.0) * a(j) * prev) / (j * a(j + 1.0));
        rescale(&mut fwd[..=k]);
        let env = fwd[k].abs().max(fwd[k - 1].abs());
        f_stop = k;
        if k > b_stop && env < env_prev {
            break;
        }
        env_prev = env;
    }
    // Make sure the backward run covers [lo, f_stop] with at least two points.
    let lo = b_stop.min(f_stop.saturating_sub(1));
    for k in (lo..b_stop).rev() {
        let j = at(k + 1);
        let next = back.get(k + 2).copied().unwrap_or(0.0);
        back[k] = -(b(j) * back[k + 1] + j * a(j + 1.0) * next) / ((j + 1.0) * a(j));
        rescale(&mut back[k..]);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for k in lo..=f_stop {
        num += fwd[k] * back[k];
        den += back[k] * back[k];
    }
    let scale = num / den;
    let mut out = fwd;
    for k in (f_stop + 1)..n {
        out[k] = scale * back[k];
    }
    (jmin, finish(out, jmin, j2, j3, m1))
}

fn rescale(v: &mut [f64]) {
    let big = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if big > 1e150 {
        v.iter_mut().for_each(|x| *x /= big);
    }
}

fn finish(mut f: Vec<f64>, jmin: i64, j2: i64, j3: i64, m1: i64) -> Vec<f64> {
    let norm: f64 = f.iter().enumerate().map(|(k, v)| (2.0 * (jmin + k as i64) as f64 + 1.0) * v * v).sum();
    let want_negative = (j2 - j3 - m1).rem_euclid(2) == 1;
    let last = *f.last().unwrap();
    let sign = if (last < 0.0) != want_negative { -1.0 } else { 1.0 };
    let s = sign / norm.sqrt();
    f.iter_mut().for_each(|v| *v *= s);
    f
}

/// Wigner 3j symbol `(l1 l2 l3; m1 m2 m3)`.
pub fn wigner_3j(l1: i64, l2: i64, l3: i64, m1: i64, m2: i64, m3: i64) -> Result<f64> {
    for (l, m) in [(l1, m1), (l2, m2), (l3, m3)] {
        if l < 0 || m.abs() > l {
            return param(format!("invalid angular momentum pair (l, m) = ({l}, {m})"));
        }
    }
    if m1 + m2 + m3 != 0 || l3 < (l1 - l2).abs() || l3 > l1 + l2 {
        return Ok(0.0);
    }
    if m1 == 0 && m2 == 0 && (l1 + l2 + l3) % 2 == 1 {
        return Ok(0.0);
    }
    // Cyclic permutation (l3 l1 l2; m3 m1 m2) runs the recursion in l3.
    let (jmin, vals) = wigner_3j_series(l1, l2, m1, m2);
    Ok(vals.get((l3 - jmin) as usize).copied().unwrap_or(0.0))
}

/// Coefficients of the real harmonic `Y_l^m` in the complex (Condon-Shortley)
/// harmonics, as `[(μ, u)]` with `Y_l^m = Σ u · Y_l^μ`.
fn real_to_complex(m: i64) -> Vec<(i64, Complex64)> {
    let a = m.abs();
    let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
    let h = FRAC_1_SQRT_2;
    match m.signum() {
        0 => vec![(0, Complex64::new(1.0, 0.0))],
        1 => vec![(a, Complex64::new(sign * h, 0.0)), (-a, Complex64::new(h, 0.0))],
        _ => vec![(a, Complex64::new(0.0, -sign * h)), (-a, Complex64::new(0.0, h))],
    }
}

/// Gaunt integrals `∫ Y_{l1}^{m1} Y_{l2}^{m2} Y_{l3}^{m3}` for every `(l3, m3)`,
/// indexed by `l3² + l3 + m3` (so the vector has `(l1 + l2 + 1)²` entries).
pub fn gaunt_real_row(l1: i64, m1: i64, l2: i64, m2: i64) -> Vec<f64> {
    let lmax = l1 + l2;
    let mut out = vec![Complex64::new(0.0, 0.0); ((lmax + 1) * (lmax + 1)) as usize];
    let (j0min, zero) = wigner_3j_series(l1, l2, 0, 0);
    for (mu1, u1) in real_to_complex(m1) {
        for (mu2, u2) in real_to_complex(m2) {
            let mu3 = -mu1 - mu2;
            let (jmin, vals) = wigner_3j_series(l1, l2, mu1, mu2);
            for (k, w) in vals.iter().enumerate() {
                let l3 = jmin + k as i64;
                let Some(w0) = zero.get((l3 - j0min) as usize) else { continue };
                let g = (((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1)) as f64 / (4.0 * PI)).sqrt() * w0 * w;
                if g == 0.0 {
                    continue;
                }
                // Real Y_{l3}^{±|μ3|} pick up g through their coefficient on Y_{l3}^{μ3}.
                let a3 = mu3.abs();
                for m3 in if a3 == 0 { vec![0] } else { vec![a3, -a3] } {
                    let u3 = real_to_complex(m3).into_iter().find(|(nu, _)| *nu == mu3).unwrap().1;
                    out[(l3 * l3 + l3 + m3) as usize] += u1 * u2 * u3 * g;
                }
            }
        }
    }
    out.into_iter().map(|z| z.re).collect()
}

/// `∫_{S²} Y_{l1}^{m1} Y_{l2}^{m2} Y_{l3}^{m3}` for real harmonics.
pub fn gaunt_real(l1: i64, m1: i64, l2: i64, m2: i64, l3: i64, m3: i64) -> Result<f64> {
    for (l, m) in [(l1, m1), (l2, m2), (l3, m3)] {
        if l < 0 || m.abs() > l {
            return param(format!("invalid angular momentum pair (l, m) = ({l}, {m})"));
        }
    }
    if l3 > l1 + l2 || l3 < (l1 - l2).abs() || (l1 + l2 + l3) % 2 == 1 {
        return Ok(0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (mu1, u1) in real_to_complex(m1) {
        for (mu2, u2) in real_to_complex(m2) {
            for (mu3, u3) in real_to_complex(m3) {
                if mu1 + mu2 + mu3 != 0 {
                    continue;
                }
                let g = (((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1)) as f64 / (4.0 * PI)).sqrt()
                    * wigner_3j(l1, l2, l3, 0, 0, 0)?
                    * wigner_3j(l1, l2, l3, mu1, mu2, mu3)?;
                acc += u1 * u2 * u3 * g;
            }
        }
    }
    Ok(acc.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Racah's single-sum formula in plain factorials.
    fn racah(l1: i64, l2: i64, l3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
        if m1 + m2 + m3 != 0 || l3 < (l1 - l2).abs() || l3 > l1 + l2 {
            return 0.0;
        }
        let f = |n: i64| -> f64 { (1..=n).map(|k| k as f64).product() };
        let tri = f(l1 + l2 - l3) * f(l1 - l2 + l3) * f(-l1 + l2 + l3) / f(l1 + l2 + l3 + 1);
        let pre = (tri
            * f(l1 + m1)
            * f(l1 - m1)
            * f(l2 + m2)
            * f(l2 - m2)
            * f(l3 + m3)
            * f(l3 - m3))
            .sqrt();
        let kmin = 0.max(l2 - l3 - m1).max(l1 - l3 + m2);
        let kmax = (l1 + l2 - l3).min(l1 - m1).min(l2 + m2);
        let mut s = 0.0;
        for k in kmin..=kmax {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign
                / (f(k)
                    * f(l1 + l2 - l3 - k)
                    * f(l1 - m1 - k)
                    * f(l2 + m2 - k)
                    * f(l3 - l2 + m1 + k)
                    * f(l3 - l1 - m2 + k));
        }
        let phase = if (l1 - l2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        phase * pre * s
    }

    #[test]
    fn known_values() {
        assert!((wigner_3j(1, 1, 0, 0, 0, 0).unwrap() + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((wigner_3j(2, 1, 1, 0, 0, 0).unwrap() - (2.0f64 / 15.0).sqrt()).abs() < 1e-15);
        assert_eq!(wigner_3j(1, 1, 1, 1, 0, 0).unwrap(), 0.0);
        assert_eq!(wigner_3j(5, 3, 1, 0, 0, 0).unwrap(), 0.0);
        assert!(wigner_3j(1, 1, 1, 2, 0, 0).is_err());
    }

    #[test]
    fn matches_racah_up_to_ten() {
        let mut worst: f64 = 0.0;
        for l1 in 0i64..=10 {
            for l2 in 0i64..=10 {
                for l3 in (l1 - l2).abs()..=(l1 + l2).min(10) {
                    for m1 in -l1..=l1 {
                        for m2 in -l2..=l2 {
                            let m3 = -m1 - m2;
                            if m3.abs() > l3 {
                                continue;
                            }
                            let got = wigner_3j(l1, l2, l3, m1, m2, m3).unwrap();
                            worst = worst.max((got - racah(l1, l2, l3, m1, m2, m3)).abs());
                        }
                    }
                }
            }
        }
        assert!(worst < 1e-12, "worst {worst:e}");
    }

    #[test]
    fn orthogonality_in_l3() {
        for l1 in 0i64..=8 {
            for l2 in 0i64..=8 {
                for m1 in -l1..=l1 {
                    for m2 in -l2..=l2 {
                        let (jmin, v) = wigner_3j_series(l1, l2, m1, m2);
                        let s: f64 =
                            v.iter().enumerate().map(|(k, x)| (2 * (jmin + k as i64) + 1) as f64 * x * x).sum();
                        assert!((s - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn large_degree_stays_normalized() {
        for (l1, l2, m1, m2) in [(60, 64, 3, -7), (64, 64, 0, 0), (40, 24, 20, -24), (64, 1, 64, -1)] {
            let (jmin, v) = wigner_3j_series(l1, l2, m1, m2);
            assert!(v.iter().all(|x| x.is_finite()));
            let s: f64 = v.iter().enumerate().map(|(k, x)| (2 * (jmin + k as i64) + 1) as f64 * x * x).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // Orthogonality in m1 for fixed (l1, l2, l3, m3) distinguishes a wrong join.
        let (l1, l2, l3, m3) = (50i64, 45i64, 60i64, 4i64);
        let s: f64 = (-l1..=l1)
            .map(|m1| wigner_3j(l1, l2, l3, m1, -m1 - m3, m3).unwrap_or(0.0).powi(2))
            .sum();
        assert!((s * (2 * l3 + 1) as f64 - 1.0).abs() < 1e-10, "{s}");
    }

    #[test]
    fn gaunt_examples() {
        let c = 1.0 / (4.0 * PI).sqrt();
        assert!((gaunt_real(0, 0, 3, -2, 3, -2).unwrap() - c).abs() < 1e-15);
        assert!((gaunt_real(1, 0, 1, 0, 2, 0).unwrap() - 1.0 / (5.0 * PI).sqrt()).abs() < 1e-15);
        assert_eq!(gaunt_real(1, 1, 1, 0, 3, 1).unwrap(), 0.0);
        let row = gaunt_real_row(2, -1, 3, 2);
        for l3 in 0..=5i64 {
            for m3 in -l3..=l3 {
                let want = gaunt_real(2, -1, 3, 2, l3, m3).unwrap();
                assert!((row[(l3 * l3 + l3 + m3) as usize] - want).abs() < 1e-15);
            }
        }
    }
}
