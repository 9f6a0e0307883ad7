use std::f64::consts::TAU;

use super::{axis_slices, GridLayout, Mode, ModeRep, Parity, Resolution, Tables, MAX_TORUS_FREQUENCY};
use crate::error::{Error, Result};
use crate::numerics::quadrature::uniform_periodic;
use crate::ManifoldModel;

/// Angular frequency per unit of `k` on each axis; exactly 1 when the period is 2π.
fn scales(periods: &[f64]) -> Vec<f64> {
    periods.iter().map(|p| TAU / p).collect()
}

pub(super) fn enumerate(periods: &[f64], cutoff: f64) -> Result<Vec<(f64, ModeRep)>> {
    let omega = scales(periods);
    let bounds: Vec<i64> = omega.iter().map(|w| (cutoff / w).floor() as i64).collect();
    if let Some(k) = bounds.iter().find(|k| **k > MAX_TORUS_FREQUENCY) {
        return Err(Error::UnderResolved {
            family: "flat-torus frequency".into(),
            detail: format!("lambda_max needs |k| up to {k}, cap is {MAX_TORUS_FREQUENCY}"),
        });
    }
    let lambda = |k: &[i32]| -> f64 { k.iter().zip(&omega).map(|(k, w)| (f64::from(*k) * w).powi(2)).sum::<f64>().sqrt() };

    let mut out = vec![(0.0, ModeRep::Torus { freq: vec![0; periods.len()], parity: Parity::Cos })];
    let mut push = |freq: Vec<i32>| {
        let l = lambda(&freq);
        if l <= cutoff {
            out.push((l, ModeRep::Torus { freq: freq.clone(), parity: Parity::Cos }));
            out.push((l, ModeRep::Torus { freq, parity: Parity::Sin }));
        }
    };
    match bounds.as_slice() {
        [k1] => (1..=*k1 as i32).for_each(|k| push(vec![k])),
        [k1, k2] => {
            let (k1, k2) = (*k1 as i32, *k2 as i32);
            for a in 0..=k1 {
                for b in -k2..=k2 {
                    if a > 0 || b > 0 {
                        push(vec![a, b]);
                    }
                }
            }
        }
        _ => unreachable!("dimension validated by the model"),
    }
    Ok(out)
}

fn normalization(periods: &[f64], freq: &[i32]) -> f64 {
    let vol: f64 = periods.iter().product();
    if freq.iter().all(|k| *k == 0) {
        1.0 / vol.sqrt()
    } else {
        (2.0 / vol).sqrt()
    }
}

pub(super) fn evaluate(periods: &[f64], freq: &[i32], parity: Parity, x: &[f64]) -> f64 {
    let phase: f64 = scales(periods).iter().zip(freq).zip(x).map(|((w, k), x)| w * f64::from(*k) * x).sum();
    let t = match parity {
        Parity::Cos => phase.cos(),
        Parity::Sin => phase.sin(),
    };
    normalization(periods, freq) * t
}

pub(super) fn layout(periods: &[f64], modes: &[Mode], res: &Resolution) -> Result<GridLayout> {
    let d = periods.len();
    let mut band = vec![0usize; d];
    for m in modes {
        if let ModeRep::Torus { freq, .. } = &m.rep {
            for (b, k) in band.iter_mut().zip(freq) {
                *b = (*b).max(k.unsigned_abs() as usize);
            }
        }
    }
    let omega = scales(periods);
    let mut axes = Vec::with_capacity(d);
    let mut exactness = Vec::with_capacity(d);
    let (mut cos, mut sin) = (Vec::new(), Vec::new());
    for j in 0..d {
        let e = res.grid_exactness.unwrap_or(2 * res.product_order * band[j] + 8);
        let axis = uniform_periodic(e + 1, periods[j])?;
        let xs: Vec<f64> = axis.nodes().map(|x| x[0]).collect();
        let (c, s): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (0..=band[j])
            .map(|k| {
                let w = omega[j] * k as f64;
                (xs.iter().map(|x| (w * x).cos()).collect(), xs.iter().map(|x| (w * x).sin()).collect())
            })
            .unzip();
        cos.push(c);
        sin.push(s);
        axes.push(axis);
        exactness.push(e);
    }
    let grid = match axes.as_slice() {
        [a] => a.clone(),
        [a, b] => a.tensor(b),
        _ => unreachable!(),
    };
    Ok(GridLayout { axes, exactness, grid, tables: Tables::Torus { cos, sin } })
}

fn periods_of(model: &ManifoldModel) -> &[f64] {
    match model {
        ManifoldModel::FlatTorus { periods } => periods,
        _ => unreachable!("flat-torus tables on another model"),
    }
}

/// Per-axis trig table indexed `[axis][k][node]`.
type TrigTable = Vec<Vec<Vec<f64>>>;

fn tables(layout: &GridLayout) -> (&TrigTable, &TrigTable) {
    match &layout.tables {
        Tables::Torus { cos, sin } => (cos, sin),
        _ => unreachable!(),
    }
}

/// `(cos, sin)` of `k x_i` on axis `j` for signed `k`.
fn axis_trig(layout: &GridLayout, j: usize, k: i32) -> (&[f64], &[f64], f64) {
    let (cos, sin) = tables(layout);
    let a = k.unsigned_abs() as usize;
    (&cos[j][a], &sin[j][a], if k < 0 { -1.0 } else { 1.0 })
}

pub(super) fn sample(model: &ManifoldModel, layout: &GridLayout, mode: &Mode) -> Vec<f64> {
    let ModeRep::Torus { freq, parity } = &mode.rep else { unreachable!() };
    let norm = normalization(periods_of(model), freq);
    let (c0, s0, _) = axis_trig(layout, 0, freq[0]);
    if freq.len() == 1 {
        let t = if *parity == Parity::Cos { c0 } else { s0 };
        return t.iter().map(|v| norm * v).collect();
    }
    let (c1, s1, sg) = axis_trig(layout, 1, freq[1]);
    let mut out = Vec::with_capacity(c0.len() * c1.len());
    for i in 0..c0.len() {
        for j in 0..c1.len() {
            // cos(a + b), sin(a + b) with b = sg · |k₂| y
            let v = match parity {
                Parity::Cos => c0[i] * c1[j] - sg * s0[i] * s1[j],
                Parity::Sin => s0[i] * c1[j] + sg * c0[i] * s1[j],
            };
            out.push(norm * v);
        }
    }
    out
}

pub(super) fn project(model: &ManifoldModel, layout: &GridLayout, modes: &[Mode], f: &[f64]) -> Vec<f64> {
    let periods = periods_of(model);
    let (cos, sin) = tables(layout);
    let (w0, w1) = axis_slices(layout);
    let n0 = w0.len();
    let n1 = w1.len();

    // Partial sums over the second axis: gc[k][i] = Σ_j w_j f(i, j) cos(k y_j).
    let (gc, gs): (Vec<Vec<f64>>, Vec<Vec<f64>>) = if periods.len() == 1 {
        (vec![f.to_vec()], vec![vec![0.0; n0]])
    } else {
        (0..cos[1].len())
            .map(|k| {
                let (ck, sk) = (&cos[1][k], &sin[1][k]);
                let mut a = vec![0.0; n0];
                let mut b = vec![0.0; n0];
                for i in 0..n0 {
                    let row = &f[i * n1..(i + 1) * n1];
                    let (mut sa, mut sb) = (0.0, 0.0);
                    for j in 0..n1 {
                        let wf = w1[j] * row[j];
                        sa += wf * ck[j];
                        sb += wf * sk[j];
                    }
                    a[i] = sa;
                    b[i] = sb;
                }
                (a, b)
            })
            .unzip()
    };

    modes
        .iter()
        .map(|mode| {
            let ModeRep::Torus { freq, parity } = &mode.rep else { unreachable!() };
            let norm = normalization(periods, freq);
            let (c0, s0, _) = axis_trig(layout, 0, freq[0]);
            let (k2, sg) = match freq.get(1) {
                Some(k) => (k.unsigned_abs() as usize, if *k < 0 { -1.0 } else { 1.0 }),
                None => (0, 1.0),
            };
            let (a, b) = (&gc[k2], &gs[k2]);
            let mut acc = 0.0;
            for i in 0..n0 {
                let v = match parity {
                    Parity::Cos => c0[i] * a[i] - sg * s0[i] * b[i],
                    Parity::Sin => s0[i] * a[i] + sg * c0[i] * b[i],
                };
                acc += w0[i] * v;
            }
            norm * acc
        })
        .collect()
}
