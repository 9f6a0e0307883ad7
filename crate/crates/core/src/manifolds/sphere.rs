use std::f64::consts::TAU;

use super::legendre::{azimuthal, legendre_table, table_index};
use super::{axis_slices, GridLayout, Mode, ModeRep, Resolution, Tables, MAX_SPHERE_DEGREE};
use crate::error::{Error, Result};
use crate::numerics::quadrature::{gauss_legendre, uniform_periodic, QuadratureGrid};

pub(super) fn enumerate(cutoff: f64) -> Result<Vec<(f64, ModeRep)>> {
    let lambda = |l: u32| (f64::from(l) * f64::from(l + 1)).sqrt();
    let mut lmax = 0u32;
    while lambda(lmax + 1) <= cutoff {
        lmax += 1;
        if lmax > MAX_SPHERE_DEGREE {
            return Err(Error::UnderResolved {
                family: "sphere degree".into(),
                detail: format!("lambda_max = {cutoff} needs l > {MAX_SPHERE_DEGREE}"),
            });
        }
    }
    let mut out = Vec::with_capacity(((lmax + 1) * (lmax + 1)) as usize);
    for l in 0..=lmax {
        for m in -(l as i32)..=(l as i32) {
            out.push((lambda(l), ModeRep::Sphere { l, m }));
        }
    }
    Ok(out)
}

fn degree(mode: &Mode) -> (usize, i32) {
    match mode.rep {
        ModeRep::Sphere { l, m } => (l as usize, m),
        _ => unreachable!("sphere layout with a foreign mode"),
    }
}

pub(super) fn layout(modes: &[Mode], res: &Resolution) -> Result<GridLayout> {
    let lmax = modes.iter().map(|m| degree(m).0).max().unwrap_or(0);
    let e = res.grid_exactness.unwrap_or(2 * res.product_order * lmax + 8);
    // Polynomials of degree e in (x, y, z) are degree e in cos θ and
    // trigonometric degree e in φ.
    let rule = gauss_legendre(e / 2 + 1)?;
    let xs: Vec<f64> = rule.nodes().map(|x| x[0]).collect();
    let theta = QuadratureGrid::new(1, xs.iter().map(|x| x.acos()).collect(), rule.weights().to_vec(), e)?;
    let phi = uniform_periodic(e + 1, TAU)?;
    let legendre = xs.iter().map(|x| legendre_table(lmax, *x)).collect();
    let grid = theta.tensor(&phi);
    Ok(GridLayout { axes: vec![theta, phi], exactness: vec![e], grid, tables: Tables::Sphere { legendre } })
}

fn legendre(layout: &GridLayout) -> &[Vec<f64>] {
    match &layout.tables {
        Tables::Sphere { legendre } => legendre,
        _ => unreachable!(),
    }
}

fn azimuth_values(layout: &GridLayout, m: i32) -> Vec<f64> {
    layout.axes[1].nodes().map(|p| azimuthal(m, p[0])).collect()
}

pub(super) fn sample(layout: &GridLayout, mode: &Mode) -> Vec<f64> {
    let (l, m) = degree(mode);
    let idx = table_index(l, m.unsigned_abs() as usize);
    let az = azimuth_values(layout, m);
    let mut out = Vec::with_capacity(layout.grid.len());
    for row in legendre(layout) {
        let p = row[idx];
        out.extend(az.iter().map(|a| p * a));
    }
    out
}

pub(super) fn project(layout: &GridLayout, modes: &[Mode], f: &[f64]) -> Vec<f64> {
    let (w0, w1) = axis_slices(layout);
    let (n0, n1) = (w0.len(), w1.len());
    let lmax = modes.iter().map(|m| degree(m).0).max().unwrap_or(0) as i32;

    // g[m + lmax][i] = Σ_j w_j f(θ_i, φ_j) t_m(φ_j)
    let g: Vec<Vec<f64>> = (-lmax..=lmax)
        .map(|m| {
            let az: Vec<f64> = azimuth_values(layout, m).iter().zip(w1).map(|(a, w)| a * w).collect();
            (0..n0).map(|i| f[i * n1..(i + 1) * n1].iter().zip(&az).map(|(v, a)| v * a).sum()).collect()
        })
        .collect();
    let tables = legendre(layout);
    modes
        .iter()
        .map(|mode| {
            let (l, m) = degree(mode);
            let idx = table_index(l, m.unsigned_abs() as usize);
            let gm = &g[(m + lmax) as usize];
            (0..n0).map(|i| w0[i] * tables[i][idx] * gm[i]).sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{build_basis, ManifoldModel, Resolution};

    #[test]
    fn degree_cap() {
        let lam = |l: f64| (l * (l + 1.0)).sqrt();
        assert!(build_basis(&ManifoldModel::Sphere2, lam(64.0), &Resolution::default()).is_ok());
        assert!(matches!(
            build_basis(&ManifoldModel::Sphere2, lam(65.0), &Resolution::default()),
            Err(crate::Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn gram_at_degree_twelve() {
        let b = build_basis(&ManifoldModel::Sphere2, (12.0f64 * 13.0).sqrt(), &Resolution::default()).unwrap();
        assert_eq!(b.len(), 169);
        assert!(b.orthonormality_defect().unwrap() < 1e-12);
    }
}
