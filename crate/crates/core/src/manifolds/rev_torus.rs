//! Torus of revolution `(u, θ) ↦ ((R + r cos u) cos θ, (R + r cos u) sin θ, r sin u)`.
//!
//! With `f(u) = R + r cos u` the metric is `r² du² + f² dθ²` and
//! `Δ(g(u) Θ_m(θ)) = λ² g Θ_m` reduces to the periodic problem
//!
//! ```text
//! -(f/r · g')' + m² (r/f) g = λ² (r f) g
//! ```
//!
//! solved per `m` in the real Fourier basis. Profiles are normalized so that
//! `∫ r f g² du = 1`, which with `∫ Θ_m² dθ = 1` gives unit `L²(M)` norm.

use std::f64::consts::{PI, TAU};

use super::{axis_slices, GridLayout, Mode, ModeRep, Parity, Resolution, SpectralBasis, Tables, MAX_REV_TORUS_ORDER};
use crate::error::{param, Error, Result};
use crate::numerics::eigen::{max_residual, sym_generalized_eig};
use crate::numerics::galerkin::{assemble_sturm_liouville, basis_frequency, fourier_series, SturmLiouville};
use crate::numerics::quadrature::uniform_periodic;
use crate::ManifoldModel;

/// Largest admissible `‖tail‖/‖g‖` of a profile's coefficients above frequency `N/2`.
const TAIL_TOLERANCE: f64 = 1e-10;

/// Relative eigenvalue size below which the `m = 0` ground state is the constant.
const ZERO_MODE_TOLERANCE: f64 = 1e-9;

pub(super) fn solve(major: f64, minor: f64, cutoff: f64, n: usize) -> Result<(Vec<(f64, ModeRep)>, f64)> {
    let f = move |u: f64| major + minor * u.cos();
    let stiffness = move |u: f64| f(u) / minor;
    let potential = move |u: f64| minor / f(u);
    let mass = move |u: f64| minor * f(u);
    let op = SturmLiouville { stiffness: &stiffness, potential: &potential, mass: &mass };
    let cut2 = cutoff * cutoff;

    let mut out = Vec::new();
    let mut residual: f64 = 0.0;
    for m in 0u32.. {
        // μ ≥ m² / (R + r)² for every profile of order m.
        if m > 0 && (f64::from(m) / (major + minor)).powi(2) > cut2 {
            break;
        }
        if m > MAX_REV_TORUS_ORDER {
            return Err(Error::UnderResolved {
                family: format!("rev-torus angular order m = {m}"),
                detail: format!("lambda_max = {cutoff} reaches |m| > {MAX_REV_TORUS_ORDER}"),
            });
        }
        let pencil = assemble_sturm_liouville(&op, m, n)?;
        let eig = sym_generalized_eig(&pencil)?;
        if eig.values[0] > cut2 {
            continue;
        }
        residual = residual.max(max_residual(&pencil, &eig) / pencil.stiffness().max_abs().max(1.0));
        for (k, mu) in eig.values.iter().enumerate().take_while(|(_, mu)| **mu <= cut2) {
            let mut profile = eig.vector(k);
            let (lambda, profile) = if m == 0 && k == 0 && mu.abs() <= ZERO_MODE_TOLERANCE {
                let mut exact = vec![0.0; profile.len()];
                exact[0] = 1.0 / (minor * major).sqrt();
                (0.0, exact)
            } else {
                check_tail(&profile, n, m, k)?;
                orient(&mut profile);
                (mu.max(0.0).sqrt(), profile)
            };
            let parities: &[Parity] = if m == 0 { &[Parity::Cos] } else { &[Parity::Cos, Parity::Sin] };
            for &parity in parities {
                out.push((lambda, ModeRep::RevTorus { m, parity, branch: k as u32, profile: profile.clone() }));
            }
        }
    }
    Ok((out, residual))
}

fn check_tail(v: &[f64], n: usize, m: u32, k: usize) -> Result<()> {
    let total: f64 = v.iter().map(|x| x * x).sum();
    let tail: f64 = v.iter().enumerate().filter(|(j, _)| basis_frequency(*j) > n / 2).map(|(_, x)| x * x).sum();
    let ratio = (tail / total).sqrt();
    if ratio > TAIL_TOLERANCE {
        return Err(Error::UnderResolved {
            family: format!("rev-torus profile m = {m}, branch {k}"),
            detail: format!("coefficient tail {ratio:.3e} above frequency {} with N = {n}", n / 2),
        });
    }
    Ok(())
}

/// Fix the sign so that the largest coefficient is positive.
fn orient(v: &mut [f64]) {
    let lead = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn angular(m: u32, parity: Parity, theta: f64) -> f64 {
    if m == 0 {
        return 1.0 / TAU.sqrt();
    }
    let t = f64::from(m) * theta;
    match parity {
        Parity::Cos => t.cos() / PI.sqrt(),
        Parity::Sin => t.sin() / PI.sqrt(),
    }
}

pub(super) fn evaluate(_major: f64, _minor: f64, m: u32, parity: Parity, profile: &[f64], x: &[f64]) -> f64 {
    fourier_series(profile, x[0]).0 * angular(m, parity, x[1])
}

pub(super) fn layout(major: f64, minor: f64, modes: &[Mode], res: &Resolution, n: usize) -> Result<GridLayout> {
    let m_max = modes
        .iter()
        .map(|m| match m.rep {
            ModeRep::RevTorus { m, .. } => m as usize,
            _ => 0,
        })
        .max()
        .unwrap_or(0);
    let e_u = res.grid_exactness.unwrap_or(2 * res.product_order * n + 8);
    let e_theta = res.grid_exactness.unwrap_or(2 * res.product_order * m_max + 8);
    // One extra degree for the density r·f(u), itself of degree 1.
    let u_axis = uniform_periodic(e_u + 2, TAU)?.reweighted(|u| minor * (major + minor * u[0].cos()))?;
    let theta_axis = uniform_periodic(e_theta + 1, TAU)?;
    let profiles = modes
        .iter()
        .map(|m| match &m.rep {
            ModeRep::RevTorus { profile, .. } => u_axis.nodes().map(|u| fourier_series(profile, u[0]).0).collect(),
            _ => Vec::new(),
        })
        .collect();
    let grid = u_axis.tensor(&theta_axis);
    Ok(GridLayout {
        axes: vec![u_axis, theta_axis],
        exactness: vec![e_u, e_theta],
        grid,
        tables: Tables::RevTorus { profiles },
    })
}

fn profiles(layout: &GridLayout) -> &[Vec<f64>] {
    match &layout.tables {
        Tables::RevTorus { profiles } => profiles,
        _ => unreachable!(),
    }
}

fn angular_values(layout: &GridLayout, m: u32, parity: Parity) -> Vec<f64> {
    layout.axes[1].nodes().map(|t| angular(m, parity, t[0])).collect()
}

fn order(mode: &Mode) -> (u32, Parity) {
    match mode.rep {
        ModeRep::RevTorus { m, parity, .. } => (m, parity),
        _ => unreachable!(),
    }
}

pub(super) fn sample(layout: &GridLayout, mode: &Mode) -> Vec<f64> {
    let (m, parity) = order(mode);
    let ang = angular_values(layout, m, parity);
    let mut out = Vec::with_capacity(layout.grid.len());
    for g in &profiles(layout)[mode.id] {
        out.extend(ang.iter().map(|a| g * a));
    }
    out
}

pub(super) fn project(layout: &GridLayout, modes: &[Mode], f: &[f64]) -> Vec<f64> {
    let (w0, w1) = axis_slices(layout);
    let (n0, n1) = (w0.len(), w1.len());
    let m_max = modes.iter().map(|m| order(m).0).max().unwrap_or(0) as usize;
    let mut partial: Vec<Option<Vec<f64>>> = vec![None; 2 * (m_max + 1)];
    let profiles = profiles(layout);
    modes
        .iter()
        .map(|mode| {
            let (m, parity) = order(mode);
            let slot = 2 * m as usize + usize::from(parity == Parity::Sin);
            let g = partial[slot].get_or_insert_with(|| {
                let ang: Vec<f64> = angular_values(layout, m, parity).iter().zip(w1).map(|(a, w)| a * w).collect();
                (0..n0).map(|i| f[i * n1..(i + 1) * n1].iter().zip(&ang).map(|(v, a)| v * a).sum()).collect()
            });
            let prof = &profiles[mode.id];
            (0..n0).map(|i| w0[i] * prof[i] * g[i]).sum()
        })
        .collect()
}

/// Relative `L²` residual `‖Δφ − λ²φ‖ / ‖φ‖` of a torus-of-revolution mode,
/// with `Δ` applied through the analytic metric on a trapezoid grid finer
/// than the Galerkin one.
pub fn eigen_residual(basis: &SpectralBasis, id: usize) -> Result<f64> {
    let ManifoldModel::RevTorus { major, minor } = basis.model else {
        return param("eigen_residual applies to the torus of revolution");
    };
    let mode = basis.mode(id)?;
    let ModeRep::RevTorus { m, profile, .. } = &mode.rep else { unreachable!() };
    let grid = uniform_periodic(4 * basis.galerkin_n + 64, TAU)?;
    let lam2 = mode.lambda * mode.lambda;
    let m2 = f64::from(*m).powi(2);
    let (mut res, mut norm) = (0.0, 0.0);
    for (u, h) in grid.nodes().zip(grid.weights()) {
        let u = u[0];
        let f = major + minor * u.cos();
        let df = -minor * u.sin();
        let (g, dg, ddg) = fourier_series(profile, u);
        let lap = -(df * dg + f * ddg) / (minor * minor * f) + m2 * g / (f * f);
        let w = h * minor * f;
        res += w * (lap - lam2 * g).powi(2);
        norm += w * g * g;
    }
    Ok((res / norm).sqrt())
}
