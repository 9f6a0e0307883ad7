use std::f64::consts::{PI, TAU};

use eigenprod_core::manifolds::{eigen_residual, Parity};
use eigenprod_core::{build_basis, ManifoldModel, ModeRep, Resolution};
use nalgebra::DMatrix;

#[test]
fn weyl_counting_on_the_flat_square_torus() {
    let model = ManifoldModel::flat_torus(2, TAU).unwrap();
    let b = build_basis(&model, 20.0, &Resolution { product_order: 1, ..Resolution::default() }).unwrap();
    let vol = model.volume();
    for k in 0..=20 {
        let lam = 10.0 + 0.5 * f64::from(k);
        let law = vol * lam * lam / (4.0 * PI);
        let n = b.counting(lam) as f64;
        assert!((n - law).abs() <= 0.25 * law, "N({lam}) = {n}, area law {law}");
    }
}

#[test]
fn counting_functions_are_nondecreasing() {
    let models = [
        ManifoldModel::flat_torus(1, TAU).unwrap(),
        ManifoldModel::flat_torus(2, 3.0).unwrap(),
        ManifoldModel::Sphere2,
        ManifoldModel::rev_torus(2.0, 1.0).unwrap(),
    ];
    for m in &models {
        let b = build_basis(m, 8.0, &Resolution::default()).unwrap();
        let counts: Vec<usize> = (0..=160).map(|k| b.counting(f64::from(k) * 0.05)).collect();
        assert!(counts.windows(2).all(|w| w[1] >= w[0]), "{}", m.label());
        assert_eq!(*counts.last().unwrap(), b.len());
    }
}

/// Second-order finite differences for the profile equation
/// `−(f g')'/(r² f) + m² g/f² = λ² g`, `f = R + r cos u`, on a periodic grid.
fn fd_eigenvalues(major: f64, minor: f64, m: u32, n: usize) -> Vec<f64> {
    let h = TAU / n as f64;
    let f = |u: f64| major + minor * u.cos();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        // Edge between nodes i and i+1 carries ∫ f g'² / r.
        let k = f((i as f64 + 0.5) * h) / minor / h;
        a[(i, i)] += k;
        a[(j, j)] += k;
        a[(i, j)] -= k;
        a[(j, i)] -= k;
        let fi = f(i as f64 * h);
        a[(i, i)] += f64::from(m * m) * minor / fi * h;
    }
    let mass: Vec<f64> = (0..n).map(|i| minor * f(i as f64 * h) * h).collect();
    let c = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (mass[i] * mass[j]).sqrt());
    let mut ev: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn rev_torus_matches_finite_differences() {
    let (major, minor) = (2.0, 1.0);
    let b = build_basis(&ManifoldModel::rev_torus(major, minor).unwrap(), 6.0, &Resolution::default()).unwrap();
    for m in 0..=3u32 {
        let mut ours: Vec<f64> = b
            .modes
            .iter()
            .filter(|x| matches!(x.rep, ModeRep::RevTorus { m: mm, parity: Parity::Cos, .. } if mm == m))
            .map(|x| x.lambda)
            .collect();
        ours.sort_by(f64::total_cmp);
        let fd = fd_eigenvalues(major, minor, m, 1200);
        assert!(ours.len() >= 4, "m = {m}");
        for (k, (x, y)) in ours.iter().zip(&fd).enumerate() {
            assert!((x - y).abs() < 2e-4 * (1.0 + y), "m = {m}, branch {k}: {x} vs {y}");
        }
    }
}

#[test]
fn rev_torus_galerkin_self_convergence() {
    let model = ManifoldModel::rev_torus(2.0, 1.0).unwrap();
    let coarse = build_basis(&model, 8.0, &Resolution::default()).unwrap();
    let fine = build_basis(&model, 8.0, &Resolution { galerkin_n: Some(2 * coarse.galerkin_n), ..Resolution::default() }).unwrap();
    assert_eq!(coarse.len(), fine.len());
    for (a, b) in coarse.modes.iter().zip(&fine.modes) {
        assert!((a.lambda - b.lambda).abs() < 1e-10, "{} vs {}", a.lambda, b.lambda);
    }
}

#[test]
fn rev_torus_invariants_at_larger_cutoff() {
    let b = build_basis(&ManifoldModel::rev_torus(2.0, 1.0).unwrap(), 9.0, &Resolution::default()).unwrap();
    assert!(b.orthonormality_defect().unwrap() <= 1e-8);
    for id in (0..b.len()).step_by(7) {
        assert!(eigen_residual(&b, id).unwrap() <= 1e-6, "mode {id}");
    }
}
