//! Dense symmetric-definite generalized eigenproblems `A v = λ B v`.
//!
//! `B` is Cholesky factored, the pencil reduced to the standard problem
//! `L⁻¹ A L⁻ᵀ`, and that matrix diagonalized with cyclic Jacobi rotations.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

pub const MAX_PENCIL_DIM: usize = 4096;
const MAX_SWEEPS: usize = 100;

/// Square, row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return param("matrix rows must form a square");
        }
        Ok(Self { n, data: rows.concat() })
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data.chunks_exact(self.n).map(|row| dot(row, v)).collect()
    }

    fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A symmetric stiffness matrix paired with a symmetric positive-definite mass matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPencil {
    a: Matrix,
    b: Matrix,
    chol: Matrix,
}

impl SymmetricPencil {
    pub fn new(mut a: Matrix, mut b: Matrix) -> Result<Self> {
        if a.dim() != b.dim() {
            return param(format!("pencil sides differ: {} vs {}", a.dim(), b.dim()));
        }
        if a.dim() == 0 || a.dim() > MAX_PENCIL_DIM {
            return param(format!("pencil dimension {} outside 1..={MAX_PENCIL_DIM}", a.dim()));
        }
        for (name, m) in [("A", &a), ("B", &b)] {
            let tol = 1e-12 * m.max_abs().max(1.0);
            if m.asymmetry() > tol {
                return param(format!("{name} is not symmetric (|M - Mt| = {:.3e})", m.asymmetry()));
            }
        }
        a.symmetrize();
        b.symmetrize();
        let chol = cholesky(&b)?;
        Ok(Self { a, b, chol })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn stiffness(&self) -> &Matrix {
        &self.a
    }

    pub fn mass(&self) -> &Matrix {
        &self.b
    }
}

/// Lower-triangular `L` with `L Lᵀ = B`.
pub fn cholesky(b: &Matrix) -> Result<Matrix> {
    let n = b.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = b[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Factorization(format!(
                "mass matrix is not positive definite (pivot {j} = {d:.3e})"
            )));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = b[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// B-orthonormal eigenvectors, stored as columns in the order of `values`.
    pub vectors: Matrix,
    pub sweeps: usize,
}

impl GeneralizedEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }
}

pub fn sym_generalized_eig(p: &SymmetricPencil) -> Result<GeneralizedEigen> {
    let n = p.dim();
    let l = &p.chol;

    // C = L⁻¹ A L⁻ᵀ, built column by column: first W = L⁻¹ A, then C = L⁻¹ Wᵀ.
    let mut w = Matrix::zeros(n);
    for j in 0..n {
        let col = forward_solve(l, &p.a.column(j));
        for i in 0..n {
            w[(i, j)] = col[i];
        }
    }
    let mut c = Matrix::zeros(n);
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|j| w[(i, j)]).collect();
        let col = forward_solve(l, &row);
        for j in 0..n {
            c[(j, i)] = col[j];
        }
    }
    c.symmetrize();

    let (values, q, sweeps) = jacobi(c)?;

    // V = L⁻ᵀ Q
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut vectors = Matrix::zeros(n);
    let mut sorted = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        sorted.push(values[src]);
        let v = backward_solve_transpose(l, &q.column(src));
        for i in 0..n {
            vectors[(i, dst)] = v[i];
        }
    }
    Ok(GeneralizedEigen { values: sorted, vectors, sweeps })
}

fn forward_solve(l: &Matrix, rhs: &[f64]) -> Vec<f64> {
    let n = l.dim();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

fn backward_solve_transpose(l: &Matrix, rhs: &[f64]) -> Vec<f64> {
    let n = l.dim();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Cyclic Jacobi diagonalization of a symmetric matrix; returns `(diag, Q, sweeps)`.
fn jacobi(mut a: Matrix) -> Result<(Vec<f64>, Matrix, usize)> {
    let n = a.dim();
    let mut v = Matrix::identity(n);
    let frob = a.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 || n == 1 {
        return Ok(((0..n).map(|i| a[(i, i)]).collect(), v, 0));
    }
    let target = f64::EPSILON * frob;

    for sweep in 1..=MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= target {
            return Ok(((0..n).map(|i| a[(i, i)]).collect(), v, sweep - 1));
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // Rotation would not change the diagonal at working precision.
                if sweep > 4 && apq.abs() < 1e-3 * f64::EPSILON * app.abs().min(aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    a[(k, p)] = np;
                    a[(p, k)] = np;
                    a[(k, q)] = nq;
                    a[(q, k)] = nq;
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let residual = off_diagonal_norm(&a);
    if residual <= target * 16.0 {
        return Ok(((0..n).map(|i| a[(i, i)]).collect(), v, MAX_SWEEPS));
    }
    Err(Error::Convergence { sweeps: MAX_SWEEPS, residual })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Largest `‖A v − λ B v‖₂ / ‖v‖₂` over all computed pairs.
pub fn max_residual(p: &SymmetricPencil, e: &GeneralizedEigen) -> f64 {
    (0..p.dim())
        .map(|k| {
            let v = e.vector(k);
            let av = p.a.mul_vec(&v);
            let bv = p.b.mul_vec(&v);
            let r: f64 = av.iter().zip(&bv).map(|(x, y)| (x - e.values[k] * y).powi(2)).sum();
            r.sqrt() / dot(&v, &v).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Largest entry of `|VᵀBV − I|`.
pub fn b_orthonormality_defect(p: &SymmetricPencil, e: &GeneralizedEigen) -> f64 {
    let n = p.dim();
    let cols: Vec<Vec<f64>> = (0..n).map(|k| e.vector(k)).collect();
    let bcols: Vec<Vec<f64>> = cols.iter().map(|c| p.b.mul_vec(c)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(&cols[i], &bcols[j]) - want).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eig(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> GeneralizedEigen {
        let p = SymmetricPencil::new(Matrix::from_rows(&a).unwrap(), Matrix::from_rows(&b).unwrap()).unwrap();
        sym_generalized_eig(&p).unwrap()
    }

    #[test]
    fn identity_pencil() {
        let e = eig(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(e.values, vec![1.0, 1.0]);
    }

    #[test]
    fn diagonal_pencil() {
        let e = eig(vec![vec![4.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(e.values, vec![1.0, 4.0]);
        assert_eq!(e.vector(0).iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![0.0, 1.0]);
        assert_eq!(e.vector(1).iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![1.0, 0.0]);
    }

    #[test]
    fn two_by_two_coupled() {
        let e = eig(vec![vec![2.0, 1.0], vec![1.0, 2.0]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!((e.values[0] - 1.0).abs() < 1e-15);
        assert!((e.values[1] - 3.0).abs() < 1e-15);
        let h = 1.0 / 2f64.sqrt();
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!((v0[0] * v0[1] + 0.5).abs() < 1e-15 && (v0[0].abs() - h).abs() < 1e-15);
        assert!((v1[0] * v1[1] - 0.5).abs() < 1e-15 && (v1[0].abs() - h).abs() < 1e-15);
    }

    #[test]
    fn indefinite_mass_rejected() {
        let a = Matrix::identity(2);
        let b = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(SymmetricPencil::new(a, b), Err(Error::Factorization(_))));
    }

    #[test]
    fn asymmetric_stiffness_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(SymmetricPencil::new(a, Matrix::identity(2)).is_err());
    }

    #[test]
    fn random_pencils_meet_residual_and_orthonormality_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for trial in 0..100 {
            let n = rng.gen_range(1..=64);
            let mut a = Matrix::zeros(n);
            let mut g = Matrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    g[(i, j)] = rng.gen_range(-1.0..1.0);
                }
                for j in 0..=i {
                    let v = rng.gen_range(-10.0..10.0);
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            // B = G Gᵀ + n I is safely definite.
            let mut b = Matrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let mut s: f64 = (0..n).map(|k| g[(i, k)] * g[(j, k)]).sum();
                    if i == j {
                        s += n as f64;
                    }
                    b[(i, j)] = s;
                }
            }
            let p = SymmetricPencil::new(a, b).unwrap();
            let e = sym_generalized_eig(&p).unwrap();
            let scale = p.stiffness().max_abs();
            assert!(max_residual(&p, &e) <= 1e-8 * scale, "trial {trial}");
            assert!(b_orthonormality_defect(&p, &e) <= 1e-8, "trial {trial}");
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
