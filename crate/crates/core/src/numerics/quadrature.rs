//! Quadrature rules on coordinate domains.
//!
//! A [`QuadratureGrid`] stores its nodes flattened (`dim` coordinates per
//! node) so that tensor products of one-dimensional rules stay cheap to build
//! and iterate.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

pub const MAX_GAUSS_LEGENDRE: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Polynomial (or trigonometric) degree integrated exactly, per axis.
    pub exactness_degree: usize,
}

impl QuadratureGrid {
    pub fn new(dim: usize, nodes: Vec<f64>, weights: Vec<f64>, exactness_degree: usize) -> Result<Self> {
        if dim == 0 || nodes.len() != dim * weights.len() {
            return param("node/weight layout mismatch");
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
            return param(format!("quadrature weight {w} is not positive"));
        }
        Ok(Self { dim, nodes, weights, exactness_degree })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sum of the weights, i.e. the measure of the coordinate domain.
    pub fn volume(&self) -> f64 {
        kahan_sum(self.weights.iter().copied())
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        kahan_sum(self.nodes().zip(&self.weights).map(|(x, w)| w * f(x)))
    }

    /// Affine map of a one-dimensional rule onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64, from: (f64, f64)) -> Result<Self> {
        if self.dim != 1 || !(b > a) {
            return param("mapped() needs a 1-D rule and a nonempty interval");
        }
        let scale = (b - a) / (from.1 - from.0);
        let nodes = self.nodes.iter().map(|x| a + (x - from.0) * scale).collect();
        let weights = self.weights.iter().map(|w| w * scale).collect();
        Self::new(1, nodes, weights, self.exactness_degree)
    }

    /// Tensor product; the second grid varies fastest.
    pub fn tensor(&self, other: &QuadratureGrid) -> QuadratureGrid {
        let dim = self.dim + other.dim;
        let mut nodes = Vec::with_capacity(self.len() * other.len() * dim);
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (x, wx) in self.nodes().zip(&self.weights) {
            for (y, wy) in other.nodes().zip(&other.weights) {
                nodes.extend_from_slice(x);
                nodes.extend_from_slice(y);
                weights.push(wx * wy);
            }
        }
        QuadratureGrid {
            dim,
            nodes,
            weights,
            exactness_degree: self.exactness_degree.min(other.exactness_degree),
        }
    }

    /// Multiply every weight by `g(node)`, e.g. a volume density.
    pub fn reweighted<F: Fn(&[f64]) -> f64>(&self, g: F) -> Result<Self> {
        let weights = self.nodes().zip(&self.weights).map(|(x, w)| w * g(x)).collect();
        Self::new(self.dim, self.nodes.clone(), weights, self.exactness_degree)
    }
}

/// Gauss-Legendre rule with `n` nodes on `[-1, 1]`, exact through degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureGrid> {
    if n == 0 || n > MAX_GAUSS_LEGENDRE {
        return param(format!("gauss_legendre: n = {n} outside 1..={MAX_GAUSS_LEGENDRE}"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureGrid::new(1, nodes, weights, 2 * n - 1)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Equispaced trapezoid rule on the circle of length `period`.
pub fn uniform_periodic(n: usize, period: f64) -> Result<QuadratureGrid> {
    if n == 0 {
        return param("uniform_periodic: n must be positive");
    }
    if !(period > 0.0) || !period.is_finite() {
        return param(format!("uniform_periodic: period {period} must be positive"));
    }
    let h = period / n as f64;
    let nodes = (0..n).map(|k| k as f64 * h).collect();
    QuadratureGrid::new(1, nodes, vec![h; n], n - 1)
}

pub(crate) fn kahan_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in it {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn one_point_rule() {
        let g = gauss_legendre(1).unwrap();
        assert_eq!(g.node(0), &[0.0]);
        assert_eq!(g.weights(), &[2.0]);
    }

    #[test]
    fn two_point_rule() {
        let g = gauss_legendre(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((g.node(0)[0] + r).abs() < 1e-15);
        assert!((g.node(1)[0] - r).abs() < 1e-15);
        assert!((g.weights()[0] - 1.0).abs() < 1e-15);
        assert!((g.integrate(|x| x[0] * x[0]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn legendre_exactness_and_ordering() {
        for n in [3, 7, 20, 64, 200, 512] {
            let g = gauss_legendre(n).unwrap();
            assert!((g.volume() - 2.0).abs() < 1e-12 * 2.0, "n={n}");
            let xs: Vec<f64> = g.nodes().map(|x| x[0]).collect();
            assert!(xs.windows(2).all(|w| w[0] < w[1]));
            assert!(xs[0] > -1.0 && xs[n - 1] < 1.0);
            for deg in [2 * n - 2, 2 * n - 1].into_iter().filter(|d| *d <= 40) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = g.integrate(|x| x[0].powi(deg as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn legendre_range_checked() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(513).is_err());
    }

    #[test]
    fn trapezoid_examples() {
        let g = uniform_periodic(4, 2.0 * PI).unwrap();
        assert!((g.integrate(|x| x[0].cos().powi(2)) - PI).abs() < 1e-14);

        let g = uniform_periodic(1, 1.0).unwrap();
        assert_eq!(g.weights(), &[1.0]);

        // Frequency n aliases onto the constant.
        let g = uniform_periodic(8, 2.0 * PI).unwrap();
        assert!((g.integrate(|x| (8.0 * x[0]).cos()) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_orthonormality_within_exactness() {
        let n = 33;
        let g = uniform_periodic(n, 2.0 * PI).unwrap();
        let basis = |k: usize, x: f64| -> f64 {
            if k == 0 {
                1.0 / (2.0 * PI).sqrt()
            } else if k % 2 == 1 {
                (k.div_ceil(2) as f64 * x).cos() / PI.sqrt()
            } else {
                ((k / 2) as f64 * x).sin() / PI.sqrt()
            }
        };
        // Products of two degree-16 functions have degree 32 = n - 1.
        for a in 0..33 {
            for b in 0..33 {
                let v = g.integrate(|x| basis(a, x[0]) * basis(b, x[0]));
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "({a},{b}) -> {v}");
            }
        }
    }

    #[test]
    fn tensor_volume() {
        let a = uniform_periodic(5, 2.0).unwrap();
        let b = gauss_legendre(4).unwrap();
        let t = a.tensor(&b);
        assert_eq!(t.dim(), 2);
        assert_eq!(t.len(), 20);
        assert!((t.volume() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_weights_rejected() {
        assert!(QuadratureGrid::new(1, vec![0.0], vec![0.0], 0).is_err());
    }
}
