//! Orthonormal Laplace-Beltrami eigenbases on three model analytic manifolds.
//!
//! * [`ManifoldModel::FlatTorus`]: `R^d / (P_1 Z × … × P_d Z)` for `d ∈ {1, 2}`,
//!   with the real Fourier basis.
//! * [`ManifoldModel::Sphere2`]: the unit round sphere with real spherical
//!   harmonics in the chart `(θ, φ)`.
//! * [`ManifoldModel::RevTorus`]: the torus of revolution with metric
//!   `r² du² + (R + r cos u)² dθ²`, solved by separation into per-`m`
//!   periodic Sturm-Liouville problems in `u`.
//!
//! Modes are sorted by ascending `λ` (the square root of the eigenvalue);
//! ties are broken by the lexicographic order of the representation.

mod flat_torus;
pub mod legendre;
mod rev_torus;
mod sphere;
mod storage;

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numerics::quadrature::QuadratureGrid;

pub use rev_torus::eigen_residual;
pub use storage::{basis_digest, load_basis, save_basis, BasisExport, ModeExport, FORMAT_VERSION};

pub const MAX_TORUS_FREQUENCY: i64 = 128;
pub const MAX_SPHERE_DEGREE: u32 = 64;
pub const MAX_REV_TORUS_ORDER: u32 = 32;
pub const MAX_REV_TORUS_TRUNCATION: usize = 256;

/// Relative slack on the `λ ≤ lambda_max` cutoff, so that integer spectra are
/// not split by rounding.
const CUTOFF_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ManifoldModel {
    FlatTorus { periods: Vec<f64> },
    Sphere2,
    RevTorus { major: f64, minor: f64 },
}

impl ManifoldModel {
    pub fn flat_torus(dim: usize, period: f64) -> Result<Self> {
        let m = ManifoldModel::FlatTorus { periods: vec![period; dim] };
        m.validate()?;
        Ok(m)
    }

    pub fn rev_torus(major: f64, minor: f64) -> Result<Self> {
        let m = ManifoldModel::RevTorus { major, minor };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ManifoldModel::FlatTorus { periods } => {
                if !(1..=2).contains(&periods.len()) {
                    return param(format!("flat torus dimension {} not in {{1, 2}}", periods.len()));
                }
                if let Some(p) = periods.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
                    return param(format!("flat torus period {p} must be positive"));
                }
                Ok(())
            }
            ManifoldModel::Sphere2 => Ok(()),
            ManifoldModel::RevTorus { major, minor } => {
                if !(*minor > 0.0 && major > minor && major.is_finite()) {
                    return param(format!("torus of revolution needs R > r > 0 (got R = {major}, r = {minor})"));
                }
                Ok(())
            }
        }
    }

    /// Dimension of the manifold.
    pub fn dim(&self) -> usize {
        match self {
            ManifoldModel::FlatTorus { periods } => periods.len(),
            _ => 2,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            ManifoldModel::FlatTorus { periods } => periods.iter().product(),
            ManifoldModel::Sphere2 => 4.0 * PI,
            ManifoldModel::RevTorus { major, minor } => 4.0 * PI * PI * major * minor,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, ManifoldModel::FlatTorus { .. })
    }

    /// Injectivity radius of the metric.
    pub fn injectivity_radius(&self) -> f64 {
        match self {
            ManifoldModel::FlatTorus { periods } => periods.iter().copied().fold(f64::INFINITY, f64::min) / 2.0,
            ManifoldModel::Sphere2 => PI,
            // Shortest closed geodesic is the inner meridian of length 2πr.
            ManifoldModel::RevTorus { minor, .. } => PI * minor,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ManifoldModel::FlatTorus { periods } => {
                let p: Vec<String> = periods.iter().map(|p| format!("{p}")).collect();
                format!("flat-torus(d={}, periods=[{}])", periods.len(), p.join(", "))
            }
            ManifoldModel::Sphere2 => "sphere".into(),
            ManifoldModel::RevTorus { major, minor } => format!("rev-torus(R={major}, r={minor})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModeRep {
    /// `cos(2π k·x / P)` or `sin(…)`; `freq` lies in the half space
    /// (first nonzero component positive).
    Torus { freq: Vec<i32>, parity: Parity },
    /// Real spherical harmonic `Y_l^m`.
    Sphere { l: u32, m: i32 },
    /// `g(u) · Θ_m(θ)` with `g` given by its real Fourier coefficients.
    /// `branch` counts the profiles of a fixed `m` by ascending eigenvalue.
    RevTorus { m: u32, parity: Parity, branch: u32, profile: Vec<f64> },
}

impl ModeRep {
    fn lex_cmp(&self, other: &ModeRep) -> Ordering {
        match (self, other) {
            (ModeRep::Torus { freq: a, parity: p }, ModeRep::Torus { freq: b, parity: q }) => {
                a.cmp(b).then(p.cmp(q))
            }
            (ModeRep::Sphere { l: a, m: p }, ModeRep::Sphere { l: b, m: q }) => a.cmp(b).then(p.cmp(q)),
            (
                ModeRep::RevTorus { m: a, parity: p, branch: s, .. },
                ModeRep::RevTorus { m: b, parity: q, branch: t, .. },
            ) => a.cmp(b).then(p.cmp(q)).then(s.cmp(t)),
            _ => Ordering::Equal,
        }
    }

    /// Short human-readable name, e.g. `cos2`, `sin1_-3`, `Y2_-1`, `rt-m3-cos-b0`.
    pub fn name(&self) -> String {
        match self {
            ModeRep::Torus { freq, parity } => {
                if freq.iter().all(|k| *k == 0) {
                    return "const".into();
                }
                let k: Vec<String> = freq.iter().map(|k| k.to_string()).collect();
                format!("{}{}", if *parity == Parity::Cos { "cos" } else { "sin" }, k.join("_"))
            }
            ModeRep::Sphere { l, m } => format!("Y{l}_{m}"),
            ModeRep::RevTorus { m, parity, branch, .. } => {
                format!("rt-m{m}-{}-b{branch}", if *parity == Parity::Cos { "cos" } else { "sin" })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub id: usize,
    pub lambda: f64,
    pub rep: ModeRep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    /// Largest relative pencil residual `‖Av − μBv‖ / (‖A‖_max ‖v‖)` of any kept mode.
    Numerical { residual_bound: f64 },
}

/// Discretization controls for [`build_basis`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resolution {
    /// Number of factors whose products the grid must integrate exactly
    /// (norms need twice this bandwidth).
    pub product_order: usize,
    /// Override of the per-axis exactness degree of the quadrature grid.
    pub grid_exactness: Option<usize>,
    /// Override of the torus-of-revolution Galerkin truncation `N`.
    pub galerkin_n: Option<usize>,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { product_order: 2, grid_exactness: None, galerkin_n: None }
    }
}

/// Quadrature layout: one 1-D rule per chart axis and their tensor product.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GridLayout {
    pub axes: Vec<QuadratureGrid>,
    /// Exactness degree per axis in the units of [`SpectralBasis::mode_bandwidth`].
    pub exactness: Vec<usize>,
    pub grid: QuadratureGrid,
    /// Model-specific tables evaluated on the axis nodes.
    pub tables: Tables,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tables {
    /// Per axis, `cos(ω k x_i)` and `sin(ω k x_i)` indexed `[k][i]`.
    Torus { cos: Vec<Vec<Vec<f64>>>, sin: Vec<Vec<Vec<f64>>> },
    /// Orthonormal Legendre tables at each `θ` node.
    Sphere { legendre: Vec<Vec<f64>> },
    /// Profile values `g(u_k)` indexed by mode id.
    RevTorus { profiles: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub model: ManifoldModel,
    pub lambda_max: f64,
    pub resolution: Resolution,
    pub modes: Vec<Mode>,
    pub provenance: Provenance,
    /// Galerkin truncation used for the torus of revolution; 0 otherwise.
    pub galerkin_n: usize,
    pub(crate) layout: GridLayout,
}

pub fn build_basis(model: &ManifoldModel, lambda_max: f64, resolution: &Resolution) -> Result<SpectralBasis> {
    model.validate()?;
    if !(lambda_max >= 0.0) || !lambda_max.is_finite() {
        return param(format!("lambda_max = {lambda_max} must be a nonnegative number"));
    }
    if resolution.product_order == 0 {
        return param("product_order must be at least 1");
    }
    let cutoff = lambda_max * (1.0 + CUTOFF_SLACK);
    let (raw, provenance, galerkin_n) = match model {
        ManifoldModel::FlatTorus { periods } => (flat_torus::enumerate(periods, cutoff)?, Provenance::Exact, 0),
        ManifoldModel::Sphere2 => (sphere::enumerate(cutoff)?, Provenance::Exact, 0),
        ManifoldModel::RevTorus { major, minor } => {
            let n = match resolution.galerkin_n {
                Some(n) => n,
                None => 64.max(4 * (lambda_max * minor).ceil() as usize),
            };
            if n > MAX_REV_TORUS_TRUNCATION {
                return Err(Error::UnderResolved {
                    family: "rev-torus profile".into(),
                    detail: format!("Galerkin truncation N = {n} exceeds {MAX_REV_TORUS_TRUNCATION}"),
                });
            }
            let (modes, residual) = rev_torus::solve(*major, *minor, cutoff, n)?;
            (modes, Provenance::Numerical { residual_bound: residual }, n)
        }
    };
    SpectralBasis::assemble(model.clone(), lambda_max, resolution.clone(), raw, provenance, galerkin_n)
}

impl SpectralBasis {
    /// Sort, number and lay out a list of `(λ, rep)` pairs.
    pub(crate) fn assemble(
        model: ManifoldModel,
        lambda_max: f64,
        resolution: Resolution,
        mut raw: Vec<(f64, ModeRep)>,
        provenance: Provenance,
        galerkin_n: usize,
    ) -> Result<Self> {
        raw.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.lex_cmp(&b.1)));
        let modes: Vec<Mode> =
            raw.into_iter().enumerate().map(|(id, (lambda, rep))| Mode { id, lambda, rep }).collect();
        Self::from_modes(model, lambda_max, resolution, modes, provenance, galerkin_n)
    }

    pub(crate) fn from_modes(
        model: ManifoldModel,
        lambda_max: f64,
        resolution: Resolution,
        modes: Vec<Mode>,
        provenance: Provenance,
        galerkin_n: usize,
    ) -> Result<Self> {
        let layout = match &model {
            ManifoldModel::FlatTorus { periods } => flat_torus::layout(periods, &modes, &resolution)?,
            ManifoldModel::Sphere2 => sphere::layout(&modes, &resolution)?,
            ManifoldModel::RevTorus { major, minor } => {
                rev_torus::layout(*major, *minor, &modes, &resolution, galerkin_n)?
            }
        };
        Ok(Self { model, lambda_max, resolution, modes, provenance, galerkin_n, layout })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mode(&self, id: usize) -> Result<&Mode> {
        self.modes
            .get(id)
            .ok_or_else(|| Error::Parameter(format!("mode id {id} not in basis of {} modes", self.modes.len())))
    }

    /// Look a mode up by its [`ModeRep::name`] or by its numeric id.
    pub fn find(&self, name: &str) -> Result<&Mode> {
        if let Ok(id) = name.parse::<usize>() {
            return self.mode(id);
        }
        self.modes
            .iter()
            .find(|m| m.rep.name() == name)
            .ok_or_else(|| Error::Parameter(format!("no mode named {name:?} with lambda <= {}", self.lambda_max)))
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.layout.grid
    }

    /// One-dimensional rules whose tensor product is [`Self::grid`].
    pub fn axes(&self) -> &[QuadratureGrid] {
        &self.layout.axes
    }

    /// Exactness degree of the grid on each chart axis.
    pub fn exactness(&self) -> &[usize] {
        &self.layout.exactness
    }

    /// Per-axis bandwidth of a mode, in the units of [`Self::exactness`]:
    /// frequencies on the flat torus, the degree `l` on the sphere, and
    /// `(N, m)` on the torus of revolution.
    pub fn mode_bandwidth(&self, mode: &Mode) -> Vec<usize> {
        match &mode.rep {
            ModeRep::Torus { freq, .. } => freq.iter().map(|k| k.unsigned_abs() as usize).collect(),
            ModeRep::Sphere { l, .. } => vec![*l as usize],
            ModeRep::RevTorus { m, profile, .. } => vec![profile.len() / 2, *m as usize],
        }
    }

    /// Number of modes with `λ ≤ lambda`.
    pub fn counting(&self, lambda: f64) -> usize {
        self.modes.partition_point(|m| m.lambda <= lambda)
    }

    /// Value of the normalized eigenfunction at a chart point.
    pub fn evaluate(&self, mode: &Mode, point: &[f64]) -> Result<f64> {
        if point.len() != self.model.dim() || point.iter().any(|x| !x.is_finite()) {
            return param(format!("point {point:?} is outside the chart of {}", self.model.label()));
        }
        match (&self.model, &mode.rep) {
            (ManifoldModel::FlatTorus { periods }, ModeRep::Torus { freq, parity }) => {
                Ok(flat_torus::evaluate(periods, freq, *parity, point))
            }
            (ManifoldModel::Sphere2, ModeRep::Sphere { l, m }) => {
                if !(0.0..=PI).contains(&point[0]) {
                    return param(format!("polar angle {} outside [0, π]", point[0]));
                }
                Ok(legendre::real_harmonic(*l, *m, point[0], point[1]))
            }
            (ManifoldModel::RevTorus { major, minor }, ModeRep::RevTorus { m, parity, profile, .. }) => {
                Ok(rev_torus::evaluate(*major, *minor, *m, *parity, profile, point))
            }
            _ => param("mode does not belong to this manifold model"),
        }
    }

    /// Values of mode `id` on [`Self::grid`] (second axis fastest).
    pub fn sample(&self, id: usize) -> Result<Vec<f64>> {
        let mode = self.mode(id)?;
        Ok(match &self.layout.tables {
            Tables::Torus { .. } => flat_torus::sample(&self.model, &self.layout, mode),
            Tables::Sphere { .. } => sphere::sample(&self.layout, mode),
            Tables::RevTorus { .. } => rev_torus::sample(&self.layout, mode),
        })
    }

    /// Quadrature inner products `⟨f, φ_i⟩` for every mode, from samples of
    /// `f` on [`Self::grid`].
    pub fn project(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.layout.grid.len() {
            return param(format!("{} samples for a grid of {} nodes", samples.len(), self.layout.grid.len()));
        }
        Ok(match &self.layout.tables {
            Tables::Torus { .. } => flat_torus::project(&self.model, &self.layout, &self.modes, samples),
            Tables::Sphere { .. } => sphere::project(&self.layout, &self.modes, samples),
            Tables::RevTorus { .. } => rev_torus::project(&self.layout, &self.modes, samples),
        })
    }

    /// Largest deviation of the quadrature Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..self.modes.len() {
            let c = self.project(&self.sample(i)?)?;
            for (j, v) in c.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - want).abs());
            }
        }
        Ok(worst)
    }

    /// Smallest cutoff known to hold every mode of this basis.
    pub fn max_lambda(&self) -> f64 {
        self.modes.last().map_or(0.0, |m| m.lambda)
    }
}

fn axis_slices(layout: &GridLayout) -> (&[f64], &[f64]) {
    let w0 = layout.axes[0].weights();
    let w1: &[f64] = layout.axes.get(1).map_or(&[1.0], |a| a.weights());
    (w0, w1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn circle_up_to_three() {
        let m = ManifoldModel::flat_torus(1, TAU).unwrap();
        let b = build_basis(&m, 3.0, &Resolution::default()).unwrap();
        let lambdas: Vec<f64> = b.modes.iter().map(|m| m.lambda).collect();
        assert_eq!(lambdas, vec![0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert_eq!(b.modes[1].rep.name(), "cos1");
        assert_eq!(b.modes[2].rep.name(), "sin1");
        assert_eq!(b.provenance, Provenance::Exact);
        let cos2 = b.find("cos2").unwrap();
        assert!((b.evaluate(cos2, &[0.0]).unwrap() - 0.5641895835).abs() < 1e-10);
        assert!(b.orthonormality_defect().unwrap() < 1e-12);
    }

    #[test]
    fn sphere_degree_three() {
        let b = build_basis(&ManifoldModel::Sphere2, 12f64.sqrt(), &Resolution::default()).unwrap();
        assert_eq!(b.len(), 16);
        assert_eq!(b.counting(2f64.sqrt()), 4);
        assert_eq!(b.counting(6f64.sqrt()), 9);
        let y00 = b.find("Y0_0").unwrap();
        assert!((b.evaluate(y00, &[1.0, 2.0]).unwrap() - 0.2820947918).abs() < 1e-10);
        let y10 = b.find("Y1_0").unwrap();
        assert!((b.evaluate(y10, &[0.0, 0.0]).unwrap() - 0.4886025119).abs() < 1e-10);
        assert!(b.evaluate(y10, &[4.0, 0.0]).is_err());
        assert!(b.orthonormality_defect().unwrap() < 1e-12);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(ManifoldModel::flat_torus(3, 1.0).is_err());
        assert!(ManifoldModel::flat_torus(1, -1.0).is_err());
        assert!(ManifoldModel::rev_torus(1.0, 2.0).is_err());
        assert!(build_basis(&ManifoldModel::Sphere2, -1.0, &Resolution::default()).is_err());
    }

    #[test]
    fn chart_violations_rejected() {
        let m = ManifoldModel::flat_torus(2, TAU).unwrap();
        let b = build_basis(&m, 1.0, &Resolution::default()).unwrap();
        assert!(b.evaluate(&b.modes[1], &[0.0]).is_err());
        assert!(b.evaluate(&b.modes[1], &[f64::NAN, 0.0]).is_err());
    }
}
