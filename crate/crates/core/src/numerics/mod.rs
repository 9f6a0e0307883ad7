//! Deterministic numerical kernels: quadrature rules, the dense symmetric
//! generalized eigensolver and periodic Galerkin assembly.

pub mod eigen;
pub mod galerkin;
pub mod quadrature;

pub use eigen::{sym_generalized_eig, GeneralizedEigen, Matrix, SymmetricPencil};
pub use galerkin::{assemble_periodic_galerkin, assemble_sturm_liouville, SturmLiouville};
pub use quadrature::{gauss_legendre, uniform_periodic, QuadratureGrid};
