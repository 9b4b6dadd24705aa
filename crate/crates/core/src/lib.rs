//! Log-determinant estimation by stochastic Lanczos quadrature (SLQ).
//!
//! The crate covers the whole pipeline:
//!
//! * [`operators`]: implicit symmetric matrices (dense, sparse, diagonal and a
//!   Householder-similarity spectral form), synthetic generators and a Matrix
//!   Market reader.
//! * [`lanczos`] and [`tridiag_eig`]: the Lanczos iteration and the Gauss rule
//!   read off its Jacobi matrix.
//! * [`quadrature`]: spectral step measures and exact integrals used as oracles.
//! * [`bounds`]: certified `(m, N)` plans, including an error allocation that
//!   minimizes the total number of matrix–vector products.
//! * [`slq`]: the estimator itself.
//! * [`diagnostics`]: checks of when Gauss nodes come out symmetric.

pub mod bounds;
pub mod dense;
pub mod diagnostics;
pub mod error;
pub mod lanczos;
pub mod operators;
pub mod quadrature;
pub mod slq;
pub mod tridiag_eig;

pub use bounds::{plan, BoundPlan, PlanRequest, Theorem};
pub use dense::DenseMatrix;
pub use error::{Result, SlqError};
pub use lanczos::{lanczos, LanczosOptions, LanczosResult, QuadratureRule};
pub use operators::{LinearOperator, OperatorSpec, SpectrumBounds};
pub use quadrature::{AffineMap, ScalarFn, SpectralMeasure};
pub use slq::{estimate_with_plan, slq_estimate, EstimateResult, PlannedRunOptions, SlqConfig};
pub use tridiag_eig::{EigenDecomposition, TridiagonalMatrix};
