//! Numerical laboratory for mean matrix inequalities over orthogonal and
//! unitary cosets: Haar sampling, sphere log-integrals, average spectral
//! radius estimation, Gershgorin localization, eigenvalue perturbation
//! derivatives, and exact dimension-2 analysis.

pub mod dim2;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod field;
pub mod integrals;
pub mod linalg;
pub mod matrix;
pub mod perturb;
pub mod quad;
pub mod sampling;
pub mod spectral;
pub mod stats;
pub mod tolerances;

pub use error::{Error, Result};
pub use field::{Field, C64};
pub use matrix::{AnyMatrix, SquareMatrix};
