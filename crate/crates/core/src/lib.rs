//! Z-gradations of the classical complex Lie algebras in block-matrix form,
//! the nonabelian Toda systems they define, and desk-scale numerics for those
//! systems: finite-difference residuals, zero-curvature checks, gauge and
//! conformal transforms, and a characteristic (Goursat) marching solver.
//!
//! The matrix core is generic over [`Scalar`]: exact constructions run over
//! [`Rational`], numerics over `Complex<F>` for any [`Real`] `F`. The aliases
//! below fix the common instantiations.

pub mod cartan;
pub mod error;
pub mod exact;
pub mod grading;
pub mod liealg;
pub mod matfn;
pub mod matrix;
pub mod scalar;
pub mod solver;
pub mod toda;

pub use error::{Error, GridPoint, Result};
pub use matrix::Matrix;
pub use scalar::{Real, Scalar};

/// Arbitrary-precision rational, always in lowest terms.
pub type Rational = num_rational::BigRational;
/// Exact rational matrix.
pub type RatMatrix = Matrix<Rational>;
/// Double-precision complex scalar.
pub type C64 = num_complex::Complex64;
/// Double-precision complex matrix.
pub type CMatrix = Matrix<C64>;
/// Complex matrix over an arbitrary real type.
pub type CMat<F> = Matrix<num_complex::Complex<F>>;

/// `f64` grid field.
pub type GridField = toda::GridField<f64>;
/// `f64` coupling blocks.
pub type CBlocks = toda::CBlocks<f64>;
/// `f64` coupling field.
pub type CField = toda::CField<f64>;
pub type GridSpec = toda::GridSpec<f64>;
pub type ResidualReport = toda::ResidualReport<f64>;
pub type CharacteristicData = solver::CharacteristicData<f64>;
pub type SolveResult = solver::SolveResult<f64>;
