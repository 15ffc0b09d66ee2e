//! Few-body Coulomb systems: correlated-Gaussian variational energies,
//! stability diagrams of three charges, critical nuclear charge, and
//! numerical checks of the resolvent, decay and state-count bounds used to
//! reason about bound states at threshold.
//!
//! The algebra (frames, matrix elements, eigenproblem, basis growth) is
//! generic over [`Scalar`]; the drivers that integrate ODEs or run
//! quadratures work in `f64`.

// `!(x > 0.0)` guards are kept so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cg;
pub mod decay_clr;
pub mod error;
pub mod greens;
pub mod kinematics;
pub mod scalar;
pub mod seq_diagnostics;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type MassCharge = kinematics::MassCharge<f64>;
pub type JacobiFrame = kinematics::JacobiFrame<f64>;
pub type SystemSpec = cg::SystemSpec<f64>;
pub type GaussianBasis = cg::GaussianBasis<f64>;
pub type SpectralResult = cg::SpectralResult<f64>;

pub type JacobiFrameF32 = kinematics::JacobiFrame<f32>;
pub type SystemSpecF32 = cg::SystemSpec<f32>;
pub type GaussianBasisF32 = cg::GaussianBasis<f32>;
pub type SpectralResultF32 = cg::SpectralResult<f32>;
