//! Explicitly correlated Gaussian variational machinery.

pub mod assemble;
pub mod basis;
pub mod elements;
pub mod gevp;
pub mod optimize;
pub mod system;

pub use assemble::{assemble, element, raw_elements, symmetrize_element};
pub use basis::GaussianBasis;
pub use elements::{coulomb, kinetic, overlap};
pub use gevp::{solve_gevp, SpectralResult, DEFAULT_COND_CUTOFF};
pub use optimize::{optimize, optimize_basis, optimize_from, OptimizeConfig, Optimized};
pub use system::{Interaction, SystemSpec};
