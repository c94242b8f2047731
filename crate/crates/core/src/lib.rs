//! Coupled-spin register simulator, logical-network IR, pulse-sequence
//! compiler and the cat-state benchmark built on top of them.

pub mod bench;
pub mod linalg;
pub mod netir;
pub mod optim;
pub mod pulsec;
pub mod qsim;
pub mod spinsys;

pub use qsim::{DeviationMatrix, NoiseModel, NoiseSettings, QsimError};
pub use spinsys::{load_spin_system, SpinSystem, ValidationReport};
