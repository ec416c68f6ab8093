//! Interferometric quantum sensing with critical spin chains.
//!
//! The crate builds spin-chain Hamiltonians and probe states, imprints a phase
//! `e^{iθO}`, applies decoherence channels and evaluates quantum and classical
//! Fisher information together with error-propagation precision.
//!
//! Qubit ordering is global: site 0 is the most significant bit of a basis
//! index, and `|0⟩` is the `Z = +1` state.

pub mod channels;
pub mod deformed;
mod error;
pub mod experiment;
pub mod fermion;
pub mod metrology;
pub mod models;
pub mod numeric;
pub mod qcore;
pub mod subsys;
pub mod symmetry;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
