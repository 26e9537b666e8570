//! Hermite moment systems for the linearized Boltzmann equation, their
//! Maxwell and Onsager wall boundary operators, a boundary stability
//! checker and a steady heat-conduction channel solver.

pub mod basis;
pub mod boundary;
pub mod channel;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod stability;
pub mod system;
pub mod tensor;

pub use error::{Error, Result};
