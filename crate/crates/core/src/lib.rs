//! Covariant Hamiltonian dynamics of charged particles coupled to a truncated
//! electromagnetic field, with forms of dynamics, Poincare generators and
//! bracket verification.

pub mod brackets;
pub mod distributions;
pub mod dynamics;
pub mod equivalence;
pub mod error;
pub mod field_sector;
pub mod form;
pub mod frame;
pub mod generators;
pub mod lattice;
pub mod oracle;
pub mod phase;
pub mod reduced;
pub mod report;
pub mod scalar;
pub mod scenario;
pub mod sweep;
pub mod tensors;

pub use error::{Error, Result};
