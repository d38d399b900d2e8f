//! Equivariant factorization of maps into representation spaces through
//! finite measure spaces, with the supporting minimax solver, unitarizer
//! and stochastic checks.

pub mod error;
pub mod factorization;
pub mod group_model;
pub mod instance;
pub mod instances;
pub mod linalg;
pub mod measure_space;
pub mod minimax_solver;
pub mod report;
pub mod stochastic_verify;
pub mod unitarization;

pub use error::{Error, Result};
