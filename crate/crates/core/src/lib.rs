//! Moore-Penrose pseudoinverse perturbation toolkit.
//!
//! Every closed-form perturbed pseudoinverse in this crate is computed next to
//! a direct SVD pseudoinverse of the perturbed operator, so each result comes
//! with its own measured discrepancy.

pub mod cli;
pub mod error;
pub mod generators;
pub mod hypothesis;
pub mod linalg;
pub mod matrix_market;
pub mod perturb;
pub mod pinv;
pub mod report;
pub mod reverse_order;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{Matrix, Tolerances, C64};
