#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod cauchy;
pub mod contour;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod monodromy;
pub mod optim;
pub mod recon;
pub mod solver;
pub mod taugen;
pub mod verify;
pub mod weyl;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
