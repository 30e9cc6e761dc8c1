pub mod beurling;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod operator;
pub mod polynomial;
pub mod report;
pub mod stability;
pub mod subspace;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64;
