//! Tensor-train exponentials of polynomial chaos exponents.

pub mod als;
pub mod basis;
pub mod benchmarks;
pub mod config;
pub mod galerkin;
pub mod error;
pub mod estimate;
pub mod linalg;
pub mod tt;

pub use error::{Error, Result};
