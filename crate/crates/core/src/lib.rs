pub mod cli;
pub mod discrete;
pub mod error;
pub mod evaluate;
pub mod exact_solutions;
pub mod field;
pub mod kernels;
pub mod quadrature;
pub mod special_math;
pub mod wos;

pub use error::{Error, Result};
