pub mod cli;
pub mod data;
pub mod eval;
pub mod error;
pub mod learning;
pub mod protocol;
pub mod ternary;
pub mod types;

pub use error::{Error, Result};
