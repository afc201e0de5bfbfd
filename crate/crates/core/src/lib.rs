pub mod amplitude;
pub mod block_encoding;
pub mod error;
pub mod experiments;
pub mod models;
pub mod operator;
pub mod polynomial;
pub mod qsvt;
pub mod susceptibility;

pub use error::{Error, Result};
