pub mod born;
pub mod classical;
pub mod cli;
pub mod compat;
pub mod cournot;
pub mod error;
pub mod format;
pub mod hilbert;
pub mod scenarios;
pub mod squant;
pub mod tree;

pub use error::{Error, Result};
