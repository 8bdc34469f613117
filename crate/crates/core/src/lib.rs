pub mod atpg;
pub mod circuit;
pub mod error;
pub mod exec;
pub mod faults;
pub mod metrics;
pub mod qmath;
pub mod simulator;

pub use error::{Error, Result};
