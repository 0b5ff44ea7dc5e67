pub mod asymptotics;
pub mod cli;
pub mod config;
pub mod empirical;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod json;
pub mod kernels;
pub mod linalg;
pub mod measure;
pub mod optimize;
pub mod oracle;
pub mod quadrature;
pub mod simulator;

pub use error::{Error, Result};
