pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod forecast;
pub mod ingest;
pub mod net;
pub mod train;
pub mod verify;

mod container;

pub use error::{DuneError, Result};
