pub mod error;
pub mod experiments;
pub mod gp;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod optimize;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
