pub mod bruno;
pub mod error;
pub mod factors;
pub mod engines;
pub mod fourier;
pub mod series;

pub use error::{Error, Result};
