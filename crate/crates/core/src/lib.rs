pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod fiducials;
pub mod pipeline;
pub mod preprocess;
pub mod regress;
pub mod rng;
pub mod select;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
