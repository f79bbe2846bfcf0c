pub mod distances;
pub mod error;
pub mod kernels;
pub mod localstats;
pub mod metrics;
pub mod null;
pub mod testing;
pub mod types;
pub mod weights;

pub use error::{Error, Result};
pub mod pipeline;
pub mod sim;
