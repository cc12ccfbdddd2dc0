pub mod auctions;
pub mod cli;
pub mod distances;
pub mod error;
pub mod loss;
pub mod mechanisms;
pub mod report;
pub mod rng;
pub mod smoothness;
pub mod submodular;

pub use error::{Error, Result};
