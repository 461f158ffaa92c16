pub mod bmv;
pub mod classical;
pub mod criterion;
pub mod error;
pub mod linalg;
pub mod oscillator;
pub mod quantum;
pub mod sampler;

pub use error::{Error, Result};
