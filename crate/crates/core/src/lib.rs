pub mod acoustic;
pub mod classifiers;
pub mod config;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod evaluation;
pub mod fit;
pub mod linguistic;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use fit::FitTag;
pub use config::RunConfig;
