pub mod chain;
pub mod construct;
pub mod degseq;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod oracle;
pub mod stats;

pub use error::{Error, Result};
