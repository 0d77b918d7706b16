pub mod charges;
pub mod diagnostics;
pub mod dsu;
pub mod error;
pub mod exhaustive;
pub mod graph;
pub mod harness;
pub mod independence;
pub mod matching;
pub mod process;

pub use error::{Error, Result};
