pub mod checkpoint;
pub mod cli;
pub mod error;
pub mod fit;
pub mod inr;
mod io;
pub mod lowrank;
pub mod metrics;
pub mod meta;
pub mod numerics;
pub mod phantom;
pub mod trajectory;
pub mod video;

pub use checkpoint::Checkpoint;
pub use error::{Error, FormatError, Result};
pub use io::{read_file, write_atomic};
