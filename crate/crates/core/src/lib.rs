pub mod cli;
pub mod densemath;
pub mod entanglement;
pub mod error;
pub mod format;
pub mod kd;
pub mod optimize;
pub mod seeding;
pub mod states;
pub mod verify;
pub mod weakvalue;

pub use error::{Error, Result};
