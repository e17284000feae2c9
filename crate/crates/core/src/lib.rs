pub mod config;
pub mod error;
pub mod funcspace;
pub mod measures;
pub mod padic;
pub mod process;
pub mod tower;
pub mod verify;
pub mod vladimirov;

pub use error::{Error, Result};
