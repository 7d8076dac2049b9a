pub mod baseband;
pub mod channel;
pub mod cli;
pub mod cryptanalysis;
pub mod error;
pub mod iqfile;
pub mod keys;
pub mod rx;
pub mod sim;
pub mod transmitter;

pub use error::{Error, Result};
