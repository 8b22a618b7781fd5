pub mod bench;
pub mod cli;
pub mod elements;
pub mod error;
pub mod imperfection;
pub mod mermin;
pub mod mzim;
pub mod render;
pub mod state;

pub use error::{Error, Result};
