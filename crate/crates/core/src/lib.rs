pub mod analysis;
pub mod bootstrap;
pub mod confidence;
pub mod design;
pub mod error;
pub mod io;
pub mod method;
pub mod numerics;
pub mod procedures;
pub mod sim;

pub use error::{Error, Result};
