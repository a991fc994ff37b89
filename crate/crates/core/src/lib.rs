pub mod error;
pub mod coord;
pub mod dual;
pub mod experiments;
pub mod linalg;
pub mod network;
pub mod oracle;
pub mod solver;

pub use error::{Error, Result};
