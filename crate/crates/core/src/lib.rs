pub mod channel;
pub mod mdp;
pub mod error;
pub mod experiments;
pub mod model;
pub mod policies;
pub mod simulate;
pub mod solver;

pub use error::{Error, Result};
