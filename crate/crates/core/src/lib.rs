pub mod error;
pub mod linalg;
pub mod sdp;

pub use error::{Error, Result};
pub mod quantum;
pub mod divergences;
pub mod optim;
pub mod capacity;
pub mod bounds;
pub mod harness;
