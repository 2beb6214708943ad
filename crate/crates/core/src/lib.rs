pub mod error;
pub mod features;
pub mod measures;
pub mod pipeline;
pub mod qcore;
pub mod sdp;
pub mod states;
pub mod svm;

pub use error::{Error, Result};
