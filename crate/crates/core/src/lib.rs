//! Free and interacting scalar fields on discretized compact surfaces.

pub mod error;
pub mod harness;
pub mod interacting;
pub mod mesh;
pub mod sewing;
pub mod sobolev;
pub mod positivity;
pub mod wick;

pub use error::{Error, InvolutionError, Result};
