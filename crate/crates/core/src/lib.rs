pub mod csv;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod reference;
pub mod special;
pub mod spectral;
pub mod stencil;

pub use error::{Error, Result};
