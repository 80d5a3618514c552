pub mod carleman;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod forward;
pub mod geometry;
pub mod linalg;
pub mod reconstruction;

pub use error::{Error, Result};
