//! Template search for isohedral tile shapes that resemble a goal polygon.

pub mod distances;
pub mod error;
pub mod geometry;
pub mod goal;
pub mod linalg;
pub mod render;
pub mod search;
pub mod solvers;
pub mod templates;

pub use error::{Error, Result};
