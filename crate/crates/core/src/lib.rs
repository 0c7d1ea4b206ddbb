pub mod check;
pub mod cli;
pub mod error;
pub mod expfam;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod manifold;
pub mod product;
pub mod special;
pub mod submersion;

pub use error::{GeomError, Result};
