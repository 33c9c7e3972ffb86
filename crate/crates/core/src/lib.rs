pub mod error;
pub mod mesh;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub mod fem;
pub mod container;
pub mod affine;
pub mod rbm;
pub mod uq;
pub mod cli;
