pub mod calculus;
pub mod complex;
pub mod error;
pub mod fftnd;
pub mod fourier;
pub mod grid;
pub mod lab;
pub mod lattice;
pub mod measure;
pub mod rng;

pub use error::{LabError, Result};
