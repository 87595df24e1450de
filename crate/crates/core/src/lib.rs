//! Numerical toolkit for Fourier uniqueness and non-uniqueness pairs.
//!
//! The crate works with two-sided node sequences `Λ`, `M` and functions sampled on a
//! symmetric uniform grid, with the transform convention `f̂(ξ) = ∫ f(x) e^{−2πiξx} dx`.

pub mod cli;
pub mod crystal;
mod error;
pub mod frames;
pub mod io;
pub mod nodes;
pub mod nonuniq;
pub mod quad;
pub mod spectral;
pub mod wirtinger;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
