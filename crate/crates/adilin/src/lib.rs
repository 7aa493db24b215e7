//! Low-complexity linearization of frequency-dependent ADC-interface
//! distortion.
//!
//! The crate models two distortion mechanisms (a pre-sampling memory
//! polynomial and a post-sampling Hammerstein chain), designs compensating
//! linearizers by regularized least squares, and accounts for the arithmetic
//! cost of running them. Two linearizer families are provided: power
//! branches (Hammerstein) and bias branches built from shifted modulus or
//! ReLU nonlinearities, which trade all branch multiplications for
//! additions.

pub mod analysis;
pub mod design;
pub mod distortion;
pub mod error;
pub mod experiment;
pub mod fir;
pub mod linearizer;
pub mod signal;

pub use error::{Error, Result};
