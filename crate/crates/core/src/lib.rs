//! Finite dyadic models for operator-valued harmonic analysis.
//!
//! Everything here works on the torus `[0,1)^d` cut into a finite dyadic
//! hierarchy of levels `0..=L`. Functions are constant on the finest cells
//! and take values in small finite-dimensional spaces (`ℓ^q_n` vectors,
//! operators between them, or projective tensors), so every quantity of
//! interest (martingale transforms, paraproducts, BMO and `H¹` norms,
//! R-bounds, Calderón–Zygmund constants) is computable exactly or bracketed
//! by certified bounds.
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration and the
//! command line live in the companion `dyadlab` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod martingale;
pub mod norms;
pub mod paraproduct;
pub mod quadrature;
pub mod rbound;
pub mod rng;
pub mod step;
pub mod value;

pub use error::{Error, Result};
pub use grid::{Cell, DyadicGrid, HaarFunction};
pub use step::StepFunction;
pub use value::{TensorValue, ValueSpace};
