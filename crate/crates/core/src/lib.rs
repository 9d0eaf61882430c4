//! Numerical laboratory for elliptic and harmonic Poincare series on SL2(Z).

pub mod cli;
pub mod error;
pub mod expansion;
pub mod halfplane;
pub mod inner;
pub mod operators;
pub mod pointfn;
pub mod poincare;
pub mod report;
pub mod special;

pub use error::{Error, Result};
pub use halfplane::{ModMatrix, UHPoint};
