//! Semiconstrained systems: words whose forbidden-pattern frequencies are
//! capped rather than zero.
//!
//! The crate covers membership and enumeration, capacity through a
//! relative-entropy program, closed-form bounds for `(0,k,p)`-RLL systems,
//! De Bruijn Markov chains with integer circulation rounding, and a
//! capacity-achieving encoder/decoder.

pub mod bounds;
pub mod capacity;
pub mod codec;
pub mod error;
mod lp;
pub mod markov;
pub mod measures;
pub mod rational;
pub mod words;

pub use error::{Error, Result};
pub use rational::Rational;
