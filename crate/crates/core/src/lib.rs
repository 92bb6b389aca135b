//! Geodesic combings of hyperbolic group examples, their Perron–Frobenius
//! structure, and central limit statistics of combable functions.

pub mod alphabet;
pub mod clt;
pub mod combable;
pub mod combing;
pub mod digraph;
pub mod error;
pub mod fixtures;
pub mod group;
pub mod linalg;
pub mod quasimorphism;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
