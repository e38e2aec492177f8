//! Exact maximum a posteriori matching of correlated Erdős–Rényi graph
//! pairs, with the threshold bounds, cycle combinatorics and structural
//! diagnostics that go with it.

pub mod bounds;
pub mod combinatorics;
pub mod experiment;
pub mod error;
pub mod matching;
pub mod model;
pub mod rng;
pub mod structure;
pub mod verify;

pub use error::{Error, Result};
