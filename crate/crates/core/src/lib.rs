//! Qudit simulation toolkit for testing circuit depth through symmetry,
//! learning shallow circuits from local queries and compiling 1D quantum
//! cellular automata into staircase circuits.

pub mod circuit;
pub mod decompose;
pub mod error;
pub mod haar;
pub mod learning;
pub mod linalg;
pub mod operator;
pub mod par;
pub mod pauli;
pub mod protocol;
pub mod qca;
pub mod seed;
pub mod state;

pub use error::{Error, Result};
