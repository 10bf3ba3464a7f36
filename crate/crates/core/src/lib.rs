//! Hybrid zonotopes: set representation, closed-form set operations, an
//! LP/MILP query engine and exact forward reachability of mixed logical
//! dynamical systems.

pub mod error;
pub mod geomio;
pub mod linalg;
pub mod mld;
pub mod optq;
pub mod reach;
pub mod reduce;
pub mod setops;
pub mod setrep;

pub use error::{Error, Result};
