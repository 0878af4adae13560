pub mod algebra;
pub mod corpus;
pub mod error;
pub mod group_ring;
pub mod io;
pub mod invariants;
pub mod ktheory;
pub mod linalg;
pub mod padic;
pub mod par;
pub mod selftest;
pub mod tower;

pub use error::{Error, Result};
