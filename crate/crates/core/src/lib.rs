//! Collective spin squeezing in two-dimensional XXZ lattices.

pub mod analysis;
pub mod collective;
pub mod dtwa;
pub mod ed;
pub mod error;
pub mod io;
pub mod lattice;
pub mod par;
pub mod rotor;
pub mod rsw;

pub use error::{Error, Result};
pub use par::Exec;
