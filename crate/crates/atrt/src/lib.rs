//! Attenuated tensor tomography on the unit disc: forward simulation in fan-beam
//! coordinates, gauge reduction, and reconstruction of the gauge representative.

pub mod error;
pub mod fields;
pub mod geometry;
pub mod complex_calculus;
pub mod boundary_ops;
pub mod transport;
pub mod special_solutions;
pub mod gauge;
pub mod reconstruction;
pub mod harness;

pub use error::{AtrtError, Result};
pub use fields::C64;
