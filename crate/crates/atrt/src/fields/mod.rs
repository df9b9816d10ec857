//! Field representations on M, SM and ∂SM.

pub mod boundary;
pub mod disc;
pub mod fiber;
pub mod quadrature;

pub use boundary::{BoundaryField, BoundaryGrid};
pub use disc::{DiscField, DiscSampler, PolarGrid};
pub use fiber::{FiberField, SmSamples};
pub use num_complex::Complex64 as C64;

/// Which harmonic degrees an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    All,
    Even,
    Odd,
}

impl Parity {
    #[inline]
    pub fn keeps(self, k: i64) -> bool {
        match self {
            Parity::All => true,
            Parity::Even => k.rem_euclid(2) == 0,
            Parity::Odd => k.rem_euclid(2) == 1,
        }
    }
}
