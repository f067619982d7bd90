//! Orbit recovery for multi-reference alignment under the cyclic group Z_n
//! and the dihedral group D_n.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the double-precision types used by the experiments and
//! the CLI. Exact checks in [`theory`] run over arbitrary-precision
//! integers and rationals.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod group;
pub mod invariants;
pub mod recovery;
pub mod rng;
pub mod scalar;
pub mod signal;
pub mod sim;
pub mod theory;

pub use error::{Error, Result};
pub use group::{Group, GroupElement};
pub use invariants::{InvariantMoments, PolynomialInvariants, ThirdEntry};
pub use scalar::Scalar;
pub use signal::{FourierSignal, Signal};

pub type Signal64 = Signal<f64>;
pub type Signal32 = Signal<f32>;
pub type FourierSignal64 = FourierSignal<f64>;
pub type InvariantMoments64 = InvariantMoments<f64>;
