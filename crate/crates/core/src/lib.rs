//! Thermodynamic formalism on finite equivalence-relation groupoids.
//!
//! The objects here are finite point spaces partitioned into equivalence
//! classes, reference transverse functions assigning a probability to each
//! class, transfer operators built from potentials, and the transverse
//! measures they leave invariant. On top of that sit entropy and pressure
//! with their Legendre duality, finite-alphabet XY models driven by the
//! Ruelle operator, and fiber-groupoid disintegration with Markov-subshift
//! Jacobians.
//!
//! Everything is atomic and exactly summable: integrals are finite sums,
//! suprema over infinite families are either closed forms or one-sided
//! bounds certified by seeded sampling, and every residual bound in the
//! documentation is floating-point roundoff, not truncation.

pub mod dyn_def;
pub mod error;
pub mod groupoid;
pub mod io;
pub mod sample;
pub mod test_util;
pub mod thermo;
pub mod transfer;
pub mod transverse;
pub mod xy;

pub use error::{Error, Result};
pub use groupoid::{
    ClassId, FiniteGroupoid, Kernel, Measure, ModularFunction, PointId, PointSpace, Potential,
    SignedTransverseFunction, TransverseFunction,
};
pub use thermo::{Equilibrium, ExtremalCase, NormalizedFamily, PressureResult};
pub use transverse::TransverseMeasure;
