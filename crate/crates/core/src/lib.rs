//! Classical electron-positron pair in a uniform magnetic field.
//!
//! After separating the center of mass, the relative motion is an isotropic
//! oscillator with a displaced Coulomb center. The reduced problem is
//! separable in elliptic coordinates; this crate classifies its orbits,
//! builds initial conditions and integrates the motion.

pub mod classify;
pub mod cli;
pub mod coords;
pub mod dynamics;
pub mod error;
pub mod initcond;
pub mod model;
pub mod quartic;
pub mod svg;

pub use error::{Error, Result};
