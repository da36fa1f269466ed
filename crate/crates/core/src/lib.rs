//! Thermodynamic-instability calculations for one-loop vacuum energies.
//!
//! * [`blackhole`]: entropy, Hawking temperature and the negative heat capacity.
//! * [`casimir`]: zero-temperature Casimir equation of state between ideal plates.
//! * [`modesum`]: regularized mode sums that recover the Casimir coefficient.
//! * [`stability`]: isothermal compressibility and second-law classification.
//! * [`driven`]: a Casimir/Coulomb capacitor with an AC+DC drive and its
//!   high-frequency averaged energy.
//! * [`dynamics`]: time-domain simulation of the driven plate.
//!
//! Everything is SI at the public boundary except the [`driven`] and
//! [`dynamics`] internals, which use CGS-Gaussian units.

pub mod blackhole;
pub mod casimir;
pub mod constants;
pub mod driven;
pub mod dynamics;
pub mod error;
pub mod modesum;
pub mod ode;
pub mod roots;
pub mod stability;

pub use constants::{Dimension, PhysicalConstants, Quantity};
pub use error::{Error, ErrorKind, Result};
