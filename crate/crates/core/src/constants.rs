//! Physical constants (CODATA 2018) and the handful of SI <-> CGS-Gaussian
//! conversions this crate needs.
//!
//! Electromagnetic formulas for the driven capacitor are written in
//! Gaussian units; everything user-facing is SI. The conversion factors
//! below are exact by definition of the two unit systems.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Newtonian constant of gravitation [m^3 kg^-1 s^-2].
pub const GRAVITATIONAL: f64 = 6.674_30e-11;

/// Number of volts in one statvolt (c / 10^6 with c in m/s).
pub const VOLTS_PER_STATVOLT: f64 = 299.792_458;

/// Environment variable naming a TOML file that overrides the built-in constants.
pub const CONSTANTS_ENV: &str = "CASIMIR_CONSTANTS";

/// Fundamental constants used by every formula in the crate, in SI units.
///
/// Immutable once built; `hbar_c` is cached as the product `hbar * c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    hbar: f64,
    c: f64,
    k_b: f64,
    g: f64,
    hbar_c: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::codata2018()
    }
}

impl PhysicalConstants {
    pub const fn codata2018() -> Self {
        Self {
            hbar: HBAR,
            c: SPEED_OF_LIGHT,
            k_b: BOLTZMANN,
            g: GRAVITATIONAL,
            hbar_c: HBAR * SPEED_OF_LIGHT,
        }
    }

    /// Builds a custom constant set. `hbar`, `c` and `k_b` must be finite and
    /// strictly positive; `g` may be zero (gravity switched off).
    pub fn new(hbar: f64, c: f64, k_b: f64, g: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("c", c), ("k_B", k_b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(name, v, "finite and > 0"));
            }
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::domain("G", g, "finite and >= 0"));
        }
        Ok(Self {
            hbar,
            c,
            k_b,
            g,
            hbar_c: hbar * c,
        })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn k_b(&self) -> f64 {
        self.k_b
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// hbar * c [J m].
    pub fn hbar_c(&self) -> f64 {
        self.hbar_c
    }

    /// hbar * c in erg cm.
    pub fn hbar_c_cgs(&self) -> f64 {
        // 1 J = 1e7 erg, 1 m = 1e2 cm
        self.hbar_c * 1e9
    }

    /// Planck length sqrt(hbar G / c^3) [m].
    pub fn planck_length(&self) -> f64 {
        (self.hbar * self.g / (self.c * self.c * self.c)).sqrt()
    }

    /// Parses a TOML document of SI overrides. Recognised keys are `hbar`,
    /// `c`, `k_b` and `g`; any key left out keeps its CODATA value.
    pub fn from_toml_str(doc: &str) -> Result<Self> {
        let o: Overrides =
            toml::from_str(doc).map_err(|e| Error::InvalidInput(format!("constants file: {e}")))?;
        let d = Self::codata2018();
        Self::new(
            o.hbar.unwrap_or(d.hbar),
            o.c.unwrap_or(d.c),
            o.k_b.unwrap_or(d.k_b),
            o.g.unwrap_or(d.g),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let doc = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&doc)
    }

    /// Loads overrides from the file named by `CASIMIR_CONSTANTS`, or the
    /// CODATA defaults if the variable is unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONSTANTS_ENV) {
            Some(p) if !p.is_empty() => Self::from_file(p),
            _ => Ok(Self::codata2018()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Overrides {
    hbar: Option<f64>,
    c: Option<f64>,
    k_b: Option<f64>,
    g: Option<f64>,
}

/// sqrt(hbar G / c^3) [m].
pub fn planck_length(consts: &PhysicalConstants) -> f64 {
    consts.planck_length()
}

pub fn volt_to_statvolt(v: f64) -> f64 {
    v / VOLTS_PER_STATVOLT
}

pub fn statvolt_to_volt(s: f64) -> f64 {
    s * VOLTS_PER_STATVOLT
}

/// dyn/cm^2 -> Pa.
pub fn pressure_cgs_to_si(p: f64) -> f64 {
    p / 10.0
}

/// Pa -> dyn/cm^2.
pub fn pressure_si_to_cgs(p: f64) -> f64 {
    p * 10.0
}

pub fn length_si_to_cgs(m: f64) -> f64 {
    m * 100.0
}

pub fn length_cgs_to_si(cm: f64) -> f64 {
    cm / 100.0
}

/// J/m^2 -> erg/cm^2.
pub fn areal_energy_si_to_cgs(e: f64) -> f64 {
    e * 1e3
}

/// erg/cm^2 -> J/m^2.
pub fn areal_energy_cgs_to_si(e: f64) -> f64 {
    e / 1e3
}

/// kg/m^2 -> g/cm^2.
pub fn areal_mass_si_to_cgs(mu: f64) -> f64 {
    mu / 10.0
}

/// g/cm^2 -> kg/m^2.
pub fn areal_mass_cgs_to_si(mu: f64) -> f64 {
    mu * 10.0
}

/// Physical dimension tag carried by a [`Quantity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Length,
    Pressure,
    ArealEnergy,
    VoltageGaussian,
    VoltageSi,
    ArealMass,
    AngularFrequency,
    Temperature,
    Mass,
    Entropy,
    HeatCapacity,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Length => "length",
            Dimension::Pressure => "pressure",
            Dimension::ArealEnergy => "areal-energy",
            Dimension::VoltageGaussian => "voltage-gaussian",
            Dimension::VoltageSi => "voltage-si",
            Dimension::ArealMass => "areal-mass",
            Dimension::AngularFrequency => "angular-frequency",
            Dimension::Temperature => "temperature",
            Dimension::Mass => "mass",
            Dimension::Entropy => "entropy",
            Dimension::HeatCapacity => "heat-capacity",
        };
        f.write_str(s)
    }
}

/// A scalar tagged with its dimension. Values are SI except for
/// `VoltageGaussian`, which is in statvolt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub dimension: Dimension,
}

impl Quantity {
    pub const fn new(value: f64, dimension: Dimension) -> Self {
        Self { value, dimension }
    }

    fn same_dimension(&self, other: &Quantity) -> Result<()> {
        if self.dimension == other.dimension {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.dimension,
                right: other.dimension,
            })
        }
    }

    pub fn checked_add(self, other: Quantity) -> Result<Quantity> {
        self.same_dimension(&other)?;
        Ok(Quantity::new(self.value + other.value, self.dimension))
    }

    pub fn checked_sub(self, other: Quantity) -> Result<Quantity> {
        self.same_dimension(&other)?;
        Ok(Quantity::new(self.value - other.value, self.dimension))
    }

    /// Ratio of two like quantities (dimensionless).
    pub fn ratio(self, other: Quantity) -> Result<f64> {
        self.same_dimension(&other)?;
        Ok(self.value / other.value)
    }

    pub fn scale(self, k: f64) -> Quantity {
        Quantity::new(self.value * k, self.dimension)
    }

    /// Converts between the SI and Gaussian voltage tags. Every other
    /// dimension has a single representation, so only the identity
    /// conversion is accepted for it.
    pub fn convert(self, target: Dimension) -> Result<Quantity> {
        use Dimension::*;
        let value = match (self.dimension, target) {
            (a, b) if a == b => self.value,
            (VoltageSi, VoltageGaussian) => volt_to_statvolt(self.value),
            (VoltageGaussian, VoltageSi) => statvolt_to_volt(self.value),
            (a, b) => return Err(Error::DimensionMismatch { left: a, right: b }),
        };
        Ok(Quantity::new(value, target))
    }
}
