//! Schwarzschild black-hole thermodynamics.
//!
//! `S = 4 pi k_B G M^2 / (hbar c)`, temperature from `T = c^2 dM/dS`, which
//! gives `M T = hbar c^3 / (8 pi G k_B)`. The heat capacity
//! `C = c^2 dM/dT` is therefore negative.

use std::f64::consts::PI;

use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

pub const MIN_MASS: f64 = 1e-10;
pub const MAX_MASS: f64 = 1e45;

fn check_mass(m: f64) -> Result<()> {
    if m.is_nan() || m <= 0.0 {
        return Err(Error::domain("mass", m, "M > 0"));
    }
    if !(MIN_MASS..=MAX_MASS).contains(&m) {
        return Err(Error::domain("mass", m, "1e-10 kg <= M <= 1e45 kg"));
    }
    Ok(())
}

/// `M T`, constant along the equation of state [kg K].
pub fn mass_temperature_product(consts: &PhysicalConstants) -> f64 {
    let c = consts.c();
    consts.hbar() * c * c * c / (8.0 * PI * consts.g() * consts.k_b())
}

fn check_temperature(t: f64, consts: &PhysicalConstants) -> Result<()> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::domain("temperature", t, "T > 0"));
    }
    let mt = mass_temperature_product(consts);
    let (lo, hi) = (mt / MAX_MASS, mt / MIN_MASS);
    if !(lo..=hi).contains(&t) {
        return Err(Error::domain(
            "temperature",
            t,
            "temperature of a hole with 1e-10 kg <= M <= 1e45 kg",
        ));
    }
    Ok(())
}

/// Bekenstein-Hawking entropy [J/K].
pub fn entropy_from_mass(m: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_mass(m)?;
    Ok(4.0 * PI * consts.k_b() * consts.g() * m * m / consts.hbar_c())
}

/// Hawking temperature [K].
pub fn temperature_from_mass(m: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_mass(m)?;
    Ok(mass_temperature_product(consts) / m)
}

/// Mass of the hole radiating at temperature `t` [kg].
pub fn mass_from_temperature(t: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_temperature(t, consts)?;
    Ok(mass_temperature_product(consts) / t)
}

/// Heat capacity [J/K] in the Planck-length form
/// `C = -k_B (1/8pi) (hbar c / (k_B T Lambda))^2`.
pub fn heat_capacity_from_temperature(t: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_temperature(t, consts)?;
    let lambda = consts.planck_length();
    let x = consts.hbar_c() / (consts.k_b() * t * lambda);
    Ok(-consts.k_b() * x * x / (8.0 * PI))
}

/// Heat capacity [J/K] in the form `C = -hbar c^5 / (8 pi G k_B T^2)`.
pub fn heat_capacity_direct(t: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_temperature(t, consts)?;
    let c = consts.c();
    let c5 = c * c * c * c * c;
    Ok(-consts.hbar() * c5 / (8.0 * PI * consts.g() * consts.k_b() * t * t))
}

/// Full thermodynamic state of one hole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlackHoleState {
    /// [kg]
    pub mass: f64,
    /// [J/K]
    pub entropy: f64,
    /// [K]
    pub temperature: f64,
    /// [J/K]
    pub heat_capacity: f64,
    /// heat capacity in units of k_B
    pub heat_capacity_kb: f64,
}

impl BlackHoleState {
    pub fn from_mass(m: f64, consts: &PhysicalConstants) -> Result<Self> {
        let temperature = temperature_from_mass(m, consts)?;
        let heat_capacity = heat_capacity_from_temperature(temperature, consts)?;
        Ok(Self {
            mass: m,
            entropy: entropy_from_mass(m, consts)?,
            temperature,
            heat_capacity,
            heat_capacity_kb: heat_capacity / consts.k_b(),
        })
    }

    pub fn from_temperature(t: f64, consts: &PhysicalConstants) -> Result<Self> {
        let m = mass_from_temperature(t, consts)?;
        let mut s = Self::from_mass(m, consts)?;
        // keep the caller's temperature rather than the round-tripped one
        s.temperature = t;
        s.heat_capacity = heat_capacity_from_temperature(t, consts)?;
        s.heat_capacity_kb = s.heat_capacity / consts.k_b();
        Ok(s)
    }
}
