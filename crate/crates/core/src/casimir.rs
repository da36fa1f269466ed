//! Zero-temperature Casimir equation of state for ideal parallel plates.
//!
//! All three quantities are per unit plate area and follow from the
//! ground-state energy `eps(z) = -(pi^2/720) hbar c / z^3`:
//! the pressure `P = -d eps/dz` and the isothermal compressibility
//! `K = -(1/z) dz/dP`. The compressibility is negative at every gap.

use std::f64::consts::PI;

use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Smallest gap accepted at the API boundary [m].
pub const MIN_GAP: f64 = 1e-12;
/// Largest gap accepted at the API boundary [m].
pub const MAX_GAP: f64 = 1.0;

/// Dimensionless coefficient of the areal energy, pi^2 / 720.
pub const ENERGY_COEFFICIENT: f64 = PI * PI / 720.0;
/// Dimensionless coefficient of the pressure, pi^2 / 240.
pub const PRESSURE_COEFFICIENT: f64 = PI * PI / 240.0;

fn check_gap(z: f64) -> Result<()> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::domain("z", z, "z > 0"));
    }
    if !(MIN_GAP..=MAX_GAP).contains(&z) {
        return Err(Error::domain("z", z, "1e-12 m <= z <= 1 m"));
    }
    Ok(())
}

/// Ground-state energy per unit area [J/m^2].
pub fn casimir_energy(z: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_gap(z)?;
    Ok(-ENERGY_COEFFICIENT * consts.hbar_c() / (z * z * z))
}

/// Pressure on the plates [Pa]; negative (the vacuum pulls the plates together).
pub fn casimir_pressure(z: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_gap(z)?;
    let z2 = z * z;
    Ok(-PRESSURE_COEFFICIENT * consts.hbar_c() / (z2 * z2))
}

/// Isothermal compressibility at T -> 0 [1/Pa]; always negative.
pub fn casimir_compressibility(z: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_gap(z)?;
    let z2 = z * z;
    Ok(-(60.0 / (PI * PI)) * z2 * z2 / consts.hbar_c())
}

/// Casimir state of the gap at one plate separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CasimirState {
    /// Gap [m].
    pub z: f64,
    /// Areal energy density [J/m^2].
    pub epsilon: f64,
    /// [Pa]
    pub pressure: f64,
    /// [1/Pa]
    pub compressibility: f64,
}

impl CasimirState {
    pub fn at(z: f64, consts: &PhysicalConstants) -> Result<Self> {
        Ok(Self {
            z,
            epsilon: casimir_energy(z, consts)?,
            pressure: casimir_pressure(z, consts)?,
            compressibility: casimir_compressibility(z, consts)?,
        })
    }
}

/// Log- or linearly spaced gap grid with `n >= 2` points, endpoints included.
pub fn gap_grid(z_min: f64, z_max: f64, n: usize, log: bool) -> Result<Vec<f64>> {
    check_gap(z_min)?;
    check_gap(z_max)?;
    if z_max <= z_min {
        return Err(Error::InvalidInput(format!(
            "grid bounds must satisfy zmin < zmax (got {z_min:e}, {z_max:e})"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 points".into()));
    }
    let last = (n - 1) as f64;
    let mut grid: Vec<f64> = if log {
        let (a, b) = (z_min.ln(), z_max.ln());
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / last).exp())
            .collect()
    } else {
        (0..n)
            .map(|i| z_min + (z_max - z_min) * i as f64 / last)
            .collect()
    };
    grid[0] = z_min;
    grid[n - 1] = z_max;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{compressibility_at, derivative};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    const C: PhysicalConstants = PhysicalConstants::codata2018();

    #[test]
    fn energy_at_one_micron() {
        let e = casimir_energy(1e-6, &C).unwrap();
        assert!(rel(e, -4.3334e-10) < 1e-4, "{e:e}");
    }

    #[test]
    fn pressure_golden_values() {
        assert!(rel(casimir_pressure(1e-6, &C).unwrap(), -1.300e-3) < 1e-4);
        assert!(rel(casimir_pressure(1e-7, &C).unwrap(), -13.00) < 1e-4);
    }

    #[test]
    fn compressibility_golden_value_and_definition() {
        let k = casimir_compressibility(1e-6, &C).unwrap();
        assert!(rel(k, -192.3) < 5e-4, "{k}");
        let p = |z: f64| casimir_pressure(z, &C).unwrap();
        let k_fd = compressibility_at(p, 1e-6);
        assert!(rel(k_fd, -192.3) < 1e-3, "{k_fd}");
    }

    #[test]
    fn ratios() {
        let z = 3.7e-7;
        let e = |z| casimir_energy(z, &C).unwrap();
        let p = |z| casimir_pressure(z, &C).unwrap();
        let k = |z| casimir_compressibility(z, &C).unwrap();
        assert!(rel(e(2.0 * z) / e(z), 1.0 / 8.0) < 1e-14);
        assert!(rel(p(2.0 * z) / p(z), 1.0 / 16.0) < 1e-14);
        assert!(rel(k(2.0 * z) / k(z), 16.0) < 1e-14);
    }

    #[test]
    fn domain_errors() {
        for z in [0.0, -1e-6, f64::NAN, 1e-13, 2.0] {
            assert!(casimir_energy(z, &C).is_err(), "{z}");
            assert!(casimir_pressure(z, &C).is_err(), "{z}");
            assert!(casimir_compressibility(z, &C).is_err(), "{z}");
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = gap_grid(1e-8, 1e-4, 101, true).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 1e-8);
        assert_eq!(g[100], 1e-4);
        assert!(rel(g[50], 1e-6) < 1e-12);
        assert!(gap_grid(1e-6, 1e-7, 10, true).is_err());
        assert!(gap_grid(1e-7, 1e-6, 1, false).is_err());
    }

    proptest! {
        #[test]
        fn pressure_is_minus_energy_slope(lz in (1e-9f64).ln()..(1e-3f64).ln()) {
            let z = lz.exp();
            let e = |z: f64| casimir_energy(z, &C).unwrap();
            let fd = -derivative(e, z);
            let p = casimir_pressure(z, &C).unwrap();
            prop_assert!(rel(fd, p) < 1e-6, "z={z:e} fd={fd:e} p={p:e}");
        }

        #[test]
        fn second_law_violated_everywhere(lz in (1e-9f64).ln()..(1e-3f64).ln()) {
            let s = CasimirState::at(lz.exp(), &C).unwrap();
            prop_assert!(s.epsilon < 0.0 && s.pressure < 0.0 && s.compressibility < 0.0);
        }

        #[test]
        fn scaling_laws(lz in (1e-9f64).ln()..(1e-4f64).ln(), lambda in 0.1f64..10.0) {
            let z = lz.exp();
            let a = CasimirState::at(z, &C).unwrap();
            let b = CasimirState::at(lambda * z, &C).unwrap();
            prop_assert!(rel(b.epsilon, a.epsilon / lambda.powi(3)) < 1e-12);
            prop_assert!(rel(b.pressure, a.pressure / lambda.powi(4)) < 1e-12);
            prop_assert!(rel(b.compressibility, a.compressibility * lambda.powi(4)) < 1e-12);
        }
    }
}
