//! Casimir plates biased by an AC+DC voltage source.
//!
//! Everything here is CGS-Gaussian: lengths in cm, voltages in statvolt,
//! areal energies in erg/cm^2, areal mass in g/cm^2. With capacitance
//! `A / (4 pi z)` the total free energy per area at fixed voltage is
//! `f_tot = eps(z) - U^2 / (8 pi z)`.
//!
//! For `U = u + sqrt(2) u_w cos(w t)` the drive-averaged energy per area is
//!
//! ```text
//! ebar(z) = -a / z^3 - (u^2 + u_w^2) / (8 pi z) + K / z^4
//! K       = (u_w^4 + 8 u^2 u_w^2) / (512 pi^2 mu w^2)
//! ```
//!
//! with `a = pi^2 hbar c / 720`. The repulsive `K / z^4` core can create a
//! minimum with positive curvature, which is what [`find_equilibrium`] looks for.
//! Note that the `K` prefactor depends on conventions; the [`crate::dynamics`]
//! module measures it by direct simulation.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::casimir;
use crate::constants::{self, PhysicalConstants};
use crate::error::{Error, Result};
use crate::roots;

/// Default search bracket, 1 nm .. 1 mm, in cm.
pub const DEFAULT_BRACKET: (f64, f64) = (1e-7, 1e-1);

/// Number of log-spaced points scanned for a sign change of `ebar'`.
pub const SCAN_POINTS: usize = 512;

/// Areal Casimir constant `a = pi^2 hbar c / 720` in erg cm.
pub fn casimir_constant_cgs(consts: &PhysicalConstants) -> f64 {
    casimir::ENERGY_COEFFICIENT * consts.hbar_c_cgs()
}

fn check_gap(z: f64) -> Result<()> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::domain("z", z, "z > 0"));
    }
    if z.is_infinite() {
        return Err(Error::domain("z", z, "finite"));
    }
    Ok(())
}

/// Drive parameters in CGS-Gaussian units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveParams {
    /// DC voltage [statvolt].
    pub u: f64,
    /// RMS amplitude of the AC component [statvolt].
    pub u_omega: f64,
    /// Angular frequency [rad/s].
    pub omega: f64,
    /// Areal mass of the moving plate [g/cm^2].
    pub mu: f64,
}

impl DriveParams {
    pub fn new(u: f64, u_omega: f64, omega: f64, mu: f64) -> Result<Self> {
        let d = Self {
            u,
            u_omega,
            omega,
            mu,
        };
        d.validate()?;
        Ok(d)
    }

    /// From SI inputs: volts, rad/s and kg/m^2.
    pub fn from_si(u_volts: f64, u_ac_volts: f64, omega: f64, mu_kg_m2: f64) -> Result<Self> {
        Self::new(
            constants::volt_to_statvolt(u_volts),
            constants::volt_to_statvolt(u_ac_volts),
            omega,
            constants::areal_mass_si_to_cgs(mu_kg_m2),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::domain("mu", self.mu, "mu > 0"));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::domain("omega", self.omega, "omega > 0"));
        }
        if !(self.u.is_finite() && self.u >= 0.0) {
            return Err(Error::domain("u", self.u, "u >= 0"));
        }
        if !(self.u_omega.is_finite() && self.u_omega >= 0.0) {
            return Err(Error::domain("u_omega", self.u_omega, "u_omega >= 0"));
        }
        Ok(())
    }

    /// Mean of `U^2` over a drive period, `u^2 + u_omega^2`.
    pub fn mean_square_voltage(&self) -> f64 {
        self.u * self.u + self.u_omega * self.u_omega
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }
}

/// `U(t) = u + sqrt(2) u_omega cos(omega t)` [statvolt].
pub fn voltage_at(t: f64, drive: &DriveParams) -> f64 {
    drive.u + SQRT_2 * drive.u_omega * (drive.omega * t).cos()
}

/// `dU/dt` [statvolt/s].
pub fn voltage_rate_at(t: f64, drive: &DriveParams) -> f64 {
    -SQRT_2 * drive.u_omega * drive.omega * (drive.omega * t).sin()
}

/// `K = (u_w^4 + 8 u^2 u_w^2) / (512 pi^2 mu w^2)` [erg cm^2 = erg cm^4 / cm^2].
pub fn kapitza_coefficient(drive: &DriveParams) -> f64 {
    let uw2 = drive.u_omega * drive.u_omega;
    let u2 = drive.u * drive.u;
    (uw2 * uw2 + 8.0 * u2 * uw2) / (512.0 * PI * PI * drive.mu * drive.omega * drive.omega)
}

/// Zero-temperature Casimir energy per area in erg/cm^2 at gap `z` [cm].
pub fn casimir_energy_cgs(z: f64, consts: &PhysicalConstants) -> Result<f64> {
    let e = casimir::casimir_energy(constants::length_cgs_to_si(z), consts)?;
    Ok(constants::areal_energy_si_to_cgs(e))
}

/// Total free energy per area `f(z) - U^2/(8 pi z)` [erg/cm^2].
///
/// Only the zero-temperature limit of the Casimir free energy is modelled,
/// so any `temperature != 0` is rejected.
pub fn total_free_energy(
    z: f64,
    temperature: f64,
    voltage: f64,
    include_casimir: bool,
    consts: &PhysicalConstants,
) -> Result<f64> {
    if temperature != 0.0 {
        return Err(Error::Unsupported(format!(
            "free energy at T = {temperature} K; only T = 0 is available"
        )));
    }
    check_gap(z)?;
    let casimir = if include_casimir {
        casimir_energy_cgs(z, consts)?
    } else {
        0.0
    };
    Ok(casimir - voltage * voltage / (8.0 * PI * z))
}

/// Charge per area `sigma = -d f_tot / dU = U / (4 pi z)` [statC/cm^2].
pub fn surface_charge(z: f64, voltage: f64) -> Result<f64> {
    check_gap(z)?;
    Ok(voltage / (4.0 * PI * z))
}

/// Drive-averaged energy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveModel {
    pub drive: DriveParams,
    pub casimir_enabled: bool,
    pub coulomb_enabled: bool,
    /// Coefficient of the `1/z^4` term [erg cm^2].
    pub kapitza_coefficient: f64,
    /// Areal Casimir constant [erg cm].
    pub casimir_constant: f64,
}

impl EffectiveModel {
    /// Full model (both static terms on) with `K` from the drive.
    pub fn new(drive: DriveParams, consts: &PhysicalConstants) -> Result<Self> {
        drive.validate()?;
        Ok(Self {
            drive,
            casimir_enabled: true,
            coulomb_enabled: true,
            kapitza_coefficient: kapitza_coefficient(&drive),
            casimir_constant: casimir_constant_cgs(consts),
        })
    }

    pub fn with_terms(mut self, casimir: bool, coulomb: bool) -> Self {
        self.casimir_enabled = casimir;
        self.coulomb_enabled = coulomb;
        self
    }

    /// Replaces the drive-derived `K`, e.g. with a measured value.
    pub fn with_kapitza_coefficient(mut self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::domain("K", k, "K >= 0"));
        }
        self.kapitza_coefficient = k;
        Ok(self)
    }

    /// `a` if the Casimir term is on, else 0.
    pub fn casimir_term(&self) -> f64 {
        if self.casimir_enabled {
            self.casimir_constant
        } else {
            0.0
        }
    }

    /// `(u^2 + u_w^2) / (8 pi)` if the Coulomb term is on, else 0.
    pub fn coulomb_term(&self) -> f64 {
        if self.coulomb_enabled {
            self.drive.mean_square_voltage() / (8.0 * PI)
        } else {
            0.0
        }
    }

    pub fn energy(&self, z: f64) -> Result<f64> {
        check_gap(z)?;
        let (a, b, k) = (
            self.casimir_term(),
            self.coulomb_term(),
            self.kapitza_coefficient,
        );
        let z3 = z * z * z;
        Ok(-a / z3 - b / z + k / (z3 * z))
    }

    /// `d ebar / dz`.
    pub fn slope(&self, z: f64) -> Result<f64> {
        check_gap(z)?;
        Ok(self.scaled_slope(z) / z.powi(5))
    }

    /// `z^5 d ebar/dz = 3 a z + b z^3 - 4 K`; same sign as the slope and
    /// free of overflow across the whole bracket.
    pub fn scaled_slope(&self, z: f64) -> f64 {
        let (a, b, k) = (
            self.casimir_term(),
            self.coulomb_term(),
            self.kapitza_coefficient,
        );
        3.0 * a * z + b * z * z * z - 4.0 * k
    }

    /// `d^2 ebar / dz^2`.
    pub fn curvature(&self, z: f64) -> Result<f64> {
        check_gap(z)?;
        let (a, b, k) = (
            self.casimir_term(),
            self.coulomb_term(),
            self.kapitza_coefficient,
        );
        let z2 = z * z;
        Ok((-12.0 * a * z - 2.0 * b * z2 * z + 20.0 * k) / (z2 * z2 * z2))
    }
}

/// `ebar(z)` for the given model [erg/cm^2].
pub fn effective_energy(z: f64, model: &EffectiveModel) -> Result<f64> {
    model.energy(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    StableMinimum,
    NoneFound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    /// Equilibrium gap [cm]; `None` when no minimum was found.
    pub z: Option<f64>,
    /// `ebar(Z)` [erg/cm^2].
    pub ebar: Option<f64>,
    /// `ebar''(Z)` [erg/cm^4].
    pub curvature: Option<f64>,
    pub classification: Classification,
    pub warnings: Vec<String>,
}

impl Equilibrium {
    fn none(warning: Option<String>) -> Self {
        Self {
            z: None,
            ebar: None,
            curvature: None,
            classification: Classification::NoneFound,
            warnings: warning.into_iter().collect(),
        }
    }

    pub fn is_stable(&self) -> bool {
        self.classification == Classification::StableMinimum
    }

    /// Gap in metres.
    pub fn z_si(&self) -> Option<f64> {
        self.z.map(constants::length_cgs_to_si)
    }

    /// `ebar(Z)` in J/m^2.
    pub fn ebar_si(&self) -> Option<f64> {
        self.ebar.map(constants::areal_energy_cgs_to_si)
    }

    /// `ebar''(Z)` in J/m^4 (1 erg/cm^4 = 10 J/m^4).
    pub fn curvature_si(&self) -> Option<f64> {
        self.curvature.map(|c| c * 10.0)
    }

    /// Small-oscillation angular frequency `sqrt(ebar''(Z) / mu)` [rad/s].
    pub fn slow_frequency(&self, mu: f64) -> Option<f64> {
        self.curvature.filter(|c| *c > 0.0).map(|c| (c / mu).sqrt())
    }
}

/// Locates the minimum of `ebar` on `[z_lo, z_hi]` (cm).
///
/// A log-spaced scan finds where `ebar'` turns from negative to positive;
/// Brent's method then refines the root of `ebar'` to relative tolerance
/// `tol` in `z`.
pub fn find_equilibrium(
    model: &EffectiveModel,
    z_lo: f64,
    z_hi: f64,
    tol: f64,
) -> Result<Equilibrium> {
    if !(z_lo.is_finite() && z_hi.is_finite() && z_lo > 0.0 && z_lo < z_hi) {
        return Err(Error::InvalidInput(format!(
            "bracket must satisfy 0 < z_lo < z_hi (got [{z_lo:e}, {z_hi:e}])"
        )));
    }
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::domain("tol", tol, "0 < tol <= 1e-2"));
    }
    if model.kapitza_coefficient == 0.0 {
        // attractive-only: ebar' > 0 everywhere, infimum at z -> 0
        return Ok(Equilibrium::none(None));
    }

    let (l0, l1) = (z_lo.ln(), z_hi.ln());
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            if i == 0 {
                z_lo
            } else if i == SCAN_POINTS - 1 {
                z_hi
            } else {
                (l0 + (l1 - l0) * i as f64 / (SCAN_POINTS - 1) as f64).exp()
            }
        })
        .collect();
    let slopes: Vec<f64> = grid.iter().map(|&z| model.scaled_slope(z)).collect();

    let brackets: Vec<usize> = (0..SCAN_POINTS - 1)
        .filter(|&i| slopes[i] < 0.0 && slopes[i + 1] >= 0.0)
        .collect();
    let Some(&first) = brackets.first() else {
        return Ok(Equilibrium::none(None));
    };
    let mut warnings = Vec::new();
    if brackets.len() > 1 {
        warnings.push(format!(
            "{} minima bracketed; refined the leftmost",
            brackets.len()
        ));
    }

    let z = if slopes[first + 1] == 0.0 {
        grid[first + 1]
    } else {
        roots::brent(
            |z| model.scaled_slope(z),
            grid[first],
            grid[first + 1],
            tol,
            200,
        )?
    };
    let curvature = model.curvature(z)?;
    let ebar = model.energy(z)?;
    if curvature <= 0.0 {
        warnings.push(format!("non-positive curvature {curvature:e} at z = {z:e}"));
        let mut e = Equilibrium::none(None);
        e.warnings = warnings;
        return Ok(e);
    }
    Ok(Equilibrium {
        z: Some(z),
        ebar: Some(ebar),
        curvature: Some(curvature),
        classification: Classification::StableMinimum,
        warnings,
    })
}

/// Axes of a drive-parameter sweep (CGS units).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub u: Vec<f64>,
    pub u_omega: Vec<f64>,
    pub omega: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub u: f64,
    pub u_omega: f64,
    pub omega: f64,
    /// Error message if this cell failed; the sweep itself never aborts.
    pub result: std::result::Result<Equilibrium, String>,
}

impl SweepCell {
    pub fn status(&self) -> &'static str {
        match &self.result {
            Ok(e) if e.is_stable() => "stable-minimum",
            Ok(_) => "none-found",
            Err(_) => "error",
        }
    }
}

/// Runs [`find_equilibrium`] for every `(u, u_omega, omega)` cell.
///
/// Cells are evaluated in parallel; output order is always `u` outermost,
/// then `u_omega`, then `omega`.
pub fn stability_map(
    grid: &SweepGrid,
    mu: f64,
    bracket: (f64, f64),
    tol: f64,
    consts: &PhysicalConstants,
    casimir: bool,
    coulomb: bool,
) -> Vec<SweepCell> {
    let mut cells = Vec::with_capacity(grid.u.len() * grid.u_omega.len() * grid.omega.len());
    for &u in &grid.u {
        for &u_omega in &grid.u_omega {
            for &omega in &grid.omega {
                cells.push((u, u_omega, omega));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(u, u_omega, omega)| {
            let result = DriveParams::new(u, u_omega, omega, mu)
                .and_then(|d| EffectiveModel::new(d, consts))
                .map(|m| m.with_terms(casimir, coulomb))
                .and_then(|m| find_equilibrium(&m, bracket.0, bracket.1, tol))
                .map_err(|e| e.to_string());
            SweepCell {
                u,
                u_omega,
                omega,
                result,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{derivative, second_derivative};
    use proptest::prelude::*;

    const C: PhysicalConstants = PhysicalConstants::codata2018();

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn golden_drive() -> DriveParams {
        DriveParams::new(0.1, 0.05, 1e6, 1e-4).unwrap()
    }

    /// Coulomb-only model whose drive yields the requested `b` and `K`.
    fn coulomb_only(b: f64, k: f64) -> EffectiveModel {
        let u_omega = (8.0 * PI * b).sqrt();
        let mu = u_omega.powi(4) / (512.0 * PI * PI * k);
        let d = DriveParams::new(0.0, u_omega, 1.0, mu).unwrap();
        EffectiveModel::new(d, &C).unwrap().with_terms(false, true)
    }

    #[test]
    fn zero_voltage_is_casimir() {
        let z = 2.5e-5;
        let f = total_free_energy(z, 0.0, 0.0, true, &C).unwrap();
        assert_eq!(f, casimir_energy_cgs(z, &C).unwrap());
    }

    #[test]
    fn coulomb_term_at_one_centimetre() {
        let f = total_free_energy(1.0, 0.0, 1.0, false, &C).unwrap();
        assert!((f + 0.039789).abs() < 1e-6);
        assert!(rel(f, -1.0 / (8.0 * PI)) < 1e-15);
    }

    #[test]
    fn coulomb_part_scales_with_voltage_squared() {
        let z = 3e-5;
        let eps = casimir_energy_cgs(z, &C).unwrap();
        let f1 = total_free_energy(z, 0.0, 0.7, true, &C).unwrap() - eps;
        let f2 = total_free_energy(z, 0.0, 1.4, true, &C).unwrap() - eps;
        assert!(rel(f2, 4.0 * f1) < 1e-12);
    }

    #[test]
    fn free_energy_errors() {
        assert!(matches!(
            total_free_energy(1e-4, 300.0, 1.0, true, &C),
            Err(Error::Unsupported(_))
        ));
        assert!(total_free_energy(0.0, 0.0, 1.0, true, &C).is_err());
        assert!(surface_charge(-1.0, 1.0).is_err());
    }

    #[test]
    fn charge_values() {
        assert!(rel(surface_charge(1.0, 1.0).unwrap(), 0.079577) < 1e-5);
        assert_eq!(surface_charge(1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn voltage_waveform() {
        let d = golden_drive();
        assert!(rel(voltage_at(0.0, &d), 0.1 + SQRT_2 * 0.05) < 1e-15);
        let n = 1000;
        let dt = d.period() / n as f64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for i in 0..n {
            let v = voltage_at(i as f64 * dt, &d);
            m1 += v / n as f64;
            m2 += v * v / n as f64;
        }
        assert!(rel(m1, d.u) < 1e-12);
        assert!(rel(m2, d.mean_square_voltage()) < 1e-12);
    }

    #[test]
    fn kapitza_coefficient_values() {
        let d = DriveParams::new(0.0, 1.0, 1.0, 1.0).unwrap();
        assert!(rel(kapitza_coefficient(&d), 1.97893e-4) < 1e-5);
        let d0 = DriveParams::new(3.0, 0.0, 2.0, 0.5).unwrap();
        assert_eq!(kapitza_coefficient(&d0), 0.0);
        let g = golden_drive();
        let g2 = DriveParams {
            omega: 2.0 * g.omega,
            ..g
        };
        assert!(rel(kapitza_coefficient(&g2), kapitza_coefficient(&g) / 4.0) < 1e-14);
    }

    #[test]
    fn drive_validation() {
        assert!(DriveParams::new(0.1, 0.1, 1.0, 0.0).is_err());
        assert!(DriveParams::new(0.1, 0.1, 0.0, 1.0).is_err());
        assert!(DriveParams::new(-0.1, 0.1, 1.0, 1.0).is_err());
        assert!(DriveParams::new(0.1, -0.1, 1.0, 1.0).is_err());
        let d = DriveParams::from_si(299.792458, 0.0, 1.0, 10.0).unwrap();
        assert_eq!(d.u, 1.0);
        assert_eq!(d.mu, 1.0);
    }

    #[test]
    fn effective_energy_examples() {
        let m = coulomb_only(1.0, 0.25);
        assert!((effective_energy(1.0, &m).unwrap() + 0.75).abs() < 1e-12);

        let g = EffectiveModel::new(golden_drive(), &C).unwrap();
        let zero_k = g.with_kapitza_coefficient(0.0).unwrap();
        let pure = g
            .with_terms(true, false)
            .with_kapitza_coefficient(0.0)
            .unwrap();
        for z in [1e-6, 1e-5, 1e-3] {
            assert!(zero_k.energy(z).unwrap() < pure.energy(z).unwrap());
        }
        // z^-1 tail and z^-4 core
        let far = g.energy(1e4).unwrap();
        assert!(far < 0.0 && far > -1e-6);
        assert!(g.energy(1e-9).unwrap() > 1e15);
        assert!(effective_energy(0.0, &g).is_err());
    }

    #[test]
    fn coulomb_only_unit_equilibrium() {
        let m = coulomb_only(1.0, 0.25);
        let e = find_equilibrium(&m, 1e-3, 1e3, 1e-10).unwrap();
        assert!(e.is_stable());
        let expected = (4.0 * m.kapitza_coefficient / m.coulomb_term()).cbrt();
        assert!(rel(e.z.unwrap(), expected) < 1e-9);
        assert!(rel(e.z.unwrap(), 1.0) < 1e-9);
        assert!(e.curvature.unwrap() > 0.0);
    }

    #[test]
    fn casimir_only_equilibrium() {
        let a = casimir_constant_cgs(&C);
        let target = 2e-5;
        let k = 3.0 * a * target / 4.0;
        let u_omega: f64 = 1.0;
        let mu = u_omega.powi(4) / (512.0 * PI * PI * k);
        let d = DriveParams::new(0.0, u_omega, 1.0, mu).unwrap();
        let m = EffectiveModel::new(d, &C).unwrap().with_terms(true, false);
        let e = find_equilibrium(&m, 1e-7, 1e-1, 1e-10).unwrap();
        let expected = 4.0 * m.kapitza_coefficient / (3.0 * a);
        assert!(rel(e.z.unwrap(), expected) < 1e-8);
    }

    /// Independent oracle: dense log scan of ebar plus golden-section search.
    fn golden_section_minimum(m: &EffectiveModel, lo: f64, hi: f64) -> f64 {
        let n = 100_001;
        let zs: Vec<f64> = (0..n)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect();
        let i = (1..n - 1)
            .min_by(|&i, &j| {
                m.energy(zs[i])
                    .unwrap()
                    .total_cmp(&m.energy(zs[j]).unwrap())
            })
            .unwrap();
        let (mut a, mut b) = (zs[i - 1], zs[i + 1]);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if m.energy(x1).unwrap() < m.energy(x2).unwrap() {
                b = x2;
            } else {
                a = x1;
            }
        }
        0.5 * (a + b)
    }

    /// Golden equilibrium of the full model for u = 0.1, u_w = 0.05 statvolt,
    /// w = 1e6 rad/s, mu = 1e-4 g/cm^2, from the oracle above (cm).
    const GOLDEN_Z: f64 = 1.486_179_77e-4;

    #[test]
    fn golden_full_model_equilibrium() {
        let m = EffectiveModel::new(golden_drive(), &C).unwrap();
        let oracle = golden_section_minimum(&m, 1e-7, 1e-1);
        assert!(rel(oracle, GOLDEN_Z) < 1e-7, "oracle {oracle:e}");
        let e = find_equilibrium(&m, DEFAULT_BRACKET.0, DEFAULT_BRACKET.1, 1e-10).unwrap();
        assert!(rel(e.z.unwrap(), GOLDEN_Z) < 1e-7, "{e:?}");
        let z = e.z.unwrap();
        assert!(e.ebar.unwrap() < m.energy(z * 1.01).unwrap());
        assert!(e.ebar.unwrap() < m.energy(z * 0.99).unwrap());
    }

    #[test]
    fn no_drive_no_equilibrium() {
        let d = DriveParams::new(0.3, 0.0, 1e6, 1e-4).unwrap();
        let m = EffectiveModel::new(d, &C).unwrap();
        let e = find_equilibrium(&m, 1e-7, 1e-1, 1e-8).unwrap();
        assert_eq!(e.classification, Classification::NoneFound);
        assert!(e.z.is_none());
    }

    #[test]
    fn equilibrium_outside_bracket_is_none() {
        let m = coulomb_only(1.0, 0.25);
        let e = find_equilibrium(&m, 2.0, 10.0, 1e-8).unwrap();
        assert_eq!(e.classification, Classification::NoneFound);
    }

    #[test]
    fn bracket_and_tolerance_validation() {
        let m = coulomb_only(1.0, 0.25);
        assert!(find_equilibrium(&m, 1.0, 0.5, 1e-8).is_err());
        assert!(find_equilibrium(&m, 0.0, 0.5, 1e-8).is_err());
        assert!(find_equilibrium(&m, 0.1, 10.0, 0.0).is_err());
        assert!(find_equilibrium(&m, 0.1, 10.0, 0.1).is_err());
    }

    #[test]
    fn sweep_cells() {
        let g = golden_drive();
        let grid = SweepGrid {
            u: vec![0.05, 0.1],
            u_omega: vec![0.0, 0.05],
            omega: vec![1e6, 1e7],
        };
        let cells = stability_map(&grid, g.mu, DEFAULT_BRACKET, 1e-10, &C, true, true);
        assert_eq!(cells.len(), 8);
        for c in &cells {
            if c.u_omega == 0.0 {
                assert_eq!(c.status(), "none-found");
            } else {
                assert_eq!(c.status(), "stable-minimum");
            }
        }
        // ordering: u outermost, omega innermost
        assert_eq!(
            (cells[1].u, cells[1].u_omega, cells[1].omega),
            (0.05, 0.0, 1e7)
        );
        assert_eq!(
            (cells[4].u, cells[4].u_omega, cells[4].omega),
            (0.1, 0.0, 1e6)
        );
        let again = stability_map(&grid, g.mu, DEFAULT_BRACKET, 1e-10, &C, true, true);
        assert_eq!(cells, again);

        let bad = SweepGrid {
            u: vec![-1.0],
            u_omega: vec![0.1],
            omega: vec![1.0],
        };
        let cells = stability_map(&bad, 1.0, DEFAULT_BRACKET, 1e-8, &C, true, true);
        assert_eq!(cells[0].status(), "error");
    }

    #[test]
    fn dense_sweep_reproduces_golden_cell() {
        let axis = |centre: f64| -> Vec<f64> {
            (0..10)
                .map(|i| centre * 2f64.powf((i as f64 - 4.0) / 4.0))
                .collect()
        };
        let grid = SweepGrid {
            u: axis(0.1),
            u_omega: axis(0.05),
            omega: axis(1e6),
        };
        let cells = stability_map(&grid, 1e-4, DEFAULT_BRACKET, 1e-10, &C, true, true);
        assert_eq!(cells.len(), 1000);
        let golden = cells
            .iter()
            .find(|c| c.u == 0.1 && c.u_omega == 0.05 && c.omega == 1e6)
            .unwrap();
        let z = golden.result.as_ref().unwrap().z.unwrap();
        assert!(rel(z, GOLDEN_Z) < 1e-7);
        assert!(cells.iter().all(|c| c.status() == "stable-minimum"));
    }

    #[test]
    fn coulomb_equilibrium_scales_with_omega() {
        let base = coulomb_only(1.0, 0.25);
        let z0 = find_equilibrium(&base, 1e-3, 1e3, 1e-12)
            .unwrap()
            .z
            .unwrap();
        for f in [2.0, 5.0, 10.0] {
            let mut d = base.drive;
            d.omega *= f;
            let m = EffectiveModel::new(d, &C).unwrap().with_terms(false, true);
            assert!(m.kapitza_coefficient < base.kapitza_coefficient);
            let z = find_equilibrium(&m, 1e-3, 1e3, 1e-12).unwrap().z.unwrap();
            assert!(rel(z, z0 * f.powf(-2.0 / 3.0)) < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn analytic_derivatives_match_finite_differences(
            lu in -3.0f64..0.0, luw in -3.0f64..0.0, lw in 4.0f64..8.0, lmu in -5.0f64..-2.0,
            lz in (1e-7f64).ln()..(1e-1f64).ln(),
        ) {
            let d = DriveParams::new(10f64.powf(lu), 10f64.powf(luw), 10f64.powf(lw), 10f64.powf(lmu)).unwrap();
            let m = EffectiveModel::new(d, &C).unwrap();
            let z = lz.exp();
            let e = |z: f64| m.energy(z).unwrap();
            let s = m.slope(z).unwrap();
            let c = m.curvature(z).unwrap();
            // compare against the scale of the individual terms, since the
            // sum can cancel
            let scale1 = (3.0 * m.casimir_term() / z.powi(4)).abs()
                + (m.coulomb_term() / (z * z)).abs()
                + (4.0 * m.kapitza_coefficient / z.powi(5)).abs();
            let scale2 = (12.0 * m.casimir_term() / z.powi(5)).abs()
                + (2.0 * m.coulomb_term() / z.powi(3)).abs()
                + (20.0 * m.kapitza_coefficient / z.powi(6)).abs();
            prop_assert!((derivative(e, z) - s).abs() < 1e-6 * scale1);
            prop_assert!((second_derivative(e, z) - c).abs() < 1e-6 * scale2);
            let s_fd = derivative(|z| m.slope(z).unwrap(), z);
            prop_assert!((s_fd - c).abs() < 1e-6 * scale2);
        }

        #[test]
        fn charge_is_minus_free_energy_slope(lz in -6.0f64..0.0, v in 0.01f64..10.0) {
            let z = 10f64.powf(lz);
            let fd = -derivative(|u| total_free_energy(z, 0.0, u, true, &C).unwrap(), v);
            let sigma = surface_charge(z, v).unwrap();
            prop_assert!(rel(fd, sigma) < 1e-8, "{fd:e} {sigma:e}");
        }

        #[test]
        fn stable_minima_are_local_minima(b in 0.01f64..10.0, k in 1e-6f64..1e-2) {
            let m = coulomb_only(b, k);
            let e = find_equilibrium(&m, 1e-4, 1e4, 1e-10).unwrap();
            prop_assert!(e.is_stable());
            let z = e.z.unwrap();
            prop_assert!(e.curvature.unwrap() > 0.0);
            prop_assert!(e.ebar.unwrap() < m.energy(1.01 * z).unwrap());
            prop_assert!(e.ebar.unwrap() < m.energy(0.99 * z).unwrap());
        }

        #[test]
        fn larger_k_never_moves_minimum_inward(b in 0.01f64..10.0, k in 1e-6f64..1e-2, f in 1.0f64..10.0) {
            let m1 = coulomb_only(b, k);
            let m2 = m1.with_kapitza_coefficient(k * f).unwrap();
            let z1 = find_equilibrium(&m1, 1e-4, 1e4, 1e-10).unwrap().z.unwrap();
            let z2 = find_equilibrium(&m2, 1e-4, 1e4, 1e-10).unwrap().z.unwrap();
            prop_assert!(z2 >= z1 * (1.0 - 1e-9));
        }
    }

    #[test]
    fn larger_k_full_model_spot_check() {
        let m = EffectiveModel::new(golden_drive(), &C).unwrap();
        let mut prev = 0.0;
        for f in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let mk = m
                .with_kapitza_coefficient(m.kapitza_coefficient * f)
                .unwrap();
            let z = find_equilibrium(&mk, 1e-7, 1e-1, 1e-10).unwrap().z.unwrap();
            assert!(z > prev);
            prev = z;
        }
    }
}
