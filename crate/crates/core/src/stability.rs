//! Second-law stability analysis of isothermal pressure-gap relations.
//!
//! For a piston of area A and height z the free energy per area obeys
//! `df = -s dT - P dz`, and the isothermal compressibility is
//! `K_T = -(1/z) (dz/dP)_T = -1 / (z dP/dz)`. Thermodynamic stability of
//! ordinary matter requires `K_T >= 0`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative step used when differentiating callables.
pub const RELATIVE_STEP: f64 = 1e-6;

/// A derivative smaller than this fraction of `max|P| / z`, the max taken
/// over the neighbouring samples, is treated as zero.
pub const ZERO_SLOPE_TOLERANCE: f64 = 1e-12;

/// Centered finite-difference derivative of `f` at `x` with step `1e-6 |x|`.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = if x == 0.0 {
        RELATIVE_STEP
    } else {
        RELATIVE_STEP * x.abs()
    };
    // use the step that is actually representable around x
    let (xp, xm) = (x + h, x - h);
    (f(xp) - f(xm)) / (xp - xm)
}

/// Centered second derivative with the same step convention as [`derivative`].
pub fn second_derivative(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    // a larger step keeps the cancellation error of the 3-point stencil in check
    let h = if x == 0.0 { 1e-4 } else { 1e-4 * x.abs() };
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// `K_T = -1 / (z dP/dz)` for a callable isotherm `P(z)`.
pub fn compressibility_at(pressure: impl Fn(f64) -> f64, z: f64) -> f64 {
    -1.0 / (z * derivative(pressure, z))
}

/// True iff the compressibility satisfies the second-law inequality `K_T >= 0`.
pub fn second_law_predicate(kt: f64) -> Result<bool> {
    if !kt.is_finite() {
        return Err(Error::InvalidInput(format!(
            "compressibility must be finite, got {kt}"
        )));
    }
    Ok(kt >= 0.0)
}

/// Sampled `(z, P)` pairs on one isotherm, with strictly increasing `z > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsothermSamples {
    points: Vec<(f64, f64)>,
    pub temperature_label: f64,
}

impl IsothermSamples {
    pub fn new(points: Vec<(f64, f64)>, temperature_label: f64) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "an isotherm needs at least 3 points, got {}",
                points.len()
            )));
        }
        for (i, &(z, p)) in points.iter().enumerate() {
            if !(z.is_finite() && z > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "point {i}: z must be finite and > 0, got {z}"
                )));
            }
            if !p.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "point {i}: pressure must be finite, got {p}"
                )));
            }
        }
        if let Some(i) = points.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput(format!(
                "z must be strictly increasing (points {i} and {})",
                i + 1
            )));
        }
        Ok(Self {
            points,
            temperature_label,
        })
    }

    /// Samples a callable isotherm on the given gaps.
    pub fn from_fn(
        zs: &[f64],
        pressure: impl Fn(f64) -> f64,
        temperature_label: f64,
    ) -> Result<Self> {
        Self::new(
            zs.iter().map(|&z| (z, pressure(z))).collect(),
            temperature_label,
        )
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointStatus {
    /// `K_T >= 0`.
    Stable,
    /// `K_T < 0`: the second-law inequality fails.
    Violation,
    /// `dP/dz` indistinguishable from zero.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityRecord {
    pub z: f64,
    pub pressure: f64,
    pub dp_dz: f64,
    /// `None` when the point is indeterminate.
    pub k_t: Option<f64>,
    pub status: PointStatus,
}

impl StabilityRecord {
    /// `Some(K_T >= 0)`, or `None` for indeterminate points.
    pub fn second_law_ok(&self) -> Option<bool> {
        match self.status {
            PointStatus::Stable => Some(true),
            PointStatus::Violation => Some(false),
            PointStatus::Indeterminate => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub records: Vec<StabilityRecord>,
    /// `(z_lo, z_hi)` of every maximal run of consecutive violating points.
    pub violation_intervals: Vec<(f64, f64)>,
}

impl StabilityReport {
    pub fn all_violating(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.status == PointStatus::Violation)
    }
}

/// Three-point derivative weights at `x[k]` for the stencil `x[0..3]`
/// (works for interior and one-sided stencils on nonuniform grids).
fn stencil_slope(x: [f64; 3], y: [f64; 3], at: usize) -> f64 {
    let xa = x[at];
    let mut d = 0.0;
    for j in 0..3 {
        // derivative of the j-th Lagrange basis polynomial at xa
        let mut denom = 1.0;
        for m in 0..3 {
            if m != j {
                denom *= x[j] - x[m];
            }
        }
        let mut num = 0.0;
        for m in 0..3 {
            if m == j {
                continue;
            }
            let mut prod = 1.0;
            for n in 0..3 {
                if n != j && n != m {
                    prod *= xa - x[n];
                }
            }
            num += prod;
        }
        d += y[j] * num / denom;
    }
    d
}

/// `dP/dz` at sample `i` from a three-point stencil: centered in the
/// interior, one-sided at the ends. When the stencil pressures share a
/// sign the slope is taken in `(ln z, ln |P|)`, which is exact for power
/// laws; otherwise in `(z, P)` directly.
fn sampled_slope(points: &[(f64, f64)], i: usize) -> f64 {
    let n = points.len();
    let (start, at) = if i == 0 {
        (0, 0)
    } else if i == n - 1 {
        (n - 3, 2)
    } else {
        (i - 1, 1)
    };
    let s = &points[start..start + 3];
    let same_sign = s.iter().all(|p| p.1 > 0.0) || s.iter().all(|p| p.1 < 0.0);
    if same_sign {
        let x = [s[0].0.ln(), s[1].0.ln(), s[2].0.ln()];
        let y = [s[0].1.abs().ln(), s[1].1.abs().ln(), s[2].1.abs().ln()];
        let dlog = stencil_slope(x, y, at);
        let (z, p) = points[i];
        p * dlog / z
    } else {
        let x = [s[0].0, s[1].0, s[2].0];
        let y = [s[0].1, s[1].1, s[2].1];
        stencil_slope(x, y, at)
    }
}

/// Pointwise compressibility and second-law classification of a sampled isotherm.
pub fn compressibility_profile(iso: &IsothermSamples) -> StabilityReport {
    let pts = iso.points();
    let records: Vec<StabilityRecord> = (0..pts.len())
        .map(|i| {
            let (z, p) = pts[i];
            let dp_dz = sampled_slope(pts, i);
            // pressure scale of the stencil around this point
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(pts.len());
            let p_max = pts[lo..hi].iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
            let indeterminate = p_max == 0.0 || dp_dz.abs() < ZERO_SLOPE_TOLERANCE * p_max / z;
            if indeterminate {
                return StabilityRecord {
                    z,
                    pressure: p,
                    dp_dz,
                    k_t: None,
                    status: PointStatus::Indeterminate,
                };
            }
            let k_t = -1.0 / (z * dp_dz);
            let status = if k_t >= 0.0 {
                PointStatus::Stable
            } else {
                PointStatus::Violation
            };
            StabilityRecord {
                z,
                pressure: p,
                dp_dz,
                k_t: Some(k_t),
                status,
            }
        })
        .collect();

    let mut violation_intervals = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    for r in &records {
        if r.status == PointStatus::Violation {
            run = Some(match run {
                Some((lo, _)) => (lo, r.z),
                None => (r.z, r.z),
            });
        } else if let Some(iv) = run.take() {
            violation_intervals.push(iv);
        }
    }
    violation_intervals.extend(run);

    StabilityReport {
        records,
        violation_intervals,
    }
}
