//! Time-domain motion of the driven plate.
//!
//! The gap obeys, per unit area and in CGS-Gaussian units,
//!
//! ```text
//! mu z'' = -(pi^2 / 240) hbar c / z^4 - U(t)^2 / (8 pi z^2) + H
//! ```
//!
//! where `H` is an optional constant outward holding pressure. Both physical
//! forces are attractive, so a free plate always falls in; `H` is what lets
//! [`measure_kapitza_coefficient`] find periodic orbits at chosen gaps.
//!
//! Internally time is measured in units of `1/omega` and length in units of
//! the initial gap, and the state is integrated with [`crate::ode`].
//!
//! [`SimulationConfig`] and [`Trajectory`] use SI lengths, times and
//! pressures; the drive itself is a CGS [`DriveParams`], and the
//! measurement API works in CGS throughout (cm, dyn/cm^2, erg cm^2).

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::casimir;
use crate::constants::{self, PhysicalConstants};
use crate::driven::{self, DriveParams, EffectiveModel};
use crate::error::{Error, Result};
use crate::ode::{self, Options, Status};
use crate::roots;

/// Contact floor [m]. Reaching it ends the run with [`Termination::Collapse`].
pub const DEFAULT_COLLAPSE_FLOOR: f64 = 1e-10;

/// Minimum drive-to-slow frequency ratio required at every probe gap.
pub const MIN_OMEGA_RATIO: f64 = 30.0;

/// Relative fit residual above which a measurement is rejected.
pub const MAX_FIT_RESIDUAL: f64 = 0.1;

/// Mean residual force below `NOISE_FLOOR * |static force|` counts as zero.
pub const NOISE_FLOOR: f64 = 1e-8;

const X: usize = 0;
const V: usize = 1;
const WORK: usize = 2;
const INT_X: usize = 3;
const INT_F: usize = 4;
const THROUGHPUT: usize = 5;
const DIM: usize = 6;
/// Components entering the step-size control; the throughput integrand is
/// not smooth and is left out.
const CONTROLLED: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub drive: DriveParams,
    /// Initial gap [m].
    pub z0: f64,
    /// Initial gap velocity [m/s].
    pub v0: f64,
    /// Duration [s].
    pub t_end: f64,
    /// Relative tolerance of the integrator.
    pub rel_tol: f64,
    /// Absolute tolerance on the nondimensional state (gap in units of `z0`,
    /// velocity in units of `z0 omega`).
    pub abs_tol: f64,
    pub casimir_enabled: bool,
    pub coulomb_enabled: bool,
    /// Constant outward pressure on the plate [Pa].
    pub holding_pressure: f64,
    /// Spacing of output samples [s].
    pub sample_interval: f64,
    /// [m]
    pub collapse_floor: f64,
    pub max_steps: usize,
}

impl SimulationConfig {
    /// Defaults: at rest, both forces on, no holding pressure, tolerances
    /// 1e-9 / 1e-12, 32 samples per drive period.
    pub fn new(drive: DriveParams, z0: f64, t_end: f64) -> Self {
        Self {
            drive,
            z0,
            v0: 0.0,
            t_end,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            casimir_enabled: true,
            coulomb_enabled: true,
            holding_pressure: 0.0,
            sample_interval: drive.period() / 32.0,
            collapse_floor: DEFAULT_COLLAPSE_FLOOR,
            max_steps: 50_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.drive.validate()?;
        if !(self.z0.is_finite() && self.z0 > 0.0) {
            return Err(Error::domain("z0", self.z0, "z0 > 0"));
        }
        if !self.v0.is_finite() {
            return Err(Error::domain("v0", self.v0, "finite"));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::domain("t_end", self.t_end, "t_end > 0"));
        }
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return Err(Error::domain(name, tol, "0 < tol <= 1e-2"));
            }
        }
        if !self.holding_pressure.is_finite() {
            return Err(Error::domain(
                "holding_pressure",
                self.holding_pressure,
                "finite",
            ));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return Err(Error::domain(
                "sample_interval",
                self.sample_interval,
                "> 0",
            ));
        }
        if self.t_end / self.sample_interval > 1e8 {
            return Err(Error::InvalidInput(format!(
                "t_end / sample_interval = {:e} exceeds 1e8 samples",
                self.t_end / self.sample_interval
            )));
        }
        if !(self.collapse_floor > 0.0 && self.collapse_floor < self.z0) {
            return Err(Error::domain(
                "collapse_floor",
                self.collapse_floor,
                "0 < floor < z0",
            ));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    /// [s]
    pub t: f64,
    /// [m]
    pub z: f64,
    /// [m/s]
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    Collapse,
    StepFailure,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Sum of local error estimates of the gap [m]; a crude global bound.
    pub error_estimate: f64,
    /// [s]
    pub t_final: f64,
    /// [m]
    pub z_final: f64,
    /// [m/s]
    pub v_final: f64,
    /// Time average of the gap [m].
    pub mean_gap: f64,
    /// Time average of the Casimir plus Coulomb pressure, holding pressure
    /// excluded [Pa].
    pub mean_force: f64,
    /// Change of kinetic plus potential energy per area [J/m^2].
    pub energy_change: f64,
    /// Integral of the explicit time derivative of the potential [J/m^2].
    pub drive_work: f64,
    /// Integral of its absolute value [J/m^2].
    pub energy_throughput: f64,
}

impl Diagnostics {
    /// `|energy change - drive work|` [J/m^2].
    pub fn energy_balance_error(&self) -> f64 {
        (self.energy_change - self.drive_work).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub termination: Termination,
    pub diagnostics: Diagnostics,
    /// [s]
    pub drive_period: f64,
}

impl Trajectory {
    /// Wraps externally produced samples, e.g. for post-processing tests.
    pub fn from_samples(samples: Vec<Sample>, drive_period: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput("need at least two samples".into()));
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidInput(
                "sample times must increase strictly".into(),
            ));
        }
        if samples
            .iter()
            .any(|s| !(s.z > 0.0 && s.z.is_finite() && s.v.is_finite()))
        {
            return Err(Error::InvalidInput(
                "gaps must be positive and finite".into(),
            ));
        }
        if !(drive_period > 0.0 && drive_period.is_finite()) {
            return Err(Error::domain("drive_period", drive_period, "> 0"));
        }
        let last = samples[samples.len() - 1];
        Ok(Self {
            diagnostics: Diagnostics {
                t_final: last.t,
                z_final: last.z,
                v_final: last.v,
                ..Diagnostics::default()
            },
            samples,
            termination: Termination::Completed,
            drive_period,
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].t - self.samples[0].t
    }
}

/// Nondimensional right-hand side for a plate at reference gap `z_ref` [cm].
#[derive(Debug, Clone, Copy)]
struct System {
    u: f64,
    u_omega: f64,
    /// Casimir coefficient: `f_cas = -alpha / x^4`.
    alpha: f64,
    /// Coulomb coefficient: `f_coul = -gamma U^2 / x^2`.
    gamma: f64,
    /// Holding term.
    hold: f64,
}

impl System {
    /// `holding` in dyn/cm^2.
    fn new(
        drive: &DriveParams,
        z_ref: f64,
        holding: f64,
        casimir_on: bool,
        coulomb_on: bool,
        consts: &PhysicalConstants,
    ) -> Self {
        let force_scale = 1.0 / (drive.mu * drive.omega * drive.omega * z_ref);
        let big_a = casimir::PRESSURE_COEFFICIENT * consts.hbar_c_cgs();
        Self {
            u: drive.u,
            u_omega: drive.u_omega,
            alpha: if casimir_on {
                big_a * force_scale / z_ref.powi(4)
            } else {
                0.0
            },
            gamma: if coulomb_on {
                force_scale / (8.0 * PI * z_ref * z_ref)
            } else {
                0.0
            },
            hold: holding * force_scale,
        }
    }

    fn voltage(&self, tau: f64) -> (f64, f64) {
        let (s, c) = tau.sin_cos();
        (
            self.u + SQRT_2 * self.u_omega * c,
            -SQRT_2 * self.u_omega * s,
        )
    }

    fn static_force(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mean_sq = self.u * self.u + self.u_omega * self.u_omega;
        -self.alpha / (x2 * x2) - self.gamma * mean_sq / x2
    }

    fn potential(&self, tau: f64, x: f64) -> f64 {
        let (u, _) = self.voltage(tau);
        -self.alpha / (3.0 * x * x * x) - self.gamma * u * u / x - self.hold * x
    }

    fn rhs(&self, tau: f64, y: &[f64; DIM]) -> [f64; DIM] {
        let x = y[X];
        let (u, du) = self.voltage(tau);
        let x2 = x * x;
        let f = -self.alpha / (x2 * x2) - self.gamma * u * u / x2;
        let dpot = -2.0 * self.gamma * u * du / x;
        [y[V], f + self.hold, dpot, x, f, dpot.abs()]
    }

    fn energy(&self, tau: f64, y: &[f64; DIM]) -> f64 {
        0.5 * y[V] * y[V] + self.potential(tau, y[X])
    }
}

fn initial_state(x0: f64, v0: f64) -> [f64; DIM] {
    let mut y = [0.0; DIM];
    y[X] = x0;
    y[V] = v0;
    y
}

/// Integrates the equation of motion described by `config`.
///
/// Samples are emitted every `sample_interval` from dense output. A run that
/// reaches the collapse floor ends with a final sample at the crossing time.
pub fn simulate(config: &SimulationConfig, consts: &PhysicalConstants) -> Result<Trajectory> {
    config.validate()?;
    let d = &config.drive;
    let z_ref = constants::length_si_to_cgs(config.z0);
    let sys = System::new(
        d,
        z_ref,
        constants::pressure_si_to_cgs(config.holding_pressure),
        config.casimir_enabled,
        config.coulomb_enabled,
        consts,
    );
    let w = d.omega;
    let to_t = |tau: f64| tau / w;
    let v_scale = config.z0 * w;
    let x_floor = config.collapse_floor / config.z0;
    let tau_end = config.t_end * w;
    let dtau = config.sample_interval * w;

    let y0 = initial_state(1.0, config.v0 / v_scale);
    let mut samples = vec![Sample {
        t: 0.0,
        z: config.z0,
        v: config.v0,
    }];
    let mut next = 1usize;
    let mut collapse: Option<(f64, [f64; DIM])> = None;

    let mut opts = Options::new(config.rel_tol, config.abs_tol, CONTROLLED);
    opts.max_steps = config.max_steps;

    let out = ode::integrate(
        |t, y| sys.rhs(t, y),
        0.0,
        y0,
        tau_end,
        &opts,
        |step| {
            let crossed = step.y1[X] <= x_floor || !step.y1[X].is_finite();
            let t_stop = if crossed {
                let (mut lo, mut hi) = (step.t0, step.t1);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if step.interpolate(mid)[X] > x_floor {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            } else {
                step.t1
            };
            while (next as f64) * dtau <= t_stop && (next as f64) * dtau <= tau_end {
                let tau = next as f64 * dtau;
                let y = step.interpolate(tau);
                if y[X] > x_floor {
                    samples.push(Sample {
                        t: to_t(tau),
                        z: y[X] * config.z0,
                        v: y[V] * v_scale,
                    });
                }
                next += 1;
            }
            if crossed {
                let mut y = step.interpolate(t_stop);
                y[X] = y[X].max(x_floor);
                collapse = Some((t_stop, y));
                return false;
            }
            true
        },
    );

    let (termination, tau_f, y_f) = match (collapse, out.status) {
        (Some((t, y)), _) => (Termination::Collapse, t, y),
        (None, Status::Finished) => (Termination::Completed, out.t, out.y),
        (None, _) => (Termination::StepFailure, out.t, out.y),
    };
    let last_t = samples[samples.len() - 1].t;
    let t_f = to_t(tau_f);
    if t_f - last_t > 1e-9 * config.sample_interval && y_f[X] > 0.0 && y_f[X].is_finite() {
        samples.push(Sample {
            t: t_f,
            z: y_f[X] * config.z0,
            v: y_f[V] * v_scale,
        });
    }

    let energy_scale = constants::areal_energy_cgs_to_si(d.mu * w * w * z_ref * z_ref);
    let force_scale = constants::pressure_cgs_to_si(d.mu * w * w * z_ref);
    let diagnostics = Diagnostics {
        accepted_steps: out.accepted,
        rejected_steps: out.rejected,
        error_estimate: out.error_sum[X] * config.z0,
        t_final: t_f,
        z_final: y_f[X] * config.z0,
        v_final: y_f[V] * v_scale,
        mean_gap: if tau_f > 0.0 {
            y_f[INT_X] / tau_f * config.z0
        } else {
            config.z0
        },
        mean_force: if tau_f > 0.0 {
            y_f[INT_F] / tau_f * force_scale
        } else {
            0.0
        },
        energy_change: (sys.energy(tau_f, &y_f) - sys.energy(0.0, &y0)) * energy_scale,
        drive_work: y_f[WORK] * energy_scale,
        energy_throughput: y_f[THROUGHPUT] * energy_scale,
    };
    Ok(Trajectory {
        samples,
        termination,
        diagnostics,
        drive_period: d.period(),
    })
}

/// Centered moving average of the gap and velocity over `window` seconds.
///
/// Uses exact integration of the piecewise-linear interpolant of the
/// samples. Output samples are those of the input whose full window fits in
/// the trajectory.
pub fn slow_component(traj: &Trajectory, window: f64) -> Result<Trajectory> {
    if traj.termination != Termination::Completed {
        return Err(Error::InvalidInput(format!(
            "slow component needs a completed trajectory (got {:?})",
            traj.termination
        )));
    }
    if !(window.is_finite() && window >= 2.0 * traj.drive_period * (1.0 - 1e-12)) {
        return Err(Error::InvalidInput(format!(
            "window {window:e} s is shorter than two drive periods ({:e} s)",
            2.0 * traj.drive_period
        )));
    }
    if window > traj.duration() {
        return Err(Error::InvalidInput(format!(
            "window {window:e} s exceeds trajectory duration {:e} s",
            traj.duration()
        )));
    }
    let s = &traj.samples;
    let n = s.len();
    let mut cz = vec![0.0; n];
    let mut cv = vec![0.0; n];
    for i in 1..n {
        let dt = s[i].t - s[i - 1].t;
        cz[i] = cz[i - 1] + 0.5 * dt * (s[i].z + s[i - 1].z);
        cv[i] = cv[i - 1] + 0.5 * dt * (s[i].v + s[i - 1].v);
    }
    let cumulative = |t: f64| -> (f64, f64) {
        let k = s.partition_point(|p| p.t <= t).clamp(1, n - 1) - 1;
        let (a, b) = (&s[k], &s[k + 1]);
        let dt = t - a.t;
        let frac = dt / (b.t - a.t);
        let z_t = a.z + frac * (b.z - a.z);
        let v_t = a.v + frac * (b.v - a.v);
        (
            cz[k] + 0.5 * dt * (a.z + z_t),
            cv[k] + 0.5 * dt * (a.v + v_t),
        )
    };
    let (t0, t1) = (s[0].t, s[n - 1].t);
    let half = 0.5 * window;
    let eps = 1e-12 * t1.abs().max(window);
    let samples: Vec<Sample> = s
        .iter()
        .filter(|p| p.t - half >= t0 - eps && p.t + half <= t1 + eps)
        .map(|p| {
            let (z_hi, v_hi) = cumulative((p.t + half).min(t1));
            let (z_lo, v_lo) = cumulative((p.t - half).max(t0));
            Sample {
                t: p.t,
                z: (z_hi - z_lo) / window,
                v: (v_hi - v_lo) / window,
            }
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::InvalidInput("no sample has a full window".into()));
    }
    Ok(Trajectory {
        samples,
        termination: traj.termination,
        diagnostics: traj.diagnostics.clone(),
        drive_period: traj.drive_period,
    })
}

/// Mean gap [m] over the last `periods` drive periods of a trajectory.
pub fn tail_mean_gap(traj: &Trajectory, periods: f64) -> Result<f64> {
    let span = periods * traj.drive_period;
    if !(span > 0.0) || span > traj.duration() {
        return Err(Error::InvalidInput(format!(
            "tail of {periods} periods does not fit a {:e} s trajectory",
            traj.duration()
        )));
    }
    let t1 = traj.samples[traj.samples.len() - 1].t;
    let t0 = t1 - span;
    let mut acc = 0.0;
    for w in traj.samples.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.t <= t0 {
            continue;
        }
        if a.t >= t0 {
            acc += 0.5 * (b.t - a.t) * (a.z + b.z);
        } else {
            let za = a.z + (t0 - a.t) / (b.t - a.t) * (b.z - a.z);
            acc += 0.5 * (b.t - t0) * (za + b.z);
        }
    }
    Ok(acc / span)
}

/// Upper bound on the slow angular frequency at gap `z` [cm]:
/// `sqrt((12 a / z^5 + 2 b / z^3 + 20 K / z^6) / mu)`.
///
/// It bounds `sqrt(|ebar''(z)| / mu)` from above and decreases with `z`.
pub fn slow_frequency_bound(model: &EffectiveModel, z: f64) -> f64 {
    let (a, b, k) = (
        model.casimir_term(),
        model.coulomb_term(),
        model.kapitza_coefficient,
    );
    let z3 = z * z * z;
    ((12.0 * a / (z3 * z * z) + 2.0 * b / z3 + 20.0 * k / (z3 * z3)) / model.drive.mu).sqrt()
}

/// Settings shared by every probe of a coefficient measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub casimir_enabled: bool,
    pub coulomb_enabled: bool,
    pub max_newton: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-15,
            casimir_enabled: true,
            coulomb_enabled: true,
            max_newton: 40,
        }
    }
}

/// Five probe gaps [cm] spanning a factor 3, starting at the smallest gap
/// where `omega` is at least [`MIN_OMEGA_RATIO`] times
/// [`slow_frequency_bound`].
pub fn auto_probe_gaps(
    drive: &DriveParams,
    cfg: &MeasureConfig,
    consts: &PhysicalConstants,
) -> Result<Vec<f64>> {
    let model =
        EffectiveModel::new(*drive, consts)?.with_terms(cfg.casimir_enabled, cfg.coulomb_enabled);
    let excess = |lz: f64| {
        (drive.omega / slow_frequency_bound(&model, lz.exp())).ln() - MIN_OMEGA_RATIO.ln()
    };
    let (lo, hi) = (1e-9f64.ln(), 1e3f64.ln());
    let z_min = if excess(lo) >= 0.0 {
        lo.exp()
    } else if excess(hi) < 0.0 {
        return Err(Error::InvalidInput(format!(
            "omega = {:e} rad/s is not {MIN_OMEGA_RATIO}x the slow frequency at any gap below 10 m",
            drive.omega
        )));
    } else {
        // step just past the root so the ratio condition holds
        roots::brent(excess, lo, hi, 1e-12, 200)?.exp() * (1.0 + 1e-9)
    };
    Ok((0..5).map(|k| z_min * 3f64.powf(k as f64 / 4.0)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    /// Target mean gap [cm].
    pub z: f64,
    /// Mean gap of the periodic orbit [cm].
    pub mean_gap: f64,
    /// `omega / slow_frequency_bound(z)`.
    pub omega_ratio: f64,
    /// Holding pressure that makes the orbit periodic [dyn/cm^2].
    pub holding: f64,
    /// Time-averaged Casimir plus Coulomb pressure over one period [dyn/cm^2].
    pub mean_force: f64,
    /// Static pressure at the mean gap with `U^2` replaced by its mean.
    pub static_force: f64,
    /// `mean_force - static_force` [dyn/cm^2].
    pub residual_force: f64,
    /// `residual_force * z^5 / 4` [erg cm^2].
    pub k_local: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KapitzaMeasurement {
    /// Fitted coefficient of the `1/z^4` term [erg cm^2].
    pub k_fit: f64,
    /// Closed-form coefficient from [`driven::kapitza_coefficient`].
    pub k_eq35: f64,
    /// `k_fit / k_eq35`; `None` when `k_eq35 = 0`.
    pub ratio: Option<f64>,
    /// Free log-log slope of residual force against gap; `None` when no
    /// residual force is detectable.
    pub exponent: Option<f64>,
    /// RMS relative deviation of the residuals from `4 k_fit / z^5`.
    pub residual: f64,
    /// `max / min - 1` of the per-probe `k_local`.
    pub spread: f64,
    pub probes: Vec<ProbeResult>,
}

/// Integrates half a drive period from a turning point at `x0`.
fn half_period(sys: &System, x0: f64, cfg: &MeasureConfig) -> Result<[f64; DIM]> {
    let opts = Options::new(cfg.rel_tol, cfg.abs_tol, CONTROLLED);
    let out = ode::integrate(
        |t, y| sys.rhs(t, y),
        0.0,
        initial_state(x0, 0.0),
        PI,
        &opts,
        |s| s.y1[X] > 1e-3,
    );
    if out.status != Status::Finished {
        return Err(Error::Convergence {
            message: format!("probe orbit integration ended with {:?}", out.status),
            estimates: vec![out.t, out.y[X]],
        });
    }
    Ok(out.y)
}

/// Finds the periodic orbit with mean gap `z` [cm] under a constant holding
/// pressure and measures its mean force.
///
/// `U(t)` is even in `t`, so an orbit starting at rest at `t = 0` that is
/// again at rest at `t = T/2` is periodic. The two unknowns, starting gap
/// and holding pressure, are solved by Newton's method on
/// `(v(T/2), mean gap - z)`.
fn probe(
    drive: &DriveParams,
    z: f64,
    cfg: &MeasureConfig,
    consts: &PhysicalConstants,
) -> Result<ProbeResult> {
    let base = System::new(
        drive,
        z,
        0.0,
        cfg.casimir_enabled,
        cfg.coulomb_enabled,
        consts,
    );
    let g = base.gamma;
    let (u, uw) = (drive.u, drive.u_omega);
    // small-amplitude response to the first and second drive harmonics
    let mut x0 = 1.0 + g * (2.0 * SQRT_2 * u * uw + 0.25 * uw * uw);
    let mut hold = -base.static_force(1.0);

    let residual = |x0: f64, hold: f64| -> Result<([f64; 2], [f64; DIM])> {
        let sys = System { hold, ..base };
        let y = half_period(&sys, x0, cfg)?;
        Ok(([y[V], y[INT_X] / PI - 1.0], y))
    };

    let mut iterations = 0;
    let (mut r, mut y) = residual(x0, hold)?;
    let scale = hold.abs().max(f64::MIN_POSITIVE);
    loop {
        if r[0].abs() < 1e-14 && r[1].abs() < 1e-14 {
            break;
        }
        if iterations >= cfg.max_newton {
            return Err(Error::Convergence {
                message: format!("periodic orbit at z = {z:e} cm did not converge"),
                estimates: vec![x0, hold, r[0], r[1]],
            });
        }
        iterations += 1;
        let dx = 1e-7;
        let dh = 1e-7 * scale;
        let (rx, _) = residual(x0 + dx, hold)?;
        let (rh, _) = residual(x0, hold + dh)?;
        let j = [
            [(rx[0] - r[0]) / dx, (rh[0] - r[0]) / dh],
            [(rx[1] - r[1]) / dx, (rh[1] - r[1]) / dh],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Convergence {
                message: format!("singular shooting Jacobian at z = {z:e} cm"),
                estimates: vec![x0, hold],
            });
        }
        let sx = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let sh = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let (x_new, h_new) = (x0 - sx, hold - sh);
        let (r_new, y_new) = residual(x_new, h_new)?;
        let done = (sx.abs() < 1e-15 && (sh / scale).abs() < 1e-15)
            || (r_new[0].abs().max(r_new[1].abs()) >= r[0].abs().max(r[1].abs()) && iterations > 3);
        x0 = x_new;
        hold = h_new;
        r = r_new;
        y = y_new;
        if done {
            break;
        }
    }

    let force_unit = drive.mu * drive.omega * drive.omega * z;
    let x_mean = y[INT_X] / PI;
    let mean_force = y[INT_F] / PI * force_unit;
    let static_force = base.static_force(x_mean) * force_unit;
    let mean_gap = x_mean * z;
    let residual_force = mean_force - static_force;
    let model =
        EffectiveModel::new(*drive, consts)?.with_terms(cfg.casimir_enabled, cfg.coulomb_enabled);
    Ok(ProbeResult {
        z,
        mean_gap,
        omega_ratio: drive.omega / slow_frequency_bound(&model, z),
        holding: hold * force_unit,
        mean_force,
        static_force,
        residual_force,
        k_local: residual_force * mean_gap.powi(5) / 4.0,
        newton_iterations: iterations,
    })
}

/// Measures the coefficient of the averaged `1/z^4` repulsion by direct
/// simulation.
///
/// At each probe gap [cm] the plate is held on a periodic orbit; the mean
/// of the full time-dependent force minus the static force at the mean
/// `U^2` is the drive-induced repulsion, fitted to `4 K / z^5` in log space.
/// An empty `probe_gaps` uses [`auto_probe_gaps`].
pub fn measure_kapitza_coefficient(
    drive: &DriveParams,
    probe_gaps: &[f64],
    cfg: &MeasureConfig,
    consts: &PhysicalConstants,
) -> Result<KapitzaMeasurement> {
    drive.validate()?;
    for (name, tol) in [("rel_tol", cfg.rel_tol), ("abs_tol", cfg.abs_tol)] {
        if !(tol > 0.0 && tol <= 1e-2) {
            return Err(Error::domain(name, tol, "0 < tol <= 1e-2"));
        }
    }
    let gaps = if probe_gaps.is_empty() {
        auto_probe_gaps(drive, cfg, consts)?
    } else {
        probe_gaps.to_vec()
    };
    if gaps.len() < 2 {
        return Err(Error::InvalidInput("need at least two probe gaps".into()));
    }
    if gaps.iter().any(|z| !(z.is_finite() && *z > 0.0)) {
        return Err(Error::InvalidInput("probe gaps must be positive".into()));
    }
    let model =
        EffectiveModel::new(*drive, consts)?.with_terms(cfg.casimir_enabled, cfg.coulomb_enabled);
    for &z in &gaps {
        let ratio = drive.omega / slow_frequency_bound(&model, z);
        if ratio < MIN_OMEGA_RATIO {
            return Err(Error::InvalidInput(format!(
                "omega is only {ratio:.3}x the slow frequency at z = {z:e} cm (need {MIN_OMEGA_RATIO})"
            )));
        }
    }

    let probes = gaps
        .par_iter()
        .map(|&z| probe(drive, z, cfg, consts))
        .collect::<Result<Vec<_>>>()?;

    let k_eq35 = driven::kapitza_coefficient(drive);
    let quiet = probes
        .iter()
        .all(|p| p.residual_force.abs() <= NOISE_FLOOR * p.static_force.abs());
    if quiet {
        return Ok(KapitzaMeasurement {
            k_fit: 0.0,
            k_eq35,
            ratio: (k_eq35 > 0.0).then_some(0.0),
            exponent: None,
            residual: 0.0,
            spread: 0.0,
            probes,
        });
    }
    let data: Vec<(f64, f64)> = probes
        .iter()
        .map(|p| (p.mean_gap, p.residual_force))
        .collect();
    if data.iter().any(|&(_, r)| r <= 0.0) {
        return Err(Error::PoorFit {
            residual: f64::INFINITY,
            limit: MAX_FIT_RESIDUAL,
            data,
        });
    }

    let n = data.len() as f64;
    let lx: Vec<f64> = data.iter().map(|d| d.0.ln()).collect();
    let ly: Vec<f64> = data.iter().map(|d| d.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let exponent = (sxx > 0.0).then(|| sxy / sxx);

    let k_fit = (probes.iter().map(|p| p.k_local.ln()).sum::<f64>() / n).exp();
    let residual = (data
        .iter()
        .map(|&(z, r)| (r / (4.0 * k_fit / z.powi(5)) - 1.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if residual > MAX_FIT_RESIDUAL {
        return Err(Error::PoorFit {
            residual,
            limit: MAX_FIT_RESIDUAL,
            data,
        });
    }
    let (kmin, kmax) = probes.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
        (lo.min(p.k_local), hi.max(p.k_local))
    });
    Ok(KapitzaMeasurement {
        k_fit,
        k_eq35,
        ratio: (k_eq35 > 0.0).then(|| k_fit / k_eq35),
        exponent,
        residual,
        spread: kmax / kmin - 1.0,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: PhysicalConstants = PhysicalConstants::codata2018();

    fn golden() -> DriveParams {
        DriveParams::new(0.1, 0.05, 1e6, 1e-4).unwrap()
    }

    #[test]
    fn free_plate_at_rest_stays() {
        let mut cfg = SimulationConfig::new(golden(), 1e-6, 20.0 * golden().period());
        cfg.casimir_enabled = false;
        cfg.coulomb_enabled = false;
        let tr = simulate(&cfg, &C).unwrap();
        assert_eq!(tr.termination, Termination::Completed);
        for s in &tr.samples {
            assert!((s.z - 1e-6).abs() <= cfg.abs_tol * cfg.z0);
            assert_eq!(s.v, 0.0);
        }
        assert!(tr.samples.len() > 600);
    }

    #[test]
    fn uniform_motion() {
        let mut cfg = SimulationConfig::new(golden(), 1e-6, 1e-5);
        cfg.casimir_enabled = false;
        cfg.coulomb_enabled = false;
        cfg.v0 = 0.01;
        let tr = simulate(&cfg, &C).unwrap();
        let last = tr.samples.last().unwrap();
        assert!(((last.z - (1e-6 + 0.01 * last.t)) / last.z).abs() < 1e-10);
    }

    #[test]
    fn pure_attraction_collapses_monotonically() {
        let d = DriveParams::new(0.1, 0.0, 1e6, 1e-4).unwrap();
        let mut cfg = SimulationConfig::new(d, 1e-6, 1.0);
        cfg.casimir_enabled = false;
        let tr = simulate(&cfg, &C).unwrap();
        assert_eq!(tr.termination, Termination::Collapse);
        assert!(tr
            .samples
            .windows(2)
            .all(|w| w[1].z < w[0].z && w[1].t > w[0].t));
        let last = tr.samples.last().unwrap();
        assert!((last.z - DEFAULT_COLLAPSE_FLOOR).abs() < 1e-3 * DEFAULT_COLLAPSE_FLOOR);
        assert!(tr.samples.iter().all(|s| s.z > 0.0));
        // free-fall time from z0 under mu z'' = -b/z^2: (pi/2) sqrt(mu z0^3 / (2 b'))
        let z0 = 1e-4;
        let bp = 0.01 / (8.0 * PI);
        let t_ff = PI / 2.0 * (1e-4 * z0 * z0 * z0 / (2.0 * bp)).sqrt();
        assert!(((last.t - t_ff) / t_ff).abs() < 1e-3, "{} {}", last.t, t_ff);
    }

    #[test]
    fn golden_free_run_collapses() {
        let cfg = SimulationConfig::new(golden(), 1.486_179_77e-6, 50.0 * golden().period());
        let tr = simulate(&cfg, &C).unwrap();
        assert_eq!(tr.termination, Termination::Collapse);
    }

    fn held_config() -> SimulationConfig {
        let d = golden();
        let z = 5e-3; // cm
        let sys = System::new(&d, z, 0.0, true, true, &C);
        let hold = -sys.static_force(1.0) * d.mu * d.omega * d.omega * z;
        let mut cfg = SimulationConfig::new(d, z / 100.0, 40.0 * d.period());
        cfg.holding_pressure = constants::pressure_cgs_to_si(hold);
        cfg
    }

    #[test]
    fn work_energy_balance() {
        let mut cfg = held_config();
        cfg.rel_tol = 1e-10;
        let tr = simulate(&cfg, &C).unwrap();
        assert_eq!(tr.termination, Termination::Completed);
        let d = &tr.diagnostics;
        assert!(d.energy_throughput > 0.0);
        assert!(
            d.energy_balance_error() < 1e-4 * d.energy_throughput,
            "{d:?}"
        );
    }

    #[test]
    fn halving_tolerance_stays_within_error_estimate() {
        let cfg = held_config();
        let a = simulate(&cfg, &C).unwrap();
        let b = simulate(
            &SimulationConfig {
                rel_tol: cfg.rel_tol / 2.0,
                ..cfg
            },
            &C,
        )
        .unwrap();
        let dz = (a.diagnostics.z_final - b.diagnostics.z_final).abs();
        assert!(
            dz < a.diagnostics.error_estimate,
            "{dz:e} {:e}",
            a.diagnostics.error_estimate
        );
    }

    #[test]
    fn samples_are_uniform_and_increasing() {
        let tr = simulate(&held_config(), &C).unwrap();
        let dt = golden().period() / 32.0;
        assert_eq!(tr.samples.len(), 40 * 32 + 1);
        for (i, s) in tr.samples.iter().enumerate() {
            assert!((s.t - i as f64 * dt).abs() < 1e-9 * dt);
        }
    }

    #[test]
    fn config_validation() {
        let base = SimulationConfig::new(golden(), 1e-6, 1e-3);
        let bad = [
            SimulationConfig {
                z0: 0.0,
                ..base.clone()
            },
            SimulationConfig {
                t_end: -1.0,
                ..base.clone()
            },
            SimulationConfig {
                rel_tol: 0.1,
                ..base.clone()
            },
            SimulationConfig {
                abs_tol: 0.0,
                ..base.clone()
            },
            SimulationConfig {
                collapse_floor: 2e-6,
                ..base.clone()
            },
        ];
        for c in &bad {
            assert!(simulate(c, &C).is_err());
        }
    }

    fn sampled(f: impl Fn(f64) -> f64, period: f64, n_periods: usize, per: usize) -> Trajectory {
        let dt = period / per as f64;
        let samples = (0..=n_periods * per)
            .map(|i| {
                let t = i as f64 * dt;
                Sample { t, z: f(t), v: 0.0 }
            })
            .collect();
        Trajectory::from_samples(samples, period).unwrap()
    }

    #[test]
    fn slow_component_of_constant() {
        let tr = sampled(|_| 2.5e-6, 1e-3, 10, 16);
        let s = slow_component(&tr, 3e-3).unwrap();
        assert!(s
            .samples
            .iter()
            .all(|p| (p.z - 2.5e-6).abs() < 1e-12 * 2.5e-6));
        assert_eq!(s.samples.len(), 10 * 16 + 1 - 3 * 16);
    }

    #[test]
    fn slow_component_removes_carrier() {
        let p = 1e-3;
        let tr = sampled(|t| 1.0 + 0.5 * (2.0 * PI * t / p).sin(), p, 20, 32);
        let s = slow_component(&tr, 4.0 * p).unwrap();
        let worst = s
            .samples
            .iter()
            .map(|q| (q.z - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3 * 0.5, "{worst:e}");
    }

    #[test]
    fn slow_component_errors() {
        let tr = sampled(|_| 1.0, 1e-3, 5, 8);
        assert!(slow_component(&tr, 1e-3).is_err());
        assert!(slow_component(&tr, 6e-3).is_err());
        let mut collapsed = tr.clone();
        collapsed.termination = Termination::Collapse;
        assert!(slow_component(&collapsed, 2e-3).is_err());
    }

    #[test]
    fn tail_mean() {
        let tr = sampled(|t| 3.0 + (2.0 * PI * t / 1e-3).cos(), 1e-3, 10, 64);
        assert!((tail_mean_gap(&tr, 5.0).unwrap() - 3.0).abs() < 1e-12);
        assert!(tail_mean_gap(&tr, 11.0).is_err());
    }

    #[test]
    fn auto_probes_meet_ratio() {
        let cfg = MeasureConfig::default();
        let gaps = auto_probe_gaps(&golden(), &cfg, &C).unwrap();
        let model = EffectiveModel::new(golden(), &C).unwrap();
        assert_eq!(gaps.len(), 5);
        assert!((gaps[4] / gaps[0] - 3.0).abs() < 1e-12);
        let r0 = golden().omega / slow_frequency_bound(&model, gaps[0]);
        assert!(r0 >= MIN_OMEGA_RATIO && r0 < MIN_OMEGA_RATIO * 1.001);
    }

    #[test]
    fn rejects_slow_drive() {
        let cfg = MeasureConfig::default();
        let z = driven::find_equilibrium(
            &EffectiveModel::new(golden(), &C).unwrap(),
            1e-7,
            1e-1,
            1e-10,
        )
        .unwrap()
        .z
        .unwrap();
        let err = measure_kapitza_coefficient(&golden(), &[z, 2.0 * z], &cfg, &C).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn no_ac_drive_gives_zero() {
        let d = DriveParams::new(0.1, 0.0, 1e6, 1e-4).unwrap();
        let cfg = MeasureConfig::default();
        let m = measure_kapitza_coefficient(&d, &[], &cfg, &C).unwrap();
        assert_eq!(m.k_fit, 0.0);
        assert_eq!(m.k_eq35, 0.0);
        assert!(m.ratio.is_none());
    }

    #[test]
    fn golden_measurement() {
        let m = measure_kapitza_coefficient(&golden(), &[], &MeasureConfig::default(), &C).unwrap();
        let e = m.exponent.unwrap();
        assert!((e + 5.0).abs() < 0.1, "{m:?}");
        let r = m.ratio.unwrap();
        assert!((0.4..=2.5).contains(&r), "{m:?}");
        assert!(m.spread < 0.1, "{m:?}");
    }
}
