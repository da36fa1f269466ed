//! Dormand-Prince 5(4) integrator with step-size control and 4th-order
//! dense output.

/// Butcher tableau and interpolation weights (Hairer, Norsett & Wanner).
mod tableau {
    pub const C2: f64 = 1.0 / 5.0;
    pub const C3: f64 = 3.0 / 10.0;
    pub const C4: f64 = 4.0 / 5.0;
    pub const C5: f64 = 8.0 / 9.0;

    pub const A21: f64 = 1.0 / 5.0;
    pub const A31: f64 = 3.0 / 40.0;
    pub const A32: f64 = 9.0 / 40.0;
    pub const A41: f64 = 44.0 / 45.0;
    pub const A42: f64 = -56.0 / 15.0;
    pub const A43: f64 = 32.0 / 9.0;
    pub const A51: f64 = 19372.0 / 6561.0;
    pub const A52: f64 = -25360.0 / 2187.0;
    pub const A53: f64 = 64448.0 / 6561.0;
    pub const A54: f64 = -212.0 / 729.0;
    pub const A61: f64 = 9017.0 / 3168.0;
    pub const A62: f64 = -355.0 / 33.0;
    pub const A63: f64 = 46732.0 / 5247.0;
    pub const A64: f64 = 49.0 / 176.0;
    pub const A65: f64 = -5103.0 / 18656.0;
    pub const A71: f64 = 35.0 / 384.0;
    pub const A73: f64 = 500.0 / 1113.0;
    pub const A74: f64 = 125.0 / 192.0;
    pub const A75: f64 = -2187.0 / 6784.0;
    pub const A76: f64 = 11.0 / 84.0;

    pub const E1: f64 = 71.0 / 57600.0;
    pub const E3: f64 = -71.0 / 16695.0;
    pub const E4: f64 = 71.0 / 1920.0;
    pub const E5: f64 = -17253.0 / 339200.0;
    pub const E6: f64 = 22.0 / 525.0;
    pub const E7: f64 = -1.0 / 40.0;

    pub const D1: f64 = -12715105075.0 / 11282082432.0;
    pub const D3: f64 = 87487479700.0 / 32700410799.0;
    pub const D4: f64 = -10690763975.0 / 1880347072.0;
    pub const D5: f64 = 701980252875.0 / 199316789632.0;
    pub const D6: f64 = -1453857185.0 / 822651844.0;
    pub const D7: f64 = 69997945.0 / 29380423.0;
}
use tableau::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Only the first `controlled` components enter the error norm.
    pub controlled: usize,
    pub max_steps: usize,
    /// Steps shorter than `min_step_rel * max(|t|, 1)` count as underflow.
    pub min_step_rel: f64,
}

impl Options {
    pub fn new(rtol: f64, atol: f64, controlled: usize) -> Self {
        Self {
            rtol,
            atol,
            controlled,
            max_steps: 50_000_000,
            min_step_rel: 1e-14,
        }
    }
}

/// One accepted step with its interpolant.
#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    /// Local error estimate of the step (unscaled).
    pub error: [f64; N],
    r: [[f64; N]; 4],
}

impl<const N: usize> Step<N> {
    /// Dense-output value at `t` in `[t0, t1]`.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let th = (t - self.t0) / h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.y0[i]
                + th * (self.r[0][i]
                    + th1 * (self.r[1][i] + th * (self.r[2][i] + th1 * self.r[3][i])));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Finished,
    /// The step callback asked to stop.
    Stopped,
    StepUnderflow,
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct Outcome<const N: usize> {
    pub status: Status,
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    /// Sum of `|local error|` over accepted steps, per component.
    pub error_sum: [f64; N],
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        *o += h * s;
    }
    out
}

fn norm<const N: usize>(v: &[f64; N], y: &[f64; N], y_new: &[f64; N], o: &Options) -> f64 {
    let n = o.controlled.clamp(1, N);
    let mut s = 0.0;
    for i in 0..n {
        let sc = o.atol + o.rtol * y[i].abs().max(y_new[i].abs());
        s += (v[i] / sc).powi(2);
    }
    (s / n as f64).sqrt()
}

fn initial_step<const N: usize>(
    rhs: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    o: &Options,
) -> f64 {
    let d0 = norm(y0, y0, y0, o);
    let d1 = norm(f0, y0, y0, o);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = rhs(t0 + h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = norm(&diff, y0, y0, o) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end`. `on_step` sees every
/// accepted step and may return `false` to stop after it.
pub fn integrate<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Options,
    mut on_step: impl FnMut(&Step<N>) -> bool,
) -> Outcome<N> {
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(&rhs, t, &y, &k1, opts).min(t_end - t0);
    let mut accepted = 0;
    let mut rejected = 0;
    let mut error_sum = [0.0; N];
    let mut last_rejected = false;

    let finish = |status, t, y, accepted, rejected, error_sum| Outcome {
        status,
        t,
        y,
        accepted,
        rejected,
        error_sum,
    };

    while t < t_end {
        if accepted + rejected >= opts.max_steps {
            return finish(Status::MaxSteps, t, y, accepted, rejected, error_sum);
        }
        if h < opts.min_step_rel * t.abs().max(1.0) {
            return finish(Status::StepUnderflow, t, y, accepted, rejected, error_sum);
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let t_new = if last { t_end } else { t + h };
        let k7 = rhs(t_new, &y_new);

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = norm(&err, &y, &y_new, opts);
        if !e.is_finite() {
            h *= 0.2;
            rejected += 1;
            last_rejected = true;
            continue;
        }

        if e <= 1.0 {
            let mut r = [[0.0; N]; 4];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                r[0][i] = ydiff;
                r[1][i] = bspl;
                r[2][i] = ydiff - h * k7[i] - bspl;
                r[3][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                error_sum[i] += err[i].abs();
            }
            let step = Step {
                t0: t,
                t1: t_new,
                y0: y,
                y1: y_new,
                error: err,
                r,
            };
            accepted += 1;
            t = t_new;
            y = y_new;
            k1 = k7;
            if !on_step(&step) {
                return finish(Status::Stopped, t, y, accepted, rejected, error_sum);
            }
            let mut fac = 0.9 * e.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h *= fac;
        } else {
            rejected += 1;
            last_rejected = true;
            h *= (0.9 * e.powf(-0.2)).max(0.2);
        }
    }
    finish(Status::Finished, t, y, accepted, rejected, error_sum)
}
