//! Dormand–Prince 5(4) adaptive integrator with dense output.
//!
//! Explicit embedded pair, PI step-size control, cubic Hermite interpolation
//! inside accepted steps for event location. States are fixed-size arrays.

/// Why an integration run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Reached the requested end time.
    Completed,
    /// The step size underflowed; the solution is blowing up or stalling.
    StepUnderflow,
    /// A user-supplied stop predicate fired.
    Predicate,
    /// The step budget was exhausted.
    MaxSteps,
}

/// One accepted step: `(t, y, dy)` at the step end.
///
/// `con5` is the fifth dense-output coefficient of the step that *ends*
/// here (zero for the initial state); the other four are reconstructed from
/// the step endpoints.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
    con5: [f64; N],
}

/// Result of an adaptive integration run.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    /// Accepted steps, including the initial state.
    pub steps: Vec<Step<N>>,
    pub reason: StopReason,
}

impl<const N: usize> Solution<N> {
    pub fn last(&self) -> &Step<N> {
        self.steps.last().expect("solution has at least the initial state")
    }

    /// Fourth-order dense-output interpolation of the state at time `t`,
    /// which must lie inside the covered range.
    pub fn sample(&self, t: f64) -> [f64; N] {
        let steps = &self.steps;
        let forward = steps.last().unwrap().t >= steps[0].t;
        let idx = if forward {
            match steps.binary_search_by(|s| s.t.partial_cmp(&t).unwrap()) {
                Ok(i) => return steps[i].y,
                Err(i) => i,
            }
        } else {
            match steps.binary_search_by(|s| t.partial_cmp(&s.t).unwrap()) {
                Ok(i) => return steps[i].y,
                Err(i) => i,
            }
        };
        let i1 = idx.clamp(1, steps.len() - 1);
        let (s0, s1) = (&steps[i1 - 1], &steps[i1]);
        dense_eval(s0, s1, t)
    }
}

/// Continuous extension of the 5(4) pair (Hairer's contd5 form).
fn dense_eval<const N: usize>(s0: &Step<N>, s1: &Step<N>, t: f64) -> [f64; N] {
    let h = s1.t - s0.t;
    let th = (t - s0.t) / h;
    let th1 = 1.0 - th;
    let mut out = [0.0; N];
    for k in 0..N {
        let dy = s1.y[k] - s0.y[k];
        let bspl = h * s0.dy[k] - dy;
        let c4 = dy - h * s1.dy[k] - bspl;
        out[k] = s0.y[k] + th * (dy + th1 * (bspl + th * (c4 + th1 * s1.con5[k])));
    }
    out
}

/// Integration controls.
#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; guessed from the tolerance when `None`.
    pub h0: Option<f64>,
}

impl Default for Options {
    fn default() -> Self {
        Options { rtol: 1e-10, atol: 1e-12, max_steps: 400_000, h0: None }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th-order minus embedded 4th-order weights, for the error estimate.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

/// Integrate `dy/dt = rhs(t, y)` from `(t0, y0)` to `t_end` (either
/// direction). `stop` is evaluated on every accepted step and halts the run
/// when it returns true.
pub fn integrate<const N: usize>(
    rhs: &mut dyn FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Options,
    stop: &mut dyn FnMut(f64, &[f64; N]) -> bool,
) -> Solution<N> {
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);

    let mut steps = Vec::with_capacity(256);
    steps.push(Step { t, y, dy: k1, con5: [0.0; N] });

    if span == 0.0 {
        return Solution { steps, reason: StopReason::Completed };
    }

    let mut h = opts.h0.unwrap_or_else(|| (span * 1e-3).min(0.1).max(1e-8)) * dir;
    let mut err_prev: f64 = 1.0;
    let mut n_accepted = 0usize;
    let mut n_attempts = 0usize;

    loop {
        if n_attempts >= opts.max_steps {
            return Solution { steps, reason: StopReason::MaxSteps };
        }
        n_attempts += 1;

        // Never step past the end point.
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Solution { steps, reason: StopReason::StepUnderflow };
        }

        let mut yt = [0.0; N];
        for i in 0..N {
            yt[i] = y[i] + h * A21 * k1[i];
        }
        let k2 = rhs(t + C[0] * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = rhs(t + C[1] * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = rhs(t + C[2] * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = rhs(t + C[3] * h, &yt);
        for i in 0..N {
            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = rhs(t + C[4] * h, &yt);
        let mut y_new = [0.0; N];
        for i in 0..N {
            y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let k7 = rhs(t + h, &y_new);

        // Weighted RMS error norm of the embedded difference.
        let mut err: f64 = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / N as f64).sqrt();

        if err <= 1.0 {
            let mut con5 = [0.0; N];
            for i in 0..N {
                con5[i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i]);
            }
            t += h;
            y = y_new;
            k1 = k7; // FSAL
            steps.push(Step { t, y, dy: k1, con5 });
            n_accepted += 1;
            if stop(t, &y) {
                return Solution { steps, reason: StopReason::Predicate };
            }
            if (t - t_end) * dir >= 0.0 {
                return Solution { steps, reason: StopReason::Completed };
            }
            // PI controller (Hairer–Wanner beta = 0.04).
            let fac = 0.9 * err.max(1e-10).powf(-0.2 / 1.0) * err_prev.powf(0.04);
            err_prev = err.max(1e-10);
            h *= fac.clamp(0.2, 6.0);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
        let _ = n_accepted;
    }
}
