//! Embedded Dormand–Prince 5(4) integrator with adaptive step control.
//!
//! Small dense systems only (the Riccati pair and moment ODE systems live in
//! dimension <= ~30), so states are plain `Vec<f64>` and the right-hand side
//! is any `Fn(t, &y, &mut dy)`.

use crate::{Error, Result};

const STAGES: usize = 7;

const C: [f64; STAGES] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// 5th-order solution weights (the FSAL row of `A`).
const B5: [f64; STAGES] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

/// Error weights `b5 - b4`.
const E: [f64; STAGES] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 2_000_000;
const SAFETY: f64 = 0.9;
const MIN_SHRINK: f64 = 0.2;
const MAX_GROWTH: f64 = 5.0;

/// Adaptive Dormand–Prince 5(4) solver with mixed absolute/relative local
/// error control.
#[derive(Debug, Clone, Copy)]
pub struct DormandPrince45 {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl DormandPrince45 {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol >= 0.0) || !abs_tol.is_finite() || !rel_tol.is_finite() {
            return Err(Error::invalid("tolerances must be positive and finite"));
        }
        Ok(DormandPrince45 { abs_tol, rel_tol })
    }

    /// Integrates `y' = rhs(t, y)` from `t0` to `t_end >= t0` and returns the
    /// terminal state.
    pub fn solve_to<F>(&self, rhs: F, t0: f64, y0: &[f64], t_end: f64) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut out = Vec::new();
        self.drive(rhs, t0, y0, &[t_end], &mut |_, y| out = y.to_vec())?;
        Ok(out)
    }

    /// Integrates and records the state at each requested output time.
    /// `times` must be nondecreasing and start at or after `t0`.
    pub fn solve_at<F>(&self, rhs: F, t0: f64, y0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut out = Vec::with_capacity(times.len());
        self.drive(rhs, t0, y0, times, &mut |_, y| out.push(y.to_vec()))?;
        Ok(out)
    }

    /// Integrates to `t_end` and records every accepted step, returning
    /// `(times, states)` with `times[0] = t0` and `times.last() = t_end`.
    pub fn solve_path<F>(
        &self,
        mut rhs: F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut times = vec![t0];
        let mut states = vec![y0.to_vec()];
        if t_end > t0 {
            self.step_loop(&mut rhs, t0, y0, t_end, &mut |t, y| {
                times.push(t);
                states.push(y.to_vec());
            })?;
        }
        Ok((times, states))
    }

    fn drive<F>(
        &self,
        mut rhs: F,
        t0: f64,
        y0: &[f64],
        times: &[f64],
        record: &mut dyn FnMut(f64, &[f64]),
    ) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut t = t0;
        let mut y = y0.to_vec();
        for &target in times {
            if target < t - 1e-14 * t.abs().max(1.0) {
                return Err(Error::invalid("output times must be nondecreasing"));
            }
            if target > t {
                let mut last = y.clone();
                self.step_loop(&mut rhs, t, &y, target, &mut |_, s| last.copy_from_slice(s))?;
                y = last;
                t = target;
            }
            record(t, &y);
        }
        Ok(())
    }

    /// Core stepping loop from `t0` to exactly `t_end`, invoking `on_accept`
    /// after every accepted step (the final call is at `t_end`).
    fn step_loop<F>(
        &self,
        rhs: &mut F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        on_accept: &mut dyn FnMut(f64, &[f64]),
    ) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let dim = y0.len();
        let span = t_end - t0;
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut h = initial_step(span);
        let mut k = vec![vec![0.0; dim]; STAGES];
        let mut y_stage = vec![0.0; dim];
        let mut y_new = vec![0.0; dim];

        for _ in 0..MAX_STEPS {
            if t >= t_end {
                return Ok(());
            }
            h = h.min(t_end - t);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::numerical(format!(
                    "step size underflow at t = {t} (h = {h}); tolerance unattainable"
                )));
            }

            for s in 0..STAGES {
                for i in 0..dim {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    y_stage[i] = y[i] + h * acc;
                }
                let (_, tail) = k.split_at_mut(s);
                rhs(t + C[s] * h, &y_stage, &mut tail[0]);
            }

            let mut err_sq = 0.0;
            for i in 0..dim {
                let mut sol = 0.0;
                let mut err = 0.0;
                for s in 0..STAGES {
                    sol += B5[s] * k[s][i];
                    err += E[s] * k[s][i];
                }
                y_new[i] = y[i] + h * sol;
                let scale = self.abs_tol + self.rel_tol * y[i].abs().max(y_new[i].abs());
                let e = h * err / scale;
                err_sq += e * e;
            }
            let err_norm = (err_sq / dim as f64).sqrt();

            if !err_norm.is_finite() {
                h *= MIN_SHRINK;
                continue;
            }
            if err_norm <= 1.0 {
                t += h;
                y.copy_from_slice(&y_new);
                on_accept(t, &y);
            }
            let factor = if err_norm == 0.0 {
                MAX_GROWTH
            } else {
                (SAFETY * err_norm.powf(-0.2)).clamp(MIN_SHRINK, MAX_GROWTH)
            };
            h *= factor;
        }
        Err(Error::numerical("step budget exhausted"))
    }
}

fn initial_step(span: f64) -> f64 {
    (span * 1e-3).min(1e-2).max(span * 1e-10)
}
