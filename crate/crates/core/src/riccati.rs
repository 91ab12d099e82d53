//! Generalized Riccati equation of the Fourier–Laplace transform.
//!
//! The transform exponent `v_t(lambda1, lambda2)` solves
//!
//! ```text
//! dv/dt = -b v - v^alpha / alpha + (1/2) e^{-2 theta t} lambda2^2,
//! v(0)  = lambda1,
//! ```
//!
//! stays nonnegative, and determines the conditional transform
//!
//! ```text
//! E[ exp(-lambda1 Y_t + i lambda2 X_t) | (Y_0, X_0) = (y0, x0) ]
//!   = exp( -y0 v_t + i x0 e^{-theta t} lambda2 + g_t ),
//! g_t = -a int_0^t v_s ds + i m lambda2 (1 - e^{-theta t}) / theta.
//! ```
//!
//! The running integral of `v` is carried as a second ODE component so a
//! single embedded-pair error control covers both the exponent and its
//! integral.

use num_complex::Complex64;

use crate::model::{LambdaPair, ModelParams, State};
use crate::ode::DormandPrince45;
use crate::{Error, Result};

/// Default absolute tolerance of the Riccati solver.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
/// Relative tolerance paired with a user-supplied absolute tolerance.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Numerically solved `v` curve on an increasing time grid starting at 0.
#[derive(Debug, Clone)]
pub struct RiccatiCurve {
    pub lambda: LambdaPair,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub tol: f64,
    pub params: ModelParams,
}

/// Transform exponent split into its building blocks at a fixed time.
#[derive(Debug, Clone, Copy)]
pub struct TransformExponent {
    /// `v_t(lambda1, lambda2)`.
    pub v_t: f64,
    /// Phase factor `e^{-theta t} lambda2` multiplying `x0`.
    pub phase: f64,
    /// `g_t(lambda1, lambda2)`.
    pub g_t: Complex64,
    pub t: f64,
}

fn riccati_rhs(params: &ModelParams, lambda2: f64) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    let b = params.b();
    let alpha = params.alpha();
    let source = 0.5 * lambda2 * lambda2;
    move |t: f64, y: &[f64], dy: &mut [f64]| {
        // the exact flow preserves R_+; clamp the power so round-off
        // excursions below zero cannot produce NaN for alpha < 2
        let v = y[0];
        let vp = if v <= 0.0 { 0.0 } else { v.powf(alpha) };
        dy[0] = -b * v - vp / alpha + source * (-2.0 * params.theta() * t).exp();
        dy[1] = v;
    }
}

/// Local tolerances are tightened by this factor so that the accumulated
/// global error of a solve stays near the requested `tol` even over long
/// horizons.
const LOCAL_SAFETY: f64 = 0.02;

fn solver_for(tol: f64) -> Result<DormandPrince45> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::invalid("tolerance must be positive and finite"));
    }
    let local = LOCAL_SAFETY * tol;
    DormandPrince45::new(local, local)
}

/// Integrates the Riccati equation to `t_end`, returning
/// `(v(t_end), int_0^t_end v_s ds)`.
fn integrate_v(
    lambda: &LambdaPair,
    t_end: f64,
    tol: f64,
    params: &ModelParams,
) -> Result<(f64, f64)> {
    let solver = solver_for(tol)?;
    let y0 = [lambda.lambda1(), 0.0];
    if t_end == 0.0 {
        return Ok((y0[0], 0.0));
    }
    let end = solver.solve_to(riccati_rhs(params, lambda.lambda2()), 0.0, &y0, t_end)?;
    Ok((end[0].max(0.0), end[1].max(0.0)))
}

/// Solves the Riccati equation up to `t_end` with local error tolerance
/// `tol`; the returned curve is sampled at the accepted solver steps.
pub fn solve_v(
    lambda: &LambdaPair,
    t_end: f64,
    tol: f64,
    params: &ModelParams,
) -> Result<RiccatiCurve> {
    if t_end < 0.0 {
        return Err(Error::invalid("t_end must be nonnegative"));
    }
    let solver = solver_for(tol)?;
    let (times, states) = solver.solve_path(
        riccati_rhs(params, lambda.lambda2()),
        0.0,
        &[lambda.lambda1(), 0.0],
        t_end,
    )?;
    let values = states.iter().map(|s| s[0].max(0.0)).collect();
    Ok(RiccatiCurve {
        lambda: *lambda,
        times,
        values,
        tol,
        params: *params,
    })
}

/// Solves the Riccati equation and samples `v` at the given nondecreasing
/// times (which must start at or after 0).
pub fn solve_v_at(
    lambda: &LambdaPair,
    times: &[f64],
    tol: f64,
    params: &ModelParams,
) -> Result<Vec<f64>> {
    let solver = solver_for(tol)?;
    let states = solver.solve_at(
        riccati_rhs(params, lambda.lambda2()),
        0.0,
        &[lambda.lambda1(), 0.0],
        times,
    )?;
    Ok(states.iter().map(|s| s[0].max(0.0)).collect())
}

/// Closed-form solution of the Riccati equation for `alpha = 2`,
/// `lambda2 = 0` (Bernoulli reduction):
/// `v_t = ((1/lambda1 + 1/(2b)) e^{bt} - 1/(2b))^{-1}`, with the zero
/// solution at `lambda1 = 0`.
pub fn v_closed_form(lambda1: f64, t: f64, params: &ModelParams) -> f64 {
    assert!(params.is_diffusion(), "closed form requires alpha = 2");
    assert!(lambda1 >= 0.0, "lambda1 must be nonnegative");
    if lambda1 == 0.0 {
        return 0.0;
    }
    let b = params.b();
    if b == 0.0 {
        // limit b -> 0 of the Bernoulli solution
        return 1.0 / (1.0 / lambda1 + 0.5 * t);
    }
    let half = 0.5 / b;
    1.0 / ((1.0 / lambda1 + half) * (b * t).exp() - half)
}

/// `(1 - e^{-c t}) / c`, continuous at `c = 0` where it equals `t`.
pub(crate) fn expm1_ratio(c: f64, t: f64) -> f64 {
    if c == 0.0 {
        t
    } else {
        -f64::exp_m1(-c * t) / c
    }
}

/// Solution `u_t` of the linear comparison equation
/// `du/dt = -b u + (1/2) e^{-2 theta t} lambda2^2`, `u(0) = lambda1`,
/// which dominates `v_t` pointwise. Written as
/// `u_t = lambda1 e^{-bt} + (lambda2^2/2) e^{-bt} (1 - e^{-(2 theta - b) t})/(2 theta - b)`,
/// a form that covers the `b = 2 theta` resonance continuously.
pub fn comparison_bound(lambda: &LambdaPair, t: f64, params: &ModelParams) -> f64 {
    let b = params.b();
    let delta = 2.0 * params.theta() - b;
    let decay = (-b * t).exp();
    lambda.lambda1() * decay
        + 0.5 * lambda.lambda2() * lambda.lambda2() * decay * expm1_ratio(delta, t)
}

/// Coarser envelope `M(lambda) (1 + t) max(e^{-2 theta t}, e^{-b t})` with
/// `M = lambda1 + lambda2^2 / (2 |b - 2 theta|)` (or
/// `lambda1 + lambda2^2 / 2` at the `b = 2 theta` resonance).
pub fn comparison_envelope(lambda: &LambdaPair, t: f64, params: &ModelParams) -> f64 {
    envelope_constant(lambda, params) * (1.0 + t) * envelope_decay(params, t)
}

fn envelope_constant(lambda: &LambdaPair, params: &ModelParams) -> f64 {
    let l2sq = lambda.lambda2() * lambda.lambda2();
    let gap = (params.b() - 2.0 * params.theta()).abs();
    if gap == 0.0 {
        lambda.lambda1() + 0.5 * l2sq
    } else {
        lambda.lambda1() + 0.5 * l2sq / gap
    }
}

fn envelope_decay(params: &ModelParams, t: f64) -> f64 {
    (-2.0 * params.theta() * t)
        .exp()
        .max((-params.b() * t).exp())
}

/// Log of the conditional Fourier–Laplace transform,
/// `-y0 v_t + i x0 e^{-theta t} lambda2 + g_t`.
pub fn transform_exponent(
    lambda: &LambdaPair,
    t: f64,
    initial: &State,
    tol: f64,
    params: &ModelParams,
) -> Result<Complex64> {
    Ok(transform_exponent_parts(lambda, t, tol, params)?.at(initial))
}

/// The exponent split into its `v_t`, phase and `g_t` pieces, reusable
/// across several initial states.
pub fn transform_exponent_parts(
    lambda: &LambdaPair,
    t: f64,
    tol: f64,
    params: &ModelParams,
) -> Result<TransformExponent> {
    if t < 0.0 {
        return Err(Error::invalid("t must be nonnegative"));
    }
    let (v_t, integral) = integrate_v(lambda, t, tol, params)?;
    let phase = (-params.theta() * t).exp() * lambda.lambda2();
    let g_t = Complex64::new(
        -params.a() * integral,
        params.m() * lambda.lambda2() * expm1_ratio(params.theta(), t),
    );
    Ok(TransformExponent { v_t, phase, g_t, t })
}

impl TransformExponent {
    /// Assembles the full exponent for the given initial state.
    pub fn at(&self, initial: &State) -> Complex64 {
        Complex64::new(-initial.y() * self.v_t, initial.x() * self.phase) + self.g_t
    }
}

/// Horizon beyond which the tail of `int_0^inf v_s ds` is provably below
/// `tail_tol`, from the envelope bound: the tail past `T` is at most
/// `a M e^{-cT} ((1 + T)/c + 1/c^2)` with `c = min(b, 2 theta)`.
fn tail_horizon(lambda: &LambdaPair, tail_tol: f64, params: &ModelParams) -> f64 {
    let c = params.b().min(2.0 * params.theta());
    let coeff = params.a() * envelope_constant(lambda, params);
    let tail = |t: f64| coeff * (-c * t).exp() * ((1.0 + t) / c + 1.0 / (c * c));
    let mut horizon = 1.0;
    while tail(horizon) > tail_tol && horizon < 1e6 {
        horizon *= 2.0;
    }
    horizon
}

/// Log of the stationary Fourier–Laplace transform,
/// `g_inf = -a int_0^inf v_s ds + i (m/theta) lambda2`.
///
/// The improper integral is truncated at a horizon where the envelope-bound
/// tail drops below `tol / 2`; the remaining half of the budget goes to the
/// ODE solve.
pub fn stationary_exponent(
    lambda: &LambdaPair,
    tol: f64,
    params: &ModelParams,
) -> Result<Complex64> {
    params.require_stationary("stationary_exponent")?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::invalid("tolerance must be positive and finite"));
    }
    let imag = params.m() / params.theta() * lambda.lambda2();
    if lambda.lambda1() == 0.0 && lambda.lambda2() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let horizon = tail_horizon(lambda, 0.5 * tol, params);
    let (_, integral) = integrate_v(
        lambda,
        horizon,
        (0.5 * tol / horizon).min(DEFAULT_ABS_TOL),
        params,
    )?;
    Ok(Complex64::new(-params.a() * integral, imag))
}

/// Residual `|v_t(v_s(lambda), e^{-theta s} lambda2) - v_{s+t}(lambda)|` of
/// the flow property; a correct solver keeps it within a small multiple of
/// `tol`.
pub fn flow_residual(
    lambda: &LambdaPair,
    s: f64,
    t: f64,
    tol: f64,
    params: &ModelParams,
) -> Result<f64> {
    if s < 0.0 || t < 0.0 {
        return Err(Error::invalid("s and t must be nonnegative"));
    }
    let (v_s, _) = integrate_v(lambda, s, tol, params)?;
    let shifted = LambdaPair::new(v_s, (-params.theta() * s).exp() * lambda.lambda2())?;
    let (lhs, _) = integrate_v(&shifted, t, tol, params)?;
    let (rhs, _) = integrate_v(lambda, s + t, tol, params)?;
    Ok((lhs - rhs).abs())
}
