//! Model parameters and the affine characteristics `F` and `R`.

use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

/// Validated parameter set of the two-factor model.
///
/// Construction is the single validation point: every other module takes a
/// `&ModelParams` and relies on `a > 0`, `alpha` in `(1, 2]` and all fields
/// finite. Operations on the stationary regime additionally require
/// [`ModelParams::is_stationary`], which holds iff `b > 0` and `theta > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    a: f64,
    b: f64,
    m: f64,
    theta: f64,
    alpha: f64,
    stationary: bool,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, m: f64, theta: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [
            ("a", a),
            ("b", b),
            ("m", m),
            ("theta", theta),
            ("alpha", alpha),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {v}")));
            }
        }
        if a <= 0.0 {
            return Err(Error::invalid(format!("a must be positive, got {a}")));
        }
        if alpha <= 1.0 || alpha > 2.0 {
            return Err(Error::invalid(format!(
                "alpha must lie in (1, 2], got {alpha}"
            )));
        }
        Ok(ModelParams {
            a,
            b,
            m,
            theta,
            alpha,
            stationary: b > 0.0 && theta > 0.0,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// True iff `b > 0` and `theta > 0`, the regime in which a unique
    /// stationary distribution exists.
    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    /// True iff the first factor is the CIR diffusion.
    pub fn is_diffusion(&self) -> bool {
        self.alpha == 2.0
    }

    pub(crate) fn require_stationary(&self, what: &str) -> Result<()> {
        if self.stationary {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{what} requires b > 0 and theta > 0"
            )))
        }
    }

    pub(crate) fn require_diffusion(&self, what: &str) -> Result<()> {
        if self.is_diffusion() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{what} requires alpha = 2, got alpha = {}",
                self.alpha
            )))
        }
    }
}

/// Transform argument `(lambda1, lambda2)` with `lambda1 >= 0`.
///
/// The Fourier–Laplace transform of the model is evaluated at
/// `exp(-lambda1 * Y + i * lambda2 * X)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaPair {
    lambda1: f64,
    lambda2: f64,
}

impl LambdaPair {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !lambda1.is_finite() || !lambda2.is_finite() {
            return Err(Error::invalid("lambda components must be finite"));
        }
        if lambda1 < 0.0 {
            return Err(Error::invalid(format!(
                "lambda1 must be nonnegative, got {lambda1}"
            )));
        }
        Ok(LambdaPair { lambda1, lambda2 })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }
}

/// A point of the state space `R_+ x R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    y: f64,
    x: f64,
}

impl State {
    pub fn new(y: f64, x: f64) -> Result<Self> {
        if !y.is_finite() || !x.is_finite() {
            return Err(Error::invalid("state components must be finite"));
        }
        if y < 0.0 {
            return Err(Error::invalid(format!("y must be nonnegative, got {y}")));
        }
        Ok(State { y, x })
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

/// Levy-measure constant `C_alpha = 1 / (alpha * Gamma(-alpha))` of the
/// spectrally positive driver, for `alpha` in `(1, 2)`.
///
/// Evaluated through the reflection formula,
/// `C_alpha = -sin(pi * alpha) * Gamma(alpha) / pi`, which stays accurate
/// next to the Gamma pole as `alpha -> 2`: `sin(pi * alpha)` is computed as
/// `sin(pi * (alpha - 2))`.
pub fn stable_const(alpha: f64) -> Result<f64> {
    if alpha <= 1.0 || alpha >= 2.0 {
        return Err(Error::invalid(format!(
            "C_alpha is defined for alpha in (1, 2), got {alpha}"
        )));
    }
    let gamma_alpha = statrs::function::gamma::gamma(alpha);
    Ok(-(std::f64::consts::PI * (alpha - 2.0)).sin() * gamma_alpha / std::f64::consts::PI)
}

/// Constant part of the affine characteristics: `F(u) = a u_1 + m u_2`.
pub fn func_f(u1: Complex64, u2: Complex64, params: &ModelParams) -> Complex64 {
    params.a * u1 + params.m * u2
}

/// State-linear part of the affine characteristics:
/// `R(u) = -b u_1 + (-u_1)^alpha / alpha + u_2^2 / 2`.
///
/// The complex power uses the principal branch; callers keep `Re u_1 <= 0`,
/// so `-u_1` stays in the closed right half-plane where that branch is
/// continuous.
pub fn func_r(u1: Complex64, u2: Complex64, params: &ModelParams) -> Complex64 {
    let alpha = params.alpha;
    let power = if alpha == 2.0 {
        u1 * u1
    } else {
        (-u1).powc(Complex64::new(alpha, 0.0))
    };
    -params.b * u1 + power / alpha + u2 * u2 / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_accepts_stationary_set() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 1.0, 2.0).unwrap();
        assert!(p.is_stationary());
        assert!(p.is_diffusion());
    }

    #[test]
    fn validate_rejects_nonpositive_a() {
        let err = ModelParams::new(0.0, 1.0, 0.0, 1.0, 2.0).unwrap_err();
        assert!(matches!(err, Error::Invalid(ref s) if s.contains("a must be positive")));
    }

    #[test]
    fn validate_rejects_alpha_out_of_range() {
        assert!(ModelParams::new(1.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 1.0, 2.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn validate_allows_negative_b_without_stationarity() {
        let p = ModelParams::new(1.0, -1.0, 0.0, 1.0, 1.5).unwrap();
        assert!(!p.is_stationary());
    }

    #[test]
    fn validate_is_idempotent() {
        let p = ModelParams::new(0.5, 2.0, -1.0, 0.7, 1.8).unwrap();
        let q = ModelParams::new(p.a(), p.b(), p.m(), p.theta(), p.alpha()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn lambda_pair_rejects_negative_lambda1() {
        assert!(LambdaPair::new(-0.1, 0.0).is_err());
        assert!(LambdaPair::new(0.0, -3.0).is_ok());
    }

    #[test]
    fn state_rejects_negative_y() {
        assert!(State::new(-1e-9, 0.0).is_err());
    }

    #[test]
    fn func_f_matches_direct_evaluation() {
        let p = ModelParams::new(2.0, 1.0, 3.0, 1.0, 2.0).unwrap();
        assert_eq!(
            func_f(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), &p),
            Complex64::new(0.0, 0.0)
        );
        // a=2, m=3, u = (-1, i) -> -2 + 3i
        let v = func_f(Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0), &p);
        assert_eq!(v, Complex64::new(-2.0, 3.0));
        let p = ModelParams::new(1.0, 1.0, 0.0, 1.0, 2.0).unwrap();
        assert_eq!(
            func_f(Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0), &p),
            Complex64::new(-1.0, 0.0)
        );
    }

    #[test]
    fn func_r_matches_direct_evaluation() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 1.0, 2.0).unwrap();
        assert_eq!(
            func_r(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), &p),
            Complex64::new(0.0, 0.0)
        );
        // b=1, alpha=2, u=(-1, 0) -> 1 + 1/2
        let v = func_r(Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0), &p);
        assert!((v.re - 1.5).abs() < 1e-15 && v.im.abs() < 1e-15);
        // b=1, alpha=1.5, u=(-1, 0) -> 1 + 2/3
        let p = ModelParams::new(1.0, 1.0, 0.0, 1.0, 1.5).unwrap();
        let v = func_r(Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0), &p);
        assert!((v.re - (1.0 + 2.0 / 3.0)).abs() < 1e-15 && v.im.abs() < 1e-15);
    }

    #[test]
    fn func_r_real_part_matches_riccati_rhs_on_grid() {
        // For u1 = -v <= 0 real and u2 = i*lambda2, the real part of R is
        // b*v + v^alpha/alpha - lambda2^2/2, the negative of the Riccati
        // right-hand side at source time zero.
        for &alpha in &[1.2, 1.5, 1.9, 2.0] {
            let p = ModelParams::new(1.0, 0.8, 0.3, 1.1, alpha).unwrap();
            for &v in &[0.0, 0.3, 1.0, 4.0] {
                for &l2 in &[-2.0, 0.0, 0.5] {
                    let r = func_r(Complex64::new(-v, 0.0), Complex64::new(0.0, l2), &p);
                    let expected = 0.8 * v + v.powf(alpha) / alpha - l2 * l2 / 2.0;
                    assert!((r.re - expected).abs() < 1e-12 * (1.0 + expected.abs()));
                    assert!(r.im.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn stable_const_positive_and_consistent() {
        // direct evaluation of 1/(alpha*Gamma(-alpha)) at alpha = 1.5:
        // Gamma(-1.5) = 4*sqrt(pi)/3.
        let direct = 1.0 / (1.5 * 4.0 * std::f64::consts::PI.sqrt() / 3.0);
        assert!((stable_const(1.5).unwrap() - direct).abs() < 1e-15);
        for i in 1..=9 {
            let alpha = 1.0 + 0.1 * i as f64;
            assert!(stable_const(alpha).unwrap() > 0.0);
        }
        // vanishes linearly at the alpha -> 2 endpoint
        assert!(stable_const(1.999999).unwrap() < 1e-5);
        assert!(stable_const(2.0).is_err());
    }
}
