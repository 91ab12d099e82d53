//! Two-factor affine model
//!
//! ```text
//! dY_t = (a - b Y_t) dt + Y_{t-}^{1/alpha} dL_t      (alpha-root factor, Y >= 0)
//! dX_t = (m - theta X_t) dt + sqrt(Y_t) dB_t         (OU-type factor driven by Y)
//! ```
//!
//! with `a > 0`, `b, m, theta` real, `alpha` in `(1, 2]`, `L` a spectrally
//! positive alpha-stable Levy process (a Brownian motion at `alpha = 2`,
//! where `Y` is the CIR process) and `B` an independent Brownian motion.
//!
//! The crate provides
//!
//! * [`model`] — validated parameters and the affine characteristics `F`, `R`;
//! * [`riccati`] — the generalized Riccati ODE for the Fourier–Laplace
//!   transform exponent, its closed form at `alpha = 2`, comparison bounds,
//!   the stationary exponent and the flow property;
//! * [`generator`] — infinitesimal generator applied to test functions and
//!   the Foster–Lyapunov drift check;
//! * [`sampler`] — exact CIR transitions, Euler schemes for the alpha-root
//!   factor, conditional-Gaussian updates for `X`, reproducible ensembles;
//! * [`stationary`] — the Gamma law of `Y_inf`, CIR transition densities,
//!   exact mixed stationary moments and the transient moment ODE system;
//! * [`ergodicity`] — Birkhoff time averages and mixing-rate diagnostics;
//! * [`selftest`] — the built-in acceptance suite run by `affine2f selftest`.

pub mod ergodicity;
mod error;
pub mod generator;
pub mod model;
pub mod ode;
pub mod quad;
pub mod riccati;
pub mod sampler;
pub mod selftest;
pub mod special;
pub mod stationary;

pub use error::Error;
pub use model::{LambdaPair, ModelParams, State};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
