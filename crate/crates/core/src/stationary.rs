//! Stationary-law analytics for the diffusion case `alpha = 2`:
//! the Gamma law of `Y_inf`, CIR transition densities, exact mixed moments
//! `E(Y_inf^n X_inf^p)` via their linear recursion, and the transient moment
//! ODE system.

use rand::Rng;
use rand_distr::Distribution;
use serde::Serialize;

use crate::model::{ModelParams, State};
use crate::ode::DormandPrince45;
use crate::special::{gamma_lr, ln_bessel_i, ln_gamma};
use crate::{Error, Result};

/// Gamma(shape, rate) stationary law of `Y_inf` (shape `2a`, rate `2b`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaLaw {
    pub shape: f64,
    pub rate: f64,
}

impl GammaLaw {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    /// `E Y^n = prod_{j=0}^{n-1} (shape + j) / rate`.
    pub fn moment(&self, n: u32) -> f64 {
        (0..n)
            .map(|j| (self.shape + j as f64) / self.rate)
            .product()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        if y == 0.0 {
            // boundary limit: finite only for shape >= 1
            return match self.shape.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Equal) => self.rate,
                Some(std::cmp::Ordering::Greater) => 0.0,
                _ => f64::INFINITY,
            };
        }
        (self.shape * self.rate.ln() + (self.shape - 1.0) * y.ln()
            - self.rate * y
            - ln_gamma(self.shape))
        .exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            gamma_lr(self.shape, self.rate * y)
        }
    }

    /// Laplace transform `(1 + lambda/rate)^{-shape}` at `lambda >= 0`.
    pub fn laplace(&self, lambda: f64) -> f64 {
        (1.0 + lambda / self.rate).powf(-self.shape)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rand_distr::Gamma::new(self.shape, 1.0 / self.rate)
            .expect("positive Gamma parameters")
            .sample(rng)
    }
}

/// Stationary law of `Y_inf`: Gamma with shape `2a` and rate `2b`.
pub fn y_stationary_law(params: &ModelParams) -> Result<GammaLaw> {
    params.require_diffusion("y_stationary_law")?;
    params.require_stationary("y_stationary_law")?;
    Ok(GammaLaw {
        shape: 2.0 * params.a(),
        rate: 2.0 * params.b(),
    })
}

/// Density of `Y_t` given `Y_0 = y0` for the CIR factor (`alpha = 2`),
/// through the noncentral chi-square representation with `4a` degrees of
/// freedom, scale `(1 - e^{-bt})/(4b)` and noncentrality
/// `4b e^{-bt} y0 / (1 - e^{-bt})`. Everything is assembled in log space so
/// large Bessel arguments and tiny noncentralities cannot overflow.
pub fn cir_transition_density(
    y: f64,
    y0: f64,
    t: f64,
    params: &ModelParams,
    series_tol: f64,
) -> Result<f64> {
    params.require_diffusion("cir_transition_density")?;
    if !(y > 0.0) {
        return Err(Error::invalid("density argument y must be positive"));
    }
    if y0 < 0.0 || !(t > 0.0) {
        return Err(Error::invalid("requires y0 >= 0 and t > 0"));
    }
    let b = params.b();
    let cbar = if b == 0.0 {
        0.25 * t
    } else {
        -f64::exp_m1(-b * t) / (4.0 * b)
    };
    let nu = 2.0 * params.a() - 1.0;
    let z = y / cbar;
    let noncentrality = y0 * (-b * t).exp() / cbar;
    if noncentrality == 0.0 {
        // central case: Gamma(2a, 1/(2 cbar)) in log space
        let shape = 2.0 * params.a();
        let ln_pdf =
            (shape - 1.0) * y.ln() - shape * (2.0 * cbar).ln() - y / (2.0 * cbar) - ln_gamma(shape);
        return Ok(ln_pdf.exp());
    }
    let ln_bessel = ln_bessel_i(nu, (noncentrality * z).sqrt(), series_tol)?;
    let ln_pdf = -(2.0 * cbar).ln() - 0.5 * (z + noncentrality)
        + 0.5 * nu * (z.ln() - noncentrality.ln())
        + ln_bessel;
    Ok(ln_pdf.exp())
}

/// Exact stationary moment `E(Y_inf^n X_inf^p)` from the recursion
///
/// ```text
/// (bn + p theta) E(Y^n X^p) = (an + n(n-1)/2) E(Y^{n-1} X^p)
///                           + m p E(Y^n X^{p-1})
///                           + p(p-1)/2 E(Y^{n+1} X^{p-2})
/// ```
///
/// with base `E(Y^0 X^0) = 1` and vanishing terms at negative indices.
pub fn stationary_moment(n: u32, p: u32, params: &ModelParams) -> Result<f64> {
    let table = moment_triangle(n + p, params)?;
    Ok(table[n as usize][p as usize])
}

/// Fills the triangle `E(Y^n X^p)`, `n + p <= order`, by ascending total
/// degree (the `(n+1, p-2)` coupling lowers total degree, so the fill is
/// well-founded).
fn moment_triangle(order: u32, params: &ModelParams) -> Result<Vec<Vec<f64>>> {
    params.require_diffusion("stationary moments")?;
    params.require_stationary("stationary moments")?;
    let (a, b, m, theta) = (params.a(), params.b(), params.m(), params.theta());
    let size = order as usize + 1;
    let mut table = vec![vec![0.0; size]; size + 1];
    table[0][0] = 1.0;
    for degree in 1..=order as usize {
        for n in (0..=degree).rev() {
            let p = degree - n;
            let (nf, pf) = (n as f64, p as f64);
            let mut acc = 0.0;
            if n >= 1 {
                acc += (a * nf + 0.5 * nf * (nf - 1.0)) * table[n - 1][p];
            }
            if p >= 1 {
                acc += m * pf * table[n][p - 1];
            }
            if p >= 2 {
                acc += 0.5 * pf * (pf - 1.0) * table[n + 1][p - 2];
            }
            table[n][p] = acc / (b * nf + pf * theta);
        }
    }
    Ok(table)
}

/// Serializable table of stationary moments up to a total order.
#[derive(Debug, Clone, Serialize)]
pub struct MomentTable {
    pub max_order: u32,
    pub params: ModelParams,
    pub entries: Vec<MomentEntry>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentEntry {
    pub n: u32,
    pub p: u32,
    pub value: f64,
}

impl MomentTable {
    pub fn new(max_order: u32, params: &ModelParams) -> Result<Self> {
        let table = moment_triangle(max_order, params)?;
        let mut entries = Vec::new();
        for (n, p) in degree_ordered_indices(max_order) {
            entries.push(MomentEntry {
                n,
                p,
                value: table[n as usize][p as usize],
            });
        }
        Ok(MomentTable {
            max_order,
            params: *params,
            entries,
        })
    }

    pub fn get(&self, n: u32, p: u32) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.n == n && e.p == p)
            .map(|e| e.value)
    }
}

/// Index set `{(n, p) : n + p <= order}` sorted by total degree, then by
/// descending `n` — the ordering that makes the moment ODE matrix lower
/// triangular with `f_00, f_10, f_01, f_20, f_11, f_02, ...`.
pub fn degree_ordered_indices(order: u32) -> Vec<(u32, u32)> {
    let mut indices = Vec::new();
    for degree in 0..=order {
        for n in (0..=degree).rev() {
            indices.push((n, degree - n));
        }
    }
    indices
}

/// Linear ODE system `f' = A f` for the transient mixed moments
/// `f_{n,p}(t) = E(Y_t^n X_t^p)`, `n + p <= order`.
#[derive(Debug, Clone)]
pub struct MomentOdeSystem {
    pub order: u32,
    pub indices: Vec<(u32, u32)>,
    /// Row-major coefficient matrix in the `indices` ordering.
    pub matrix: Vec<Vec<f64>>,
    params: ModelParams,
}

/// Assembles the moment ODE system for `alpha = 2`:
/// row `(n, p)` has diagonal `-(bn + p theta)` and couplings
/// `an + n(n-1)/2` to `(n-1, p)`, `pm` to `(n, p-1)` and `p(p-1)/2` to
/// `(n+1, p-2)`.
pub fn build_moment_ode(order: u32, params: &ModelParams) -> Result<MomentOdeSystem> {
    params.require_diffusion("build_moment_ode")?;
    let indices = degree_ordered_indices(order);
    let position: std::collections::HashMap<(u32, u32), usize> = indices
        .iter()
        .copied()
        .enumerate()
        .map(|(i, np)| (np, i))
        .collect();
    let dim = indices.len();
    let (a, b, m, theta) = (params.a(), params.b(), params.m(), params.theta());
    let mut matrix = vec![vec![0.0; dim]; dim];
    for (row, &(n, p)) in indices.iter().enumerate() {
        let (nf, pf) = (n as f64, p as f64);
        matrix[row][row] = -(b * nf + pf * theta);
        if n >= 1 {
            matrix[row][position[&(n - 1, p)]] += a * nf + 0.5 * nf * (nf - 1.0);
        }
        if p >= 1 {
            matrix[row][position[&(n, p - 1)]] += m * pf;
        }
        if p >= 2 {
            matrix[row][position[&(n + 1, p - 2)]] += 0.5 * pf * (pf - 1.0);
        }
    }
    Ok(MomentOdeSystem {
        order,
        indices,
        matrix,
        params: *params,
    })
}

impl MomentOdeSystem {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn index_of(&self, n: u32, p: u32) -> Option<usize> {
        self.indices.iter().position(|&(k, l)| k == n && l == p)
    }

    /// Eigenvalues `-(nb + p theta)` read off the triangular diagonal.
    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[i][i]).collect()
    }

    /// Kernel direction normalized to `f_00 = 1`, from forward substitution
    /// on the assembled matrix (an independent route to the stationary
    /// moments when the system is stationary).
    pub fn stationary_vector(&self) -> Result<Vec<f64>> {
        self.params.require_stationary("stationary_vector")?;
        let dim = self.dim();
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        for row in 1..dim {
            let mut acc = 0.0;
            for col in 0..row {
                acc += self.matrix[row][col] * v[col];
            }
            v[row] = acc / -self.matrix[row][row];
        }
        Ok(v)
    }

    /// Initial moment vector `y0^n x0^p` for a deterministic start.
    pub fn deterministic_initial(&self, state: &State) -> Vec<f64> {
        self.indices
            .iter()
            .map(|&(n, p)| state.y().powi(n as i32) * state.x().powi(p as i32))
            .collect()
    }

    /// Initial moment vector equal to the stationary moments.
    pub fn stationary_initial(&self) -> Result<Vec<f64>> {
        let table = moment_triangle(self.order, &self.params)?;
        Ok(self
            .indices
            .iter()
            .map(|&(n, p)| table[n as usize][p as usize])
            .collect())
    }
}

/// Solves the transient moment system from `init` (in the system's index
/// ordering) and returns the moment vector at time `t`.
pub fn transient_moments(t: f64, init: &[f64], system: &MomentOdeSystem) -> Result<Vec<f64>> {
    if init.len() != system.dim() {
        return Err(Error::invalid(format!(
            "initial vector has length {}, system dimension is {}",
            init.len(),
            system.dim()
        )));
    }
    if t < 0.0 {
        return Err(Error::invalid("t must be nonnegative"));
    }
    let solver = DormandPrince45::new(1e-12, 1e-10)?;
    solver.solve_to(
        |_, f, df| {
            for (row, out) in df.iter_mut().enumerate() {
                *out = system.matrix[row].iter().zip(f).map(|(c, v)| c * v).sum();
            }
        },
        0.0,
        init,
        t,
    )
}

/// Moment vectors at several nondecreasing times.
pub fn transient_moments_at(
    times: &[f64],
    init: &[f64],
    system: &MomentOdeSystem,
) -> Result<Vec<Vec<f64>>> {
    if init.len() != system.dim() {
        return Err(Error::invalid(
            "initial vector does not match system dimension",
        ));
    }
    let solver = DormandPrince45::new(1e-12, 1e-10)?;
    solver.solve_at(
        |_, f, df| {
            for (row, out) in df.iter_mut().enumerate() {
                *out = system.matrix[row].iter().zip(f).map(|(c, v)| c * v).sum();
            }
        },
        0.0,
        init,
        times,
    )
}
