//! Phillips multiplier–accelerator models.
//!
//! The classical model is the constant-coefficient equation
//! `Y'' + a Y' + b Y = 0` with `a = k + m l - n k l`, `b = m k l`. Forming capital by
//! integration of the income flow instead, `K(t) = n k/(1 + k t)·∫₀ᵗ Y dh`, turns the
//! coefficients into functions of time:
//!
//! ```text
//! a(t) = m l + (2k - n k l)/(1 + k t),    b(t) = 2 m k l/(1 + k t).
//! ```
//!
//! In the dimensionless time `τ = 1 + k t` this reads
//! `Y_ττ + (α + β/τ) Y_τ + (γ/τ) Y = 0`, `τ >= 1`, with `α = m l/k`, `β = 2 - n l`,
//! `γ = 2 m l/k`, and the initial-value problem at `τ = 1` is solved through the
//! Volterra equation for `φ = Y_ττ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{cumulative_moment, cumulative_trapezoid, Grid, GridError};
use crate::volterra::{self, SolverConfig, VolterraError, VolterraProblem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhillipsError {
    #[error("{field}: must satisfy {constraint} (got {value})")]
    InvalidParameter {
        field: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("tau_max must exceed 1 (got {0})")]
    BadHorizon(f64),
    #[error("income samples ({got}) do not match the grid ({expected})")]
    LengthMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solver(#[from] VolterraError),
}

/// Reaction rate `k`, demand influence rate `l`, multiplier `m`, accelerator `n`,
/// and the income data `Y(τ=1) = y1`, `Y_τ(τ=1) = y1p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhillipsParams {
    pub k: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub y1: f64,
    pub y1p: f64,
}

impl PhillipsParams {
    pub fn new(k: f64, l: f64, m: f64, n: f64, y1: f64, y1p: f64) -> Result<Self, PhillipsError> {
        let positive = |field, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(PhillipsError::InvalidParameter {
                    field,
                    constraint: "> 0",
                    value,
                })
            }
        };
        positive("k", k)?;
        positive("l", l)?;
        positive("n", n)?;
        if !(m > 0.0 && m < 1.0) {
            return Err(PhillipsError::InvalidParameter {
                field: "m",
                constraint: "0 < m < 1",
                value: m,
            });
        }
        for (field, value) in [("y1", y1), ("y1p", y1p)] {
            if !value.is_finite() {
                return Err(PhillipsError::InvalidParameter {
                    field,
                    constraint: "finite",
                    value,
                });
            }
        }
        Ok(Self {
            k,
            l,
            m,
            n,
            y1,
            y1p,
        })
    }

    /// Coefficients `(a, b)` of the classical constant-coefficient equation.
    pub fn classical_coefficients(&self) -> (f64, f64) {
        (
            self.k + self.m * self.l - self.n * self.k * self.l,
            self.m * self.k * self.l,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Two real characteristic roots.
    Aperiodic,
    /// Double root.
    Critical,
    /// Complex pair; growing when `a < 0`.
    Oscillatory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncomePath {
    pub t: Vec<f64>,
    pub income: Vec<f64>,
    pub income_rate: Vec<f64>,
}

/// Closed-form solution of `Y'' + a Y' + b Y = 0` from `Y(t0) = y0`, `Y'(t0) = dy0`
/// with `t0 = grid.lo()`.
pub fn classical_solution(
    params: &PhillipsParams,
    y0: f64,
    dy0: f64,
    grid: &Grid,
) -> (Regime, IncomePath) {
    let (a, b) = params.classical_coefficients();
    let disc = a * a - 4.0 * b;
    let scale = (a * a).max(b.abs()).max(f64::MIN_POSITIVE);
    let t: Vec<f64> = grid.points();
    let t0 = grid.lo();
    let (regime, eval): (Regime, Box<dyn Fn(f64) -> (f64, f64)>) = if disc.abs() <= 1e-12 * scale {
        let r = -0.5 * a;
        let c2 = dy0 - r * y0;
        (
            Regime::Critical,
            Box::new(move |s| {
                let e = (r * s).exp();
                ((y0 + c2 * s) * e, (c2 + r * (y0 + c2 * s)) * e)
            }),
        )
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        let r1 = 0.5 * (-a + sq);
        let r2 = 0.5 * (-a - sq);
        let c1 = (dy0 - r2 * y0) / (r1 - r2);
        let c2 = y0 - c1;
        (
            Regime::Aperiodic,
            Box::new(move |s| {
                let (e1, e2) = ((r1 * s).exp(), (r2 * s).exp());
                (c1 * e1 + c2 * e2, c1 * r1 * e1 + c2 * r2 * e2)
            }),
        )
    } else {
        let alpha = -0.5 * a;
        let omega = 0.5 * (-disc).sqrt();
        let c2 = (dy0 - alpha * y0) / omega;
        (
            Regime::Oscillatory,
            Box::new(move |s| {
                let e = (alpha * s).exp();
                let (sin, cos) = (omega * s).sin_cos();
                let y = e * (y0 * cos + c2 * sin);
                let dy = alpha * y + e * omega * (c2 * cos - y0 * sin);
                (y, dy)
            }),
        )
    };
    let (income, income_rate) = t.iter().map(|&t| eval(t - t0)).unzip();
    (
        regime,
        IncomePath {
            t,
            income,
            income_rate,
        },
    )
}

/// `(a(t), b(t))` of the variable-coefficient equation in dimensional time.
pub fn corrected_coefficients(params: &PhillipsParams, t: f64) -> (f64, f64) {
    let PhillipsParams { k, l, m, n, .. } = *params;
    let u = 1.0 + k * t;
    (m * l + (2.0 * k - n * k * l) / u, 2.0 * m * k * l / u)
}

/// Coefficients of `Y_ττ + (α + β/τ) Y_τ + (γ/τ) Y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionlessCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl DimensionlessCoeffs {
    /// Maps back to `(a(t), b(t))`: with `d/dt = k d/dτ`,
    /// `a(t) = k (α + β/τ)` and `b(t) = k² γ/τ`.
    pub fn to_time(&self, k: f64, t: f64) -> (f64, f64) {
        let tau = 1.0 + k * t;
        (k * (self.alpha + self.beta / tau), k * k * self.gamma / tau)
    }
}

/// Result of the change of variables `τ = 1 + k t`.
pub fn dimensionless_form(params: &PhillipsParams) -> DimensionlessCoeffs {
    let PhillipsParams { k, l, m, n, .. } = *params;
    DimensionlessCoeffs {
        alpha: m * l / k,
        beta: 2.0 - n * l,
        gamma: 2.0 * m * l / k,
    }
}

/// Volterra problem for `φ = Y_ττ` on `[1, tau_max]`.
///
/// Substituting `Y(τ) = ∫₁^τ (τ - h) φ dh + (τ - 1) y1p + y1` gives the kernel
/// `-α - (β + γ (τ - h))/τ` and the free term
/// `-(α + β/τ) y1p - (γ/τ)((τ - 1) y1p + y1)`.
pub fn reduce_to_volterra(
    params: &PhillipsParams,
    tau_max: f64,
) -> Result<VolterraProblem, PhillipsError> {
    if !(tau_max > 1.0 && tau_max.is_finite()) {
        return Err(PhillipsError::BadHorizon(tau_max));
    }
    reduce_window(params, 1.0, tau_max, params.y1, params.y1p)
}

/// Same reduction anchored at `tau0` with `Y(tau0) = y`, `Y_τ(tau0) = yp`.
fn reduce_window(
    params: &PhillipsParams,
    tau0: f64,
    tau1: f64,
    y: f64,
    yp: f64,
) -> Result<VolterraProblem, PhillipsError> {
    let DimensionlessCoeffs { alpha, beta, gamma } = dimensionless_form(params);
    let problem = VolterraProblem::new(
        1,
        tau0,
        tau1,
        move |_, _, tau, h| -alpha - (beta + gamma * (tau - h)) / tau,
        move |_, tau| -(alpha + beta / tau) * yp - gamma / tau * ((tau - tau0) * yp + y),
    )?;
    Ok(problem)
}

/// Corrected-model income on a uniform `τ` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectedSolution {
    pub tau: Vec<f64>,
    /// Dimensional time `t = (τ - 1)/k` of each node.
    pub t: Vec<f64>,
    pub income: Vec<f64>,
    /// `Y_τ`.
    pub income_rate: Vec<f64>,
    /// `φ = Y_ττ`.
    pub acceleration: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    /// See [`volterra::VolterraSolution::weighted_residual_history`].
    pub weighted_residual_history: Vec<f64>,
}

/// Successive approximations on the Volterra reduction, then reconstruction of `Y`
/// and `Y_τ` by trapezoid integration of `φ`.
pub fn solve_corrected(
    params: &PhillipsParams,
    tau_max: f64,
    config: &SolverConfig,
) -> Result<CorrectedSolution, PhillipsError> {
    let problem = reduce_to_volterra(params, tau_max)?;
    solve_window(params, &problem, params.y1, params.y1p, config)
}

/// [`solve_corrected`] restarted on consecutive windows of length at most `window`,
/// each started from the previous window's end values and using `config.nodes`
/// nodes. Keeps the iteration stable on long horizons, where a single Picard sweep
/// accumulates roundoff of order `exp(∫|K|)`.
pub fn solve_corrected_windowed(
    params: &PhillipsParams,
    tau_max: f64,
    window: f64,
    config: &SolverConfig,
) -> Result<CorrectedSolution, PhillipsError> {
    if !(tau_max > 1.0 && tau_max.is_finite()) {
        return Err(PhillipsError::BadHorizon(tau_max));
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(PhillipsError::BadHorizon(window));
    }
    let count = ((tau_max - 1.0) / window).ceil().max(1.0) as usize;
    let width = (tau_max - 1.0) / count as f64;
    let (mut y, mut yp) = (params.y1, params.y1p);
    let mut out: Option<CorrectedSolution> = None;
    for w in 0..count {
        let tau0 = 1.0 + w as f64 * width;
        let tau1 = if w + 1 == count {
            tau_max
        } else {
            tau0 + width
        };
        let problem = reduce_window(params, tau0, tau1, y, yp)?;
        let part = solve_window(params, &problem, y, yp, config)?;
        y = *part.income.last().unwrap();
        yp = *part.income_rate.last().unwrap();
        out = Some(match out {
            None => part,
            Some(mut acc) => {
                acc.tau.extend_from_slice(&part.tau[1..]);
                acc.t.extend_from_slice(&part.t[1..]);
                acc.income.extend_from_slice(&part.income[1..]);
                acc.income_rate.extend_from_slice(&part.income_rate[1..]);
                acc.acceleration.extend_from_slice(&part.acceleration[1..]);
                acc.iterations += part.iterations;
                acc.residual = acc.residual.max(part.residual);
                acc.residual_history.extend(part.residual_history);
                acc.weighted_residual_history
                    .extend(part.weighted_residual_history);
                acc
            }
        });
    }
    Ok(out.expect("at least one window"))
}

fn solve_window(
    params: &PhillipsParams,
    problem: &VolterraProblem,
    y: f64,
    yp: f64,
    config: &SolverConfig,
) -> Result<CorrectedSolution, PhillipsError> {
    let sol = volterra::solve_picard(problem, config)?;
    let phi = sol.values.into_iter().next().expect("scalar problem");
    let grid = sol.grid;
    let tau = grid.points();
    let tau0 = grid.lo();
    let moment = cumulative_moment(&grid, &phi);
    let first = cumulative_trapezoid(&phi, grid.step());
    let income = tau
        .iter()
        .zip(&moment)
        .map(|(tau, m)| m + (tau - tau0) * yp + y)
        .collect();
    let income_rate = first.iter().map(|f| f + yp).collect();
    Ok(CorrectedSolution {
        t: tau.iter().map(|tau| (tau - 1.0) / params.k).collect(),
        tau,
        income,
        income_rate,
        acceleration: phi,
        iterations: sol.iterations,
        residual: sol.residual,
        residual_history: sol.residual_history,
        weighted_residual_history: sol.weighted_residual_history,
    })
}

/// Sup-norm of `Y_ττ + (α + β/τ) Y_τ + (γ/τ) Y` over the solution's nodes.
pub fn equation_residual(params: &PhillipsParams, sol: &CorrectedSolution) -> f64 {
    let DimensionlessCoeffs { alpha, beta, gamma } = dimensionless_form(params);
    (0..sol.tau.len())
        .map(|k| {
            let tau = sol.tau[k];
            (sol.acceleration[k]
                + (alpha + beta / tau) * sol.income_rate[k]
                + gamma / tau * sol.income[k])
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Capital `K(t) = n k/(1 + k t)·∫₀ᵗ Y dh` and investment `I = dK/dt` from income
/// sampled on a uniform grid starting at `t = 0`.
pub fn capital_from_income(
    params: &PhillipsParams,
    grid: &Grid,
    income: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), PhillipsError> {
    if income.len() != grid.len() {
        return Err(PhillipsError::LengthMismatch {
            got: income.len(),
            expected: grid.len(),
        });
    }
    let PhillipsParams { k, n, .. } = *params;
    let realized = cumulative_trapezoid(income, grid.step());
    let (capital, investment) = grid
        .points()
        .iter()
        .zip(realized.iter().zip(income))
        .map(|(t, (s, y))| {
            let u = 1.0 + k * t;
            (n * k / u * s, -n * k * k / (u * u) * s + n * k / u * y)
        })
        .unzip();
    Ok((capital, investment))
}
