//! Systems of Volterra integral equations of the second kind,
//!
//! ```text
//! φ_i(t) = λ Σ_j ∫_{t_lo}^{t} k_ij(t, h) φ_j(h) dh + q_i(t),   t ∈ [t_lo, t_hi],
//! ```
//!
//! solved by successive approximations from the zero element on a uniform grid,
//! with the composite trapezoid rule over `[t_lo, t]`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::grid::{Grid, GridError};

/// `k(i, j, t, h)`; only ever evaluated for `h <= t`.
pub type Kernel = Arc<dyn Fn(usize, usize, f64, f64) -> f64 + Send + Sync>;
/// `q(i, t)`.
pub type FreeTerm = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolterraError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("candidate has shape {got:?}, expected {expected:?}")]
    ShapeMismatch {
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error(
        "successive approximations stalled after {iterations} iterations (residual {residual:e})"
    )]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Vec<Vec<f64>>,
    },
}

#[derive(Clone)]
pub struct VolterraProblem {
    dim: usize,
    t_lo: f64,
    t_hi: f64,
    lambda: f64,
    kernel: Kernel,
    free_term: FreeTerm,
}

impl fmt::Debug for VolterraProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VolterraProblem")
            .field("dim", &self.dim)
            .field("domain", &(self.t_lo, self.t_hi))
            .field("lambda", &self.lambda)
            .finish_non_exhaustive()
    }
}

impl VolterraProblem {
    /// A problem with `λ = 1`; use [`VolterraProblem::with_lambda`] to change it.
    pub fn new<K, Q>(
        dim: usize,
        t_lo: f64,
        t_hi: f64,
        kernel: K,
        free_term: Q,
    ) -> Result<Self, VolterraError>
    where
        K: Fn(usize, usize, f64, f64) -> f64 + Send + Sync + 'static,
        Q: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(VolterraError::InvalidProblem(
                "dimension must be >= 1".into(),
            ));
        }
        if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
            return Err(VolterraError::InvalidProblem(format!(
                "domain [{t_lo}, {t_hi}] is empty"
            )));
        }
        Ok(Self {
            dim,
            t_lo,
            t_hi,
            lambda: 1.0,
            kernel: Arc::new(kernel),
            free_term: Arc::new(free_term),
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kernel(&self, i: usize, j: usize, t: f64, h: f64) -> f64 {
        (self.kernel)(i, j, t, h)
    }

    pub fn free_term(&self, i: usize, t: f64) -> f64 {
        (self.free_term)(i, t)
    }

    pub fn grid(&self, nodes: usize) -> Result<Grid, GridError> {
        Grid::new(self.t_lo, self.t_hi, nodes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nodes: 401,
            tol: 1e-12,
            max_iter: 500,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), VolterraError> {
        if self.nodes < 2 {
            return Err(VolterraError::InvalidConfig("nodes must be >= 2".into()));
        }
        if !(self.tol > 0.0) {
            return Err(VolterraError::InvalidConfig("tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(VolterraError::InvalidConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Grid values `values[i][k] = φ_i(t_k)` and iteration statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSolution {
    pub grid: Grid,
    pub values: Vec<Vec<f64>>,
    /// Number of successive-approximation updates applied.
    pub iterations: usize,
    /// Sup-norm equation residual of `values`.
    pub residual: f64,
    /// Residual of every iterate, starting with the zero element.
    pub residual_history: Vec<f64>,
    /// The same residuals in the weighted norm `max_k e^{-σ(t_k - t_lo)} |·|` with
    /// `σ = 2λ·max Σ_j |K_ij|`, in which the iteration contracts from the first step
    /// on fine grids. The plain sup norm can grow over the first iterations when
    /// `λ·max|K|·(t_hi - t_lo)` exceeds one.
    pub weighted_residual_history: Vec<f64>,
}

/// The trapezoid-discretized integral operator: kernel values times quadrature
/// weights over the lower triangle `l <= k`, one triangle per `(i, j)` block.
struct Discretized {
    dim: usize,
    nodes: usize,
    lambda: f64,
    blocks: Vec<Vec<f64>>,
    free: Vec<Vec<f64>>,
    /// `e^{-σ(t_k - t_lo)}` per node.
    decay: Vec<f64>,
}

fn tri(k: usize) -> usize {
    k * (k + 1) / 2
}

impl Discretized {
    fn new(problem: &VolterraProblem, grid: &Grid) -> Self {
        let n = grid.len();
        let t = grid.points();
        let step = grid.step();
        let mut blocks = Vec::with_capacity(problem.dim * problem.dim);
        let mut row_bound = vec![0.0_f64; problem.dim * tri(n)];
        for i in 0..problem.dim {
            for j in 0..problem.dim {
                let mut b = vec![0.0; tri(n)];
                for k in 1..n {
                    for l in 0..=k {
                        let w = if l == 0 || l == k { 0.5 * step } else { step };
                        let kv = problem.kernel(i, j, t[k], t[l]);
                        b[tri(k) + l] = w * kv;
                        row_bound[i * tri(n) + tri(k) + l] += kv.abs();
                    }
                }
                blocks.push(b);
            }
        }
        let bound = row_bound.iter().fold(0.0_f64, |m, v| m.max(*v));
        let sigma = 2.0 * problem.lambda.abs() * bound;
        let decay = t.iter().map(|tk| (-sigma * (tk - t[0])).exp()).collect();
        let free = (0..problem.dim)
            .map(|i| t.iter().map(|&t| problem.free_term(i, t)).collect())
            .collect();
        Self {
            dim: problem.dim,
            nodes: n,
            lambda: problem.lambda,
            blocks,
            free,
            decay,
        }
    }

    /// `λ ∫ K φ + q`.
    fn apply(&self, phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| {
                (0..self.nodes)
                    .map(|k| {
                        let row = tri(k);
                        let integral: f64 = (0..self.dim)
                            .map(|j| {
                                let b = &self.blocks[i * self.dim + j][row..row + k + 1];
                                b.iter().zip(&phi[j][..=k]).map(|(w, p)| w * p).sum::<f64>()
                            })
                            .sum();
                        self.lambda * integral + self.free[i][k]
                    })
                    .collect()
            })
            .collect()
    }
}

fn weighted_diff(a: &[Vec<f64>], b: &[Vec<f64>], decay: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(a, b)| {
            a.iter()
                .zip(b)
                .zip(decay)
                .map(|((x, y), w)| w * (x - y).abs())
        })
        .fold(0.0, f64::max)
}

fn sup_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Successive approximations `φ_{s+1} = λ ∫ K φ_s + q` from `φ_0 = 0`, stopping at
/// the first iterate whose discrete equation residual is within `config.tol`.
pub fn solve_picard(
    problem: &VolterraProblem,
    config: &SolverConfig,
) -> Result<VolterraSolution, VolterraError> {
    config.validate()?;
    let grid = problem.grid(config.nodes)?;
    let op = Discretized::new(problem, &grid);
    let mut phi = vec![vec![0.0; grid.len()]; problem.dim];
    let mut history = Vec::new();
    let mut weighted = Vec::new();
    for iterations in 0..=config.max_iter {
        let next = op.apply(&phi);
        // Residual of the current iterate is its distance to the next one.
        let residual = sup_diff(&phi, &next);
        history.push(residual);
        weighted.push(weighted_diff(&phi, &next, &op.decay));
        if residual <= config.tol {
            return Ok(VolterraSolution {
                grid,
                values: phi,
                iterations,
                residual,
                residual_history: history,
                weighted_residual_history: weighted,
            });
        }
        if !residual.is_finite() {
            return Err(VolterraError::NotConverged {
                iterations,
                residual,
                last: phi,
            });
        }
        phi = next;
    }
    Err(VolterraError::NotConverged {
        iterations: config.max_iter,
        residual: *history.last().unwrap_or(&f64::INFINITY),
        last: phi,
    })
}

/// Sup-norm of `φ - λ ∫ K φ - q` over all nodes and components, with the solver's
/// quadrature. `candidate[i][k]` is component `i` at node `k` of `grid`.
pub fn residual(
    problem: &VolterraProblem,
    candidate: &[Vec<f64>],
    grid: &Grid,
) -> Result<f64, VolterraError> {
    let cols = candidate.first().map_or(0, Vec::len);
    if candidate.len() != problem.dim || candidate.iter().any(|c| c.len() != grid.len()) {
        return Err(VolterraError::ShapeMismatch {
            got: (candidate.len(), cols),
            expected: (problem.dim, grid.len()),
        });
    }
    let op = Discretized::new(problem, grid);
    Ok(sup_diff(candidate, &op.apply(candidate)))
}
