//! Systems of Fredholm integral equations of the second kind on `[0, 1]`,
//!
//! ```text
//! φ_i(t) = λ Σ_j ∫₀¹ k_ij(t, h) φ_j(h) dh + q_i(t),
//! ```
//!
//! discretized by the Nyström method with the composite trapezoid rule.
//!
//! Kernels may jump across the diagonal `h = t`. A kernel callable is evaluated on
//! the `h <= t` branch at the diagonal node. When the problem also declares the jump
//! `k(t, t+) - k(t, t-)` of the diagonal blocks, the quadrature at the diagonal
//! node is split into its left and right halves, each taking its own one-sided
//! value; this keeps the rule second-order for piecewise-smooth kernels.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

use crate::grid::{Grid, GridError};

pub type Kernel = Arc<dyn Fn(usize, usize, f64, f64) -> f64 + Send + Sync>;
pub type FreeTerm = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;
/// Jump `k_ii(t, t+) - k_ii(t, t-)` of diagonal block `i` at abscissa `t`.
pub type DiagonalJump = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// Relative size below which an eigenvalue of the discretized operator is treated
/// as zero (no finite characteristic number).
const NULL_EIGENVALUE: f64 = 1e-9;
const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FredholmError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(
        "critical regime: λ = {lambda} {}; the homogeneous equation has (nearly) nontrivial \
         solutions, so the solution is not reliably determined (condition estimate {condition:.3e})",
        describe_nearest(.nearest, .relative_gap)
    )]
    Critical {
        lambda: f64,
        nearest: Option<Complex<f64>>,
        relative_gap: Option<f64>,
        condition: f64,
    },
    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    EigenNotConverged { iterations: usize },
    #[error("free term has shape {got:?}, resolvent expects {expected:?}")]
    GridMismatch {
        got: (usize, usize),
        expected: (usize, usize),
    },
}

fn describe_nearest(nearest: &Option<Complex<f64>>, gap: &Option<f64>) -> String {
    match (nearest, gap) {
        (Some(z), Some(g)) if z.im == 0.0 => {
            format!(
                "lies within {:.3}% of characteristic number {}",
                100.0 * g,
                z.re
            )
        }
        (Some(z), Some(g)) => format!(
            "lies within {:.3}% of characteristic number {}{:+}i",
            100.0 * g,
            z.re,
            z.im
        ),
        _ => "makes the discretized system singular".to_string(),
    }
}

#[derive(Clone)]
pub struct FredholmProblem {
    dim: usize,
    lambda: f64,
    kernel: Kernel,
    free_term: FreeTerm,
    jump: Option<DiagonalJump>,
}

impl fmt::Debug for FredholmProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FredholmProblem")
            .field("dim", &self.dim)
            .field("lambda", &self.lambda)
            .field("diagonal_jump", &self.jump.is_some())
            .finish_non_exhaustive()
    }
}

impl FredholmProblem {
    /// A problem with `λ = 1` and a kernel without declared diagonal jump.
    pub fn new<K, Q>(dim: usize, kernel: K, free_term: Q) -> Result<Self, FredholmError>
    where
        K: Fn(usize, usize, f64, f64) -> f64 + Send + Sync + 'static,
        Q: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(FredholmError::InvalidProblem(
                "dimension must be >= 1".into(),
            ));
        }
        Ok(Self {
            dim,
            lambda: 1.0,
            kernel: Arc::new(kernel),
            free_term: Arc::new(free_term),
            jump: None,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_diagonal_jump<J>(mut self, jump: J) -> Self
    where
        J: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        self.jump = Some(Arc::new(jump));
        self
    }

    /// Same kernel, different free term.
    pub fn with_free_term<Q>(&self, free_term: Q) -> Self
    where
        Q: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            free_term: Arc::new(free_term),
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
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

    pub fn diagonal_jump(&self, i: usize, t: f64) -> f64 {
        self.jump.as_ref().map_or(0.0, |j| j(i, t))
    }

    /// Free term sampled on `grid`, component-major.
    pub fn sample_free_term(&self, grid: &Grid) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| {
                grid.points()
                    .iter()
                    .map(|&t| self.free_term(i, t))
                    .collect()
            })
            .collect()
    }

    pub fn discretize(&self, nodes: usize) -> Result<DiscretizedOperator, FredholmError> {
        let grid = Grid::unit(nodes)?;
        Ok(DiscretizedOperator::assemble(
            self.dim,
            &grid,
            |i, k, j, l| self.kernel(i, j, grid.node(k), grid.node(l)),
            |i, k| self.diagonal_jump(i, grid.node(k)),
        ))
    }
}

/// A position on the stacked domain `[0, dim]`: abscissa `x` taken as a point of
/// the closed panel `[panel, panel + 1]`. Interior panel ends exist twice, once per
/// adjacent panel, because the stacked kernel is discontinuous there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelPoint {
    pub panel: usize,
    pub x: f64,
}

impl PanelPoint {
    pub fn local(&self) -> f64 {
        self.x - self.panel as f64
    }
}

pub type StackedKernel = Arc<dyn Fn(PanelPoint, PanelPoint) -> f64 + Send + Sync>;
pub type StackedFreeTerm = Arc<dyn Fn(PanelPoint) -> f64 + Send + Sync>;
pub type StackedJump = Arc<dyn Fn(PanelPoint) -> f64 + Send + Sync>;

/// Scalar Fredholm equation `Φ(t) = λ ∫₀^L K(t, h) Φ(h) dh + Q(t)` on `[0, L]`,
/// `L = panels`, whose kernel is smooth on each unit panel square.
#[derive(Clone)]
pub struct StackedProblem {
    panels: usize,
    lambda: f64,
    kernel: StackedKernel,
    free_term: StackedFreeTerm,
    jump: Option<StackedJump>,
}

impl fmt::Debug for StackedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StackedProblem")
            .field("domain", &(0.0, self.panels as f64))
            .field("lambda", &self.lambda)
            .finish_non_exhaustive()
    }
}

impl StackedProblem {
    pub fn domain_length(&self) -> f64 {
        self.panels as f64
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kernel(&self, t: PanelPoint, h: PanelPoint) -> f64 {
        (self.kernel)(t, h)
    }

    pub fn free_term(&self, t: PanelPoint) -> f64 {
        (self.free_term)(t)
    }

    /// `nodes` trapezoid nodes on every panel.
    pub fn discretize(&self, nodes: usize) -> Result<DiscretizedOperator, FredholmError> {
        let grid = Grid::unit(nodes)?;
        let at = |panel: usize, k: usize| PanelPoint {
            panel,
            x: panel as f64 + grid.node(k),
        };
        Ok(DiscretizedOperator::assemble(
            self.panels,
            &grid,
            |p, k, q, l| self.kernel(at(p, k), at(q, l)),
            |p, k| self.jump.as_ref().map_or(0.0, |j| j(at(p, k))),
        ))
    }

    /// Free term at the discretization nodes, one vector per panel.
    pub fn sample_free_term(&self, nodes: usize) -> Result<Vec<Vec<f64>>, FredholmError> {
        let grid = Grid::unit(nodes)?;
        Ok((0..self.panels)
            .map(|p| {
                grid.points()
                    .iter()
                    .map(|&t| {
                        self.free_term(PanelPoint {
                            panel: p,
                            x: p as f64 + t,
                        })
                    })
                    .collect()
            })
            .collect())
    }
}

/// Reduction of a system to one equation on `[0, dim]`:
/// `Φ(t) = φ_i(t - i + 1)`, `K(t, h) = k_ij(t - i + 1, h - j + 1)`,
/// `Q(t) = q_i(t - i + 1)` with 1-based `i`, `j`.
pub fn stack_system(problem: &FredholmProblem) -> StackedProblem {
    let kp = problem.clone();
    let qp = problem.clone();
    let jump = problem
        .jump
        .clone()
        .map(|j| -> StackedJump { Arc::new(move |t: PanelPoint| j(t.panel, t.local())) });
    StackedProblem {
        panels: problem.dim,
        lambda: problem.lambda,
        kernel: Arc::new(move |t, h| kp.kernel(t.panel, h.panel, t.local(), h.local())),
        free_term: Arc::new(move |t| qp.free_term(t.panel, t.local())),
        jump,
    }
}

/// Induced 1-norm (largest absolute column sum).
fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Quadrature-weighted kernel matrix `M`, so that the discrete equation reads
/// `(I - λ M) Φ = Q` with `Φ` ordered component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedOperator {
    pub grid: Grid,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

impl DiscretizedOperator {
    fn assemble(
        dim: usize,
        grid: &Grid,
        kernel: impl Fn(usize, usize, usize, usize) -> f64,
        jump: impl Fn(usize, usize) -> f64,
    ) -> Self {
        let n = grid.len();
        let weights = grid.trapezoid_weights();
        let half = 0.5 * grid.step();
        let mut matrix = DMatrix::zeros(dim * n, dim * n);
        for i in 0..dim {
            for k in 0..n {
                for j in 0..dim {
                    for l in 0..n {
                        let mut v = weights[l] * kernel(i, k, j, l);
                        if i == j && k == l && k + 1 < n {
                            // right half-interval takes the h > t limit
                            v += half * jump(i, k);
                        }
                        matrix[(i * n + k, j * n + l)] = v;
                    }
                }
            }
        }
        Self {
            grid: *grid,
            dim,
            weights,
            matrix,
        }
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    fn system(&self, lambda: f64) -> DMatrix<f64> {
        DMatrix::identity(self.matrix.nrows(), self.matrix.ncols()) - &self.matrix * lambda
    }

    /// Eigenvalues of `M` (all of them, unsorted).
    pub fn eigenvalues(&self) -> Result<Vec<Complex<f64>>, FredholmError> {
        let schur =
            nalgebra::linalg::Schur::try_new(self.matrix.clone(), f64::EPSILON, SCHUR_MAX_ITER)
                .ok_or(FredholmError::EigenNotConverged {
                    iterations: SCHUR_MAX_ITER,
                })?;
        Ok(schur.complex_eigenvalues().iter().copied().collect())
    }

    /// Finite characteristic numbers `1/μ` for the non-null eigenvalues `μ`,
    /// ascending by magnitude.
    pub fn characteristic_numbers(&self) -> Result<Vec<Complex<f64>>, FredholmError> {
        let scale = norm1(&self.matrix);
        let mut out: Vec<Complex<f64>> = self
            .eigenvalues()?
            .into_iter()
            .filter(|mu| mu.norm() > NULL_EIGENVALUE * scale)
            .map(|mu| Complex::new(1.0, 0.0) / mu)
            .map(|z| {
                if z.im.abs() <= 1e-12 * z.norm() {
                    Complex::new(z.re, 0.0)
                } else {
                    z
                }
            })
            .collect();
        out.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.im.total_cmp(&b.im)));
        Ok(out)
    }

    fn flatten(&self, values: &[Vec<f64>]) -> Result<DVector<f64>, FredholmError> {
        let n = self.nodes();
        if values.len() != self.dim || values.iter().any(|v| v.len() != n) {
            return Err(FredholmError::GridMismatch {
                got: (values.len(), values.first().map_or(0, Vec::len)),
                expected: (self.dim, n),
            });
        }
        Ok(DVector::from_iterator(
            self.dim * n,
            values.iter().flatten().copied(),
        ))
    }

    fn split(&self, v: &DVector<f64>) -> Vec<Vec<f64>> {
        v.as_slice()
            .chunks(self.nodes())
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Sup-norm of `Φ - λ M Φ - Q`.
    pub fn residual(
        &self,
        lambda: f64,
        values: &[Vec<f64>],
        free: &[Vec<f64>],
    ) -> Result<f64, FredholmError> {
        let phi = self.flatten(values)?;
        let q = self.flatten(free)?;
        Ok((&phi - &self.matrix * &phi * lambda - q).amax())
    }
}

/// Thresholds for refusing a solve near a characteristic number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalityGuard {
    /// Largest accepted 1-norm condition number of `I - λ M`.
    pub max_condition: f64,
    /// Smallest accepted `|λ - λ_h|/|λ_h|` over characteristic numbers `λ_h`.
    pub min_relative_gap: f64,
}

impl Default for CriticalityGuard {
    fn default() -> Self {
        Self {
            max_condition: 1e8,
            min_relative_gap: 1e-3,
        }
    }
}

/// LU-factored `I - λ M` that passed the criticality guard.
struct Factored {
    inverse: DMatrix<f64>,
    condition: f64,
}

fn factor(
    op: &DiscretizedOperator,
    lambda: f64,
    guard: &CriticalityGuard,
) -> Result<Factored, FredholmError> {
    let b = op.system(lambda);
    let critical = |condition: f64| -> FredholmError {
        let nearest = op.characteristic_numbers().ok().and_then(|numbers| {
            numbers
                .into_iter()
                .map(|z| (z, ((z - lambda) / z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
        });
        FredholmError::Critical {
            lambda,
            nearest: nearest.map(|n| n.0),
            relative_gap: nearest.map(|n| n.1),
            condition,
        }
    };
    let Some(inverse) = b.clone().lu().try_inverse() else {
        return Err(critical(f64::INFINITY));
    };
    let inv_norm = norm1(&inverse);
    let condition = norm1(&b) * inv_norm;
    if !(condition <= guard.max_condition) {
        return Err(critical(condition));
    }
    // |λ μ - 1| is an eigenvalue of I - λM, hence bounded below by its smallest
    // singular value, and σ_min >= 1/(sqrt(n)·‖B⁻¹‖₁). Only when that bound cannot
    // rule a near-characteristic λ out is the spectrum computed.
    let sigma_bound = 1.0 / ((b.nrows() as f64).sqrt() * inv_norm);
    if sigma_bound < guard.min_relative_gap {
        let closest = op
            .characteristic_numbers()?
            .into_iter()
            .map(|z| (z, ((z - lambda) / z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((z, gap)) = closest {
            if gap < guard.min_relative_gap {
                return Err(FredholmError::Critical {
                    lambda,
                    nearest: Some(z),
                    relative_gap: Some(gap),
                    condition,
                });
            }
        }
    }
    Ok(Factored { inverse, condition })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FredholmSolution {
    pub grid: Grid,
    /// `values[i][k] = φ_i(t_k)`.
    pub values: Vec<Vec<f64>>,
    pub condition: f64,
}

/// Nyström solve with the default [`CriticalityGuard`].
pub fn nystrom_solve(
    problem: &FredholmProblem,
    nodes: usize,
) -> Result<FredholmSolution, FredholmError> {
    nystrom_solve_with(problem, nodes, &CriticalityGuard::default())
}

pub fn nystrom_solve_with(
    problem: &FredholmProblem,
    nodes: usize,
    guard: &CriticalityGuard,
) -> Result<FredholmSolution, FredholmError> {
    let op = problem.discretize(nodes)?;
    let free = problem.sample_free_term(&op.grid);
    solve_discretized(&op, problem.lambda, &free, guard)
}

/// Nyström solve of the stacked scalar equation; the result has one vector per panel.
pub fn nystrom_solve_stacked(
    problem: &StackedProblem,
    nodes: usize,
    guard: &CriticalityGuard,
) -> Result<FredholmSolution, FredholmError> {
    let op = problem.discretize(nodes)?;
    let free = problem.sample_free_term(nodes)?;
    solve_discretized(&op, problem.lambda, &free, guard)
}

/// Solves `(I - λ M) Φ = Q` for an already discretized operator.
pub fn solve_discretized(
    op: &DiscretizedOperator,
    lambda: f64,
    free: &[Vec<f64>],
    guard: &CriticalityGuard,
) -> Result<FredholmSolution, FredholmError> {
    let q = op.flatten(free)?;
    let f = factor(op, lambda, guard)?;
    let phi = &f.inverse * q;
    Ok(FredholmSolution {
        grid: op.grid,
        values: op.split(&phi),
        condition: f.condition,
    })
}

/// Characteristic numbers of the discretized kernel, at most `count`, ascending by
/// magnitude. A null kernel has none.
pub fn characteristic_numbers(
    problem: &FredholmProblem,
    nodes: usize,
    count: usize,
) -> Result<Vec<Complex<f64>>, FredholmError> {
    if count == 0 {
        return Err(FredholmError::InvalidProblem("count must be >= 1".into()));
    }
    let mut numbers = problem.discretize(nodes)?.characteristic_numbers()?;
    numbers.truncate(count);
    Ok(numbers)
}

/// Discrete resolvent: `Φ = Q + λ R_w Q` with the quadrature-weighted resolvent
/// matrix `R_w = M (I - λ M)⁻¹`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolvent {
    pub grid: Grid,
    pub dim: usize,
    pub lambda: f64,
    weights: Vec<f64>,
    weighted: DMatrix<f64>,
    pub condition: f64,
}

impl Resolvent {
    /// `R(t_k, h_l)` for components `i`, `j`, i.e. the weighted matrix divided by the
    /// quadrature weight of node `l`.
    pub fn kernel_value(&self, i: usize, k: usize, j: usize, l: usize) -> f64 {
        let n = self.grid.len();
        self.weighted[(i * n + k, j * n + l)] / self.weights[l]
    }

    pub fn weighted_matrix(&self) -> &DMatrix<f64> {
        &self.weighted
    }
}

pub fn build_resolvent(
    problem: &FredholmProblem,
    nodes: usize,
    lambda: f64,
) -> Result<Resolvent, FredholmError> {
    build_resolvent_with(problem, nodes, lambda, &CriticalityGuard::default())
}

pub fn build_resolvent_with(
    problem: &FredholmProblem,
    nodes: usize,
    lambda: f64,
    guard: &CriticalityGuard,
) -> Result<Resolvent, FredholmError> {
    let op = problem.discretize(nodes)?;
    let f = factor(&op, lambda, guard)?;
    Ok(Resolvent {
        grid: op.grid,
        dim: op.dim,
        lambda,
        weighted: &op.matrix * f.inverse,
        weights: op.weights,
        condition: f.condition,
    })
}

/// `Φ = Q + λ R_w Q`: one matrix-vector product.
pub fn apply_resolvent(
    resolvent: &Resolvent,
    free: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, FredholmError> {
    let n = resolvent.grid.len();
    if free.len() != resolvent.dim || free.iter().any(|v| v.len() != n) {
        return Err(FredholmError::GridMismatch {
            got: (free.len(), free.first().map_or(0, Vec::len)),
            expected: (resolvent.dim, n),
        });
    }
    let q = DVector::from_iterator(resolvent.dim * n, free.iter().flatten().copied());
    let phi = &q + &resolvent.weighted * &q * resolvent.lambda;
    Ok(phi.as_slice().chunks(n).map(<[f64]>::to_vec).collect())
}
