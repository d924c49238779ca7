//! Balance model of interacting participants.
//!
//! State `x(t)` on the unit interval obeys `x'' + λx' + λx = λA(t)x + λc(t)`. The
//! static balance `x = Ax + c` is its equilibrium. Dynamics are solved through the
//! accelerations `φ = x''`: a Volterra system for initial data, a Fredholm system for
//! initial plus terminal data.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::fredholm::{self, CriticalityGuard, FredholmError, FredholmProblem};
use crate::graph;
use crate::grid::{self, Grid, GridError};
use crate::volterra::{self, SolverConfig, VolterraError, VolterraProblem};

pub const DEFAULT_LAMBDA: f64 = 2.0;
/// Entries at or below this magnitude are not edges of the interaction graph.
pub const STRUCTURAL_ZERO: f64 = 1e-12;
/// `|det(I - A)|` below this fraction of its Hadamard bound is singular.
pub const SINGULAR_DET: f64 = 1e-10;
pub const ILL_CONDITIONED: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BalanceError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("missing {0}")]
    MissingData(&'static str),
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("static iteration stopped after {iterations} iterations with residual {residual:.3e}")]
    StaticNotConverged {
        iterations: usize,
        residual: f64,
        residual_history: Vec<f64>,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Volterra(#[from] VolterraError),
    #[error(
        "{0}. The forecast is not meaningful for this λ and A(t); move λ away from the \
         characteristic numbers or change the interaction coefficients"
    )]
    Critical(FredholmError),
    #[error(transparent)]
    Fredholm(FredholmError),
}

impl From<FredholmError> for BalanceError {
    fn from(e: FredholmError) -> Self {
        match e {
            FredholmError::Critical { .. } => BalanceError::Critical(e),
            other => BalanceError::Fredholm(other),
        }
    }
}

/// Linear interpolation position of `t` among `count` uniform samples on `[0, 1]`.
fn locate(count: usize, t: f64) -> (usize, f64) {
    if count == 1 {
        return (0, 0.0);
    }
    let s = (t.clamp(0.0, 1.0) * (count - 1) as f64).min((count - 1) as f64);
    let k = (s.floor() as usize).min(count - 2);
    (k, s - k as f64)
}

/// `A(t)`: one sample (constant) or samples at uniform nodes of `[0, 1]`, linear
/// in between.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPath {
    samples: Vec<DMatrix<f64>>,
}

impl MatrixPath {
    pub fn constant(a: DMatrix<f64>) -> Result<Self, BalanceError> {
        Self::sampled(vec![a])
    }

    pub fn sampled(samples: Vec<DMatrix<f64>>) -> Result<Self, BalanceError> {
        let Some(first) = samples.first() else {
            return Err(BalanceError::Dimension(
                "A needs at least one sample".into(),
            ));
        };
        let n = first.nrows();
        if n == 0 || samples.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(BalanceError::Dimension(format!(
                "every A sample must be square of the same size {n} >= 1"
            )));
        }
        if samples.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(BalanceError::Dimension("A has non-finite entries".into()));
        }
        Ok(Self { samples })
    }

    pub fn dim(&self) -> usize {
        self.samples[0].nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[DMatrix<f64>] {
        &self.samples
    }

    pub fn is_constant(&self) -> bool {
        self.samples.len() == 1
    }

    pub fn entry(&self, i: usize, j: usize, t: f64) -> f64 {
        let (k, w) = locate(self.samples.len(), t);
        if w == 0.0 {
            return self.samples[k][(i, j)];
        }
        (1.0 - w) * self.samples[k][(i, j)] + w * self.samples[k + 1][(i, j)]
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        let (k, w) = locate(self.samples.len(), t);
        if w == 0.0 {
            return self.samples[k].clone();
        }
        &self.samples[k] * (1.0 - w) + &self.samples[k + 1] * w
    }
}

/// `c(t)`, same representation as [`MatrixPath`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPath {
    samples: Vec<DVector<f64>>,
}

impl VectorPath {
    pub fn constant(c: DVector<f64>) -> Result<Self, BalanceError> {
        Self::sampled(vec![c])
    }

    pub fn sampled(samples: Vec<DVector<f64>>) -> Result<Self, BalanceError> {
        let Some(first) = samples.first() else {
            return Err(BalanceError::Dimension(
                "c needs at least one sample".into(),
            ));
        };
        let n = first.len();
        if n == 0 || samples.iter().any(|v| v.len() != n) {
            return Err(BalanceError::Dimension(format!(
                "every c sample must have the same length {n} >= 1"
            )));
        }
        if samples.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(BalanceError::Dimension("c has non-finite entries".into()));
        }
        Ok(Self { samples })
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    pub fn entry(&self, i: usize, t: f64) -> f64 {
        let (k, w) = locate(self.samples.len(), t);
        if w == 0.0 {
            return self.samples[k][i];
        }
        (1.0 - w) * self.samples[k][i] + w * self.samples[k + 1][i]
    }

    pub fn at(&self, t: f64) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.entry(i, t))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * factor).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceSystem {
    a: Arc<MatrixPath>,
    c: Arc<VectorPath>,
    p: Option<DVector<f64>>,
    p_prime: Option<DVector<f64>>,
    r: Option<DVector<f64>>,
    lambda: f64,
}

impl BalanceSystem {
    /// A constant or sampled `A` may be paired with a constant `c` or one sampled on
    /// the same nodes, and vice versa.
    pub fn new(a: MatrixPath, c: VectorPath) -> Result<Self, BalanceError> {
        if a.dim() != c.dim() {
            return Err(BalanceError::Dimension(format!(
                "A is {0}x{0} but c has length {1}",
                a.dim(),
                c.dim()
            )));
        }
        let (sa, sc) = (a.sample_count(), c.sample_count());
        if sa > 1 && sc > 1 && sa != sc {
            return Err(BalanceError::Dimension(format!(
                "A has {sa} time samples but c has {sc}; sample grids must match"
            )));
        }
        Ok(Self {
            a: Arc::new(a),
            c: Arc::new(c),
            p: None,
            p_prime: None,
            r: None,
            lambda: DEFAULT_LAMBDA,
        })
    }

    pub fn constant(a: DMatrix<f64>, c: DVector<f64>) -> Result<Self, BalanceError> {
        Self::new(MatrixPath::constant(a)?, VectorPath::constant(c)?)
    }

    fn check_len(&self, v: &DVector<f64>, what: &str) -> Result<(), BalanceError> {
        if v.len() != self.n() {
            return Err(BalanceError::Dimension(format!(
                "{what} has length {} but there are {} participants",
                v.len(),
                self.n()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(BalanceError::Dimension(format!(
                "{what} has non-finite entries"
            )));
        }
        Ok(())
    }

    pub fn with_initial(
        mut self,
        p: DVector<f64>,
        p_prime: DVector<f64>,
    ) -> Result<Self, BalanceError> {
        self.check_len(&p, "p")?;
        self.check_len(&p_prime, "p_prime")?;
        self.p = Some(p);
        self.p_prime = Some(p_prime);
        Ok(self)
    }

    /// Only `x(0)`, for forecasting.
    pub fn with_start(mut self, p: DVector<f64>) -> Result<Self, BalanceError> {
        self.check_len(&p, "p")?;
        self.p = Some(p);
        Ok(self)
    }

    pub fn with_terminal(mut self, r: DVector<f64>) -> Result<Self, BalanceError> {
        self.check_len(&r, "r")?;
        self.r = Some(r);
        Ok(self)
    }

    pub fn with_cost(mut self, c: VectorPath) -> Result<Self, BalanceError> {
        if c.dim() != self.n() {
            return Err(BalanceError::Dimension(format!(
                "c has length {} but there are {} participants",
                c.dim(),
                self.n()
            )));
        }
        let (sa, sc) = (self.a.sample_count(), c.sample_count());
        if sa > 1 && sc > 1 && sa != sc {
            return Err(BalanceError::Dimension(format!(
                "A has {sa} time samples but c has {sc}; sample grids must match"
            )));
        }
        self.c = Arc::new(c);
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self, BalanceError> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(BalanceError::InvalidOption(format!(
                "lambda must be finite and > 0 (got {lambda})"
            )));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.a.dim()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn a(&self) -> &MatrixPath {
        &self.a
    }

    pub fn c(&self) -> &VectorPath {
        &self.c
    }

    pub fn p(&self) -> Option<&DVector<f64>> {
        self.p.as_ref()
    }

    pub fn p_prime(&self) -> Option<&DVector<f64>> {
        self.p_prime.as_ref()
    }

    pub fn r(&self) -> Option<&DVector<f64>> {
        self.r.as_ref()
    }

    /// Sup-norm of `x'' + λx' + λx - λAx - λc` over the trajectory nodes.
    pub fn ode_residual(&self, tr: &BalanceTrajectory) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for (k, &t) in tr.t.iter().enumerate() {
            for i in 0..n {
                let ax: f64 = (0..n).map(|j| self.a.entry(i, j, t) * tr.state[j][k]).sum();
                let r = tr.acceleration[i][k]
                    + self.lambda * (tr.velocity[i][k] + tr.state[i][k] - ax - self.c.entry(i, t));
                worst = worst.max(r.abs());
            }
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// Static balance

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation for the normal-equations iteration; `1/‖BᵀB‖∞` when absent.
    pub alpha: Option<f64>,
    pub keep_iterates: bool,
}

impl Default for StaticOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
            alpha: None,
            keep_iterates: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StaticMethod {
    FixedPoint,
    NormalEquations { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticSolution {
    pub x: DVector<f64>,
    pub method: StaticMethod,
    pub iterations: usize,
    /// `‖(I - A)x - c‖₂` of the returned iterate.
    pub residual: f64,
    /// Same residual for every iterate, starting at `x₀ = 0`.
    pub residual_history: Vec<f64>,
    /// Every iterate from `x₀ = 0` when requested.
    pub iterates: Vec<DVector<f64>>,
}

/// Max absolute row sum.
pub fn row_sum_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max absolute column sum.
pub fn column_sum_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `x = Ax + c`: plain iteration `x ← Ax + c` when `‖A‖∞ < 1`, otherwise the
/// descent `x ← x - αBᵀ(Bx - c)` with `B = I - A`, which converges to the
/// least-squares solution from `x₀ = 0`.
pub fn solve_static(
    a: &DMatrix<f64>,
    c: &DVector<f64>,
    options: &StaticOptions,
) -> Result<StaticSolution, BalanceError> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(BalanceError::Dimension(format!(
            "A must be square and non-empty (got {}x{})",
            a.nrows(),
            a.ncols()
        )));
    }
    if c.len() != n {
        return Err(BalanceError::Dimension(format!(
            "c has length {} but A is {n}x{n}",
            c.len()
        )));
    }
    if !(options.tol > 0.0) || options.max_iter == 0 {
        return Err(BalanceError::InvalidOption(
            "tol must be > 0 and max_iter >= 1".into(),
        ));
    }
    let b = DMatrix::identity(n, n) - a;
    let resid = |x: &DVector<f64>| (&b * x - c).norm();
    let mut x = DVector::zeros(n);
    let mut history = vec![resid(&x)];
    let mut iterates = Vec::new();
    if options.keep_iterates {
        iterates.push(x.clone());
    }

    if row_sum_norm(a) < 1.0 {
        let goal = options.tol * c.amax().max(1.0);
        for it in 1..=options.max_iter {
            x = a * &x + c;
            let r = resid(&x);
            history.push(r);
            if options.keep_iterates {
                iterates.push(x.clone());
            }
            if (&b * &x - c).amax() <= goal {
                return Ok(StaticSolution {
                    x,
                    method: StaticMethod::FixedPoint,
                    iterations: it,
                    residual: r,
                    residual_history: history,
                    iterates,
                });
            }
        }
        return Err(BalanceError::StaticNotConverged {
            iterations: options.max_iter,
            residual: *history.last().unwrap(),
            residual_history: history,
        });
    }

    let btb = b.transpose() * &b;
    let bound = 2.0 / row_sum_norm(&btb);
    let alpha = match options.alpha {
        None => 1.0 / row_sum_norm(&btb),
        Some(al) if al > 0.0 && al < bound => al,
        Some(al) => {
            return Err(BalanceError::InvalidOption(format!(
                "alpha must lie in (0, {bound:.6e}) (got {al})"
            )))
        }
    };
    let btc = b.transpose() * c;
    let goal = options.tol * btc.amax().max(1.0);
    for it in 1..=options.max_iter {
        let grad = &btb * &x - &btc;
        x -= grad * alpha;
        let r = resid(&x);
        history.push(r);
        if options.keep_iterates {
            iterates.push(x.clone());
        }
        if (&btb * &x - &btc).amax() <= goal {
            return Ok(StaticSolution {
                x,
                method: StaticMethod::NormalEquations { alpha },
                iterations: it,
                residual: r,
                residual_history: history,
                iterates,
            });
        }
    }
    Err(BalanceError::StaticNotConverged {
        iterations: options.max_iter,
        residual: *history.last().unwrap(),
        residual_history: history,
    })
}

// ---------------------------------------------------------------------------
// Dynamics

/// Node values, indexed `[participant][node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceTrajectory {
    pub t: Vec<f64>,
    pub state: Vec<Vec<f64>>,
    pub velocity: Vec<Vec<f64>>,
    pub acceleration: Vec<Vec<f64>>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStats {
    Picard {
        iterations: usize,
        residual: f64,
        residual_history: Vec<f64>,
        weighted_residual_history: Vec<f64>,
    },
    Nystrom {
        condition: f64,
    },
}

impl BalanceTrajectory {
    /// Row `k` as `x_1..x_n`.
    pub fn state_at(&self, k: usize) -> Vec<f64> {
        self.state.iter().map(|x| x[k]).collect()
    }

    pub fn terminal(&self) -> Vec<f64> {
        self.state_at(self.t.len() - 1)
    }
}

fn initial_data(system: &BalanceSystem) -> Result<(DVector<f64>, DVector<f64>), BalanceError> {
    let p = system
        .p
        .clone()
        .ok_or(BalanceError::MissingData("initial values p"))?;
    let pp = system
        .p_prime
        .clone()
        .ok_or(BalanceError::MissingData("initial derivatives p_prime"))?;
    Ok((p, pp))
}

/// Volterra system for the accelerations given `x(0) = p`, `x'(0) = p'`.
pub fn assemble_ivp(system: &BalanceSystem) -> Result<VolterraProblem, BalanceError> {
    let (p, pp) = initial_data(system)?;
    let n = system.n();
    let lambda = system.lambda;
    let a = Arc::clone(&system.a);
    let kernel = move |i: usize, j: usize, t: f64, h: f64| {
        let aij = a.entry(i, j, t);
        if i == j {
            (aij - 1.0) * (t - h) - 1.0
        } else {
            aij * (t - h)
        }
    };
    let a = Arc::clone(&system.a);
    let c = Arc::clone(&system.c);
    let free = move |i: usize, t: f64| {
        let ax: f64 = (0..n).map(|j| a.entry(i, j, t) * (pp[j] * t + p[j])).sum();
        lambda * (ax - pp[i] * (1.0 + t) - p[i] + c.entry(i, t))
    };
    Ok(VolterraProblem::new(n, 0.0, 1.0, kernel, free)?.with_lambda(lambda))
}

/// Integrates the initial-value problem on `[0, 1]`.
pub fn simulate_ivp(
    system: &BalanceSystem,
    config: &SolverConfig,
) -> Result<BalanceTrajectory, BalanceError> {
    let problem = assemble_ivp(system)?;
    let (p, pp) = initial_data(system)?;
    let sol = volterra::solve_picard(&problem, config)?;
    let g = sol.grid;
    let step = g.step();
    let t = g.points();
    let mut state = Vec::with_capacity(system.n());
    let mut velocity = Vec::with_capacity(system.n());
    for (i, phi) in sol.values.iter().enumerate() {
        let moment = grid::cumulative_moment(&g, phi);
        state.push(
            moment
                .iter()
                .zip(&t)
                .map(|(m, &tk)| m + pp[i] * tk + p[i])
                .collect(),
        );
        velocity.push(
            grid::cumulative_trapezoid(phi, step)
                .iter()
                .map(|v| v + pp[i])
                .collect(),
        );
    }
    Ok(BalanceTrajectory {
        t,
        state,
        velocity,
        acceleration: sol.values,
        stats: SolveStats::Picard {
            iterations: sol.iterations,
            residual: sol.residual,
            residual_history: sol.residual_history,
            weighted_residual_history: sol.weighted_residual_history,
        },
    })
}

fn boundary_data(system: &BalanceSystem) -> Result<(DVector<f64>, DVector<f64>), BalanceError> {
    let p = system
        .p
        .clone()
        .ok_or(BalanceError::MissingData("initial values p"))?;
    let r = system
        .r
        .clone()
        .ok_or(BalanceError::MissingData("terminal values r"))?;
    Ok((p, r))
}

/// Fredholm system for the accelerations given `x(0) = p`, `x(1) = r`.
pub fn assemble_bvp(system: &BalanceSystem) -> Result<FredholmProblem, BalanceError> {
    let (p, r) = boundary_data(system)?;
    let n = system.n();
    let lambda = system.lambda;
    let a = Arc::clone(&system.a);
    let kernel = move |i: usize, j: usize, t: f64, h: f64| {
        let aij = a.entry(i, j, t);
        match (i == j, h <= t) {
            (false, true) => aij * (t - 1.0) * h,
            (false, false) => aij * t * (h - 1.0),
            (true, true) => h * ((aij - 1.0) * (t - 1.0) - 1.0),
            (true, false) => (1.0 - h) * (t + 1.0 - t * aij),
        }
    };
    let a = Arc::clone(&system.a);
    let c = Arc::clone(&system.c);
    let free = move |i: usize, t: f64| {
        let sum: f64 = (0..n)
            .map(|j| {
                let delta = if i == j { 1.0 } else { 0.0 };
                (a.entry(i, j, t) - delta) * ((r[j] - p[j]) * t + p[j])
            })
            .sum();
        lambda * (sum - r[i] + p[i] + c.entry(i, t))
    };
    Ok(FredholmProblem::new(n, kernel, free)?
        .with_lambda(lambda)
        .with_diagonal_jump(|_, _| 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BvpRoute {
    #[default]
    Direct,
    Stacked,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpConfig {
    pub nodes: usize,
    pub guard: CriticalityGuard,
    pub route: BvpRoute,
}

impl Default for BvpConfig {
    fn default() -> Self {
        Self {
            nodes: 201,
            guard: CriticalityGuard::default(),
            route: BvpRoute::Direct,
        }
    }
}

/// `x = ∫₀ᵗ(t-h)φ - t∫₀¹(1-h)φ + (r-p)t + p`, with the matching velocity.
fn reconstruct_bvp(
    g: &Grid,
    p: &DVector<f64>,
    r: &DVector<f64>,
    phi: Vec<Vec<f64>>,
    stats: SolveStats,
) -> BalanceTrajectory {
    let t = g.points();
    let step = g.step();
    let mut state = Vec::with_capacity(phi.len());
    let mut velocity = Vec::with_capacity(phi.len());
    for (i, f) in phi.iter().enumerate() {
        let weighted: Vec<f64> = f.iter().zip(&t).map(|(v, h)| (1.0 - h) * v).collect();
        let u = grid::trapezoid(&weighted, step);
        let slope = r[i] - p[i];
        let moment = grid::cumulative_moment(g, f);
        state.push(
            moment
                .iter()
                .zip(&t)
                .map(|(m, &tk)| m - tk * u + slope * tk + p[i])
                .collect(),
        );
        velocity.push(
            grid::cumulative_trapezoid(f, step)
                .iter()
                .map(|v| v - u + slope)
                .collect(),
        );
    }
    BalanceTrajectory {
        t,
        state,
        velocity,
        acceleration: phi,
        stats,
    }
}

/// Forecast between `x(0) = p` and `x(1) = r`.
pub fn forecast_bvp(
    system: &BalanceSystem,
    config: &BvpConfig,
) -> Result<BalanceTrajectory, BalanceError> {
    let problem = assemble_bvp(system)?;
    let (p, r) = boundary_data(system)?;
    let sol = match config.route {
        BvpRoute::Direct => fredholm::nystrom_solve_with(&problem, config.nodes, &config.guard)?,
        BvpRoute::Stacked => fredholm::nystrom_solve_stacked(
            &fredholm::stack_system(&problem),
            config.nodes,
            &config.guard,
        )?,
    };
    let g = Grid::unit(config.nodes)?;
    Ok(reconstruct_bvp(
        &g,
        &p,
        &r,
        sol.values,
        SolveStats::Nystrom {
            condition: sol.condition,
        },
    ))
}

/// Consecutive unit-interval forecasts through `terminals`, each started from the
/// previous terminal state and reusing the system's `A(t)` and `c(t)`. Interval `k`
/// covers `[k, k + 1]` in the returned time axis; shared endpoints appear once.
pub fn forecast_chain(
    system: &BalanceSystem,
    terminals: &[DVector<f64>],
    config: &BvpConfig,
) -> Result<BalanceTrajectory, BalanceError> {
    if terminals.is_empty() {
        return Err(BalanceError::InvalidOption(
            "at least one terminal state is required".into(),
        ));
    }
    let mut start = system
        .p
        .clone()
        .ok_or(BalanceError::MissingData("initial values p"))?;
    let mut out: Option<BalanceTrajectory> = None;
    let mut worst = 0.0_f64;
    for (k, r) in terminals.iter().enumerate() {
        let leg = system.clone().with_start(start)?.with_terminal(r.clone())?;
        let tr = forecast_bvp(&leg, config)?;
        if let SolveStats::Nystrom { condition } = tr.stats {
            worst = worst.max(condition);
        }
        start = DVector::from_vec(tr.terminal());
        let offset = k as f64;
        out = Some(match out {
            None => tr,
            Some(mut acc) => {
                acc.t.extend(tr.t[1..].iter().map(|t| t + offset));
                for i in 0..acc.state.len() {
                    acc.state[i].extend_from_slice(&tr.state[i][1..]);
                    acc.velocity[i].extend_from_slice(&tr.velocity[i][1..]);
                    acc.acceleration[i].extend_from_slice(&tr.acceleration[i][1..]);
                }
                acc
            }
        });
    }
    let mut tr = out.expect("non-empty chain");
    tr.stats = SolveStats::Nystrom { condition: worst };
    Ok(tr)
}

/// Override of the cost path and terminal values; `A(t)` and `p` stay fixed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Variation {
    pub c: Option<VectorPath>,
    pub c_scale: Option<f64>,
    pub r: Option<DVector<f64>>,
}

impl Variation {
    pub fn apply(&self, base: &BalanceSystem) -> Result<BalanceSystem, BalanceError> {
        let mut c = self.c.clone().unwrap_or_else(|| (*base.c).clone());
        if let Some(s) = self.c_scale {
            if !s.is_finite() {
                return Err(BalanceError::InvalidOption(format!(
                    "c_scale {s} is not finite"
                )));
            }
            c = c.scaled(s);
        }
        let mut sys = base.clone().with_cost(c)?;
        if let Some(r) = &self.r {
            sys = sys.with_terminal(r.clone())?;
        }
        Ok(sys)
    }
}

/// One forecast per variation from a single resolvent of the base system.
pub fn scenario_sweep(
    system: &BalanceSystem,
    variations: &[Variation],
    config: &BvpConfig,
) -> Result<Vec<BalanceTrajectory>, BalanceError> {
    if variations.is_empty() {
        return Ok(Vec::new());
    }
    let varied: Vec<BalanceSystem> = variations
        .iter()
        .map(|v| v.apply(system))
        .collect::<Result<_, _>>()?;
    let base = assemble_bvp(system)?;
    let resolvent =
        fredholm::build_resolvent_with(&base, config.nodes, system.lambda, &config.guard)?;
    let g = resolvent.grid;
    varied
        .iter()
        .map(|sys| {
            let problem = assemble_bvp(sys)?;
            let phi = fredholm::apply_resolvent(&resolvent, &problem.sample_free_term(&g))?;
            let (p, r) = boundary_data(sys)?;
            Ok(reconstruct_bvp(
                &g,
                &p,
                &r,
                phi,
                SolveStats::Nystrom {
                    condition: resolvent.condition,
                },
            ))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Diagnostics

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    WellPosed,
    WarnIllConditioned,
    WarnDecomposable,
    FailSingular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Warning {
    /// First node where `det(I - A)` is negligible.
    Singular {
        t: f64,
        det: f64,
    },
    /// Worst node.
    IllConditioned {
        t: f64,
        condition: f64,
    },
    Decomposable {
        components: Vec<Vec<usize>>,
    },
    /// First node with a row or column sum of `|A|` at or above one.
    NormNotBelowOne {
        t: f64,
        row_sum: f64,
        column_sum: f64,
    },
    /// First node with a negative entry.
    NegativeEntries {
        t: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub n_participants: usize,
    pub lambda: f64,
    pub t: Vec<f64>,
    pub row_sum_norm: Vec<f64>,
    pub column_sum_norm: Vec<f64>,
    pub det_i_minus_a: Vec<f64>,
    /// 1-norm condition of `I - A`; infinite when singular.
    pub condition_estimate: Vec<f64>,
    pub spectral_radius: Vec<f64>,
    pub nonnegative: Vec<bool>,
    pub strongly_connected: bool,
    pub components: Vec<Vec<usize>>,
    pub warnings: Vec<Warning>,
    pub verdict: Verdict,
}

/// Directed graph with an edge `i → j` when `a_ij` is ever structurally nonzero.
pub fn interaction_graph(a: &MatrixPath) -> Vec<Vec<usize>> {
    let n = a.dim();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    i != j
                        && a.samples()
                            .iter()
                            .any(|m| m[(i, j)].abs() > STRUCTURAL_ZERO)
                })
                .collect()
        })
        .collect()
}

fn condition_1(b: &DMatrix<f64>) -> f64 {
    let norm = |m: &DMatrix<f64>| column_sum_norm(m);
    match b.clone().lu().try_inverse() {
        Some(inv) => norm(b) * norm(&inv),
        None => f64::INFINITY,
    }
}

/// Solvability report at `nodes` uniform points of `[0, 1]` (plus every sample node
/// for the graph).
pub fn diagnose(system: &BalanceSystem, nodes: usize) -> Diagnostics {
    let n = system.n();
    let count = nodes.max(1);
    let t: Vec<f64> = if count == 1 {
        vec![0.0]
    } else {
        (0..count).map(|k| k as f64 / (count - 1) as f64).collect()
    };
    let mut d = Diagnostics {
        n_participants: n,
        lambda: system.lambda,
        t: t.clone(),
        row_sum_norm: Vec::with_capacity(count),
        column_sum_norm: Vec::with_capacity(count),
        det_i_minus_a: Vec::with_capacity(count),
        condition_estimate: Vec::with_capacity(count),
        spectral_radius: Vec::with_capacity(count),
        nonnegative: Vec::with_capacity(count),
        strongly_connected: false,
        components: Vec::new(),
        warnings: Vec::new(),
        verdict: Verdict::WellPosed,
    };
    let mut singular = None;
    let mut worst_condition: Option<(f64, f64)> = None;
    let mut norm_warning = None;
    let mut negative = None;
    for &tk in &t {
        let a = system.a.at(tk);
        let b = DMatrix::identity(n, n) - &a;
        let det = b.determinant();
        let hadamard: f64 = b.row_iter().map(|r| r.norm()).product();
        if singular.is_none() && det.abs() < SINGULAR_DET * hadamard.max(f64::MIN_POSITIVE) {
            singular = Some(Warning::Singular { t: tk, det });
        }
        let cond = condition_1(&b);
        if cond > ILL_CONDITIONED && worst_condition.map_or(true, |(_, c)| cond > c) {
            worst_condition = Some((tk, cond));
        }
        let (rs, cs) = (row_sum_norm(&a), column_sum_norm(&a));
        if norm_warning.is_none() && (rs >= 1.0 || cs >= 1.0) {
            norm_warning = Some(Warning::NormNotBelowOne {
                t: tk,
                row_sum: rs,
                column_sum: cs,
            });
        }
        let nonneg = a.iter().all(|&v| v >= 0.0);
        if negative.is_none() && !nonneg {
            negative = Some(Warning::NegativeEntries { t: tk });
        }
        d.row_sum_norm.push(rs);
        d.column_sum_norm.push(cs);
        d.det_i_minus_a.push(det);
        d.condition_estimate.push(cond);
        d.spectral_radius.push(
            a.complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max),
        );
        d.nonnegative.push(nonneg);
    }
    let g = interaction_graph(&system.a);
    d.components = graph::strongly_connected_components(&g);
    d.components.sort();
    d.strongly_connected = d.components.len() <= 1;

    let has_singular = singular.is_some();
    let has_ill = worst_condition.is_some();
    d.warnings.extend(singular);
    if let Some((tk, condition)) = worst_condition {
        d.warnings
            .push(Warning::IllConditioned { t: tk, condition });
    }
    if !d.strongly_connected {
        d.warnings.push(Warning::Decomposable {
            components: d.components.clone(),
        });
    }
    d.warnings.extend(norm_warning);
    d.warnings.extend(negative);
    d.verdict = if has_singular {
        Verdict::FailSingular
    } else if has_ill {
        Verdict::WarnIllConditioned
    } else if !d.strongly_connected {
        Verdict::WarnDecomposable
    } else {
        Verdict::WellPosed
    };
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn two_by_two() -> (DMatrix<f64>, DVector<f64>) {
        (
            DMatrix::from_row_slice(2, 2, &[0.2, 0.3, 0.1, 0.4]),
            DVector::from_vec(vec![10.0, 20.0]),
        )
    }

    #[test]
    fn chained_forecast_passes_through_every_terminal() {
        let (a, c) = two_by_two();
        let p = DVector::from_vec(vec![26.0, 37.0]);
        let sys = BalanceSystem::constant(a, c)
            .unwrap()
            .with_start(p.clone())
            .unwrap();
        let stops = [
            DVector::from_vec(vec![28.0, 40.0]),
            DVector::from_vec(vec![27.0, 39.0]),
            DVector::from_vec(vec![30.0, 41.0]),
        ];
        let cfg = BvpConfig {
            nodes: 51,
            ..BvpConfig::default()
        };
        let tr = forecast_chain(&sys, &stops, &cfg).unwrap();
        assert_eq!(tr.t.len(), 1 + 3 * 50);
        assert_abs_diff_eq!(tr.t[150], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tr.state_at(0)[0], 26.0, epsilon = 1e-9);
        for (k, r) in stops.iter().enumerate() {
            let x = tr.state_at(50 * (k + 1));
            assert_abs_diff_eq!(x[0], r[0], epsilon = 1e-9);
            assert_abs_diff_eq!(x[1], r[1], epsilon = 1e-9);
        }
        let single = forecast_chain(&sys, &stops[..1], &cfg).unwrap();
        let direct =
            forecast_bvp(&sys.clone().with_terminal(stops[0].clone()).unwrap(), &cfg).unwrap();
        assert_eq!(single.state, direct.state);
        assert!(forecast_chain(&sys, &[], &cfg).is_err());
    }

    fn fine() -> SolverConfig {
        SolverConfig {
            nodes: 401,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn static_two_by_two() {
        let (a, c) = two_by_two();
        let s = solve_static(&a, &c, &StaticOptions::default()).unwrap();
        assert_eq!(s.method, StaticMethod::FixedPoint);
        // Cramer on (I - A)x = c, det 0.45.
        assert_abs_diff_eq!(s.x[0], (0.6 * 10.0 + 0.3 * 20.0) / 0.45, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[1], (0.8 * 20.0 + 0.1 * 10.0) / 0.45, epsilon = 1e-9);
    }

    #[test]
    fn static_zero_matrix_one_step() {
        let c = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let s = solve_static(&DMatrix::zeros(3, 3), &c, &StaticOptions::default()).unwrap();
        assert_eq!(s.iterations, 1);
        assert_eq!(s.x, c);
    }

    #[test]
    fn static_generalized_scalar() {
        let s = solve_static(
            &DMatrix::from_element(1, 1, 1.2),
            &DVector::from_element(1, 1.0),
            &StaticOptions::default(),
        )
        .unwrap();
        assert!(matches!(s.method, StaticMethod::NormalEquations { .. }));
        assert_abs_diff_eq!(s.x[0], -5.0, epsilon = 1e-8);
    }

    #[test]
    fn static_singular_least_squares() {
        // I - A = [[1, 1], [1, 1]]: least-squares solution of x1 + x2 = (1 + 3)/2.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        let c = DVector::from_vec(vec![1.0, 3.0]);
        let s = solve_static(&a, &c, &StaticOptions::default()).unwrap();
        assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn static_cap_and_bad_alpha() {
        let (a, c) = two_by_two();
        let opts = StaticOptions {
            max_iter: 3,
            ..StaticOptions::default()
        };
        assert!(matches!(
            solve_static(&a, &c, &opts),
            Err(BalanceError::StaticNotConverged { iterations: 3, .. })
        ));
        let opts = StaticOptions {
            alpha: Some(100.0),
            ..StaticOptions::default()
        };
        let a = DMatrix::from_element(1, 1, 1.2);
        assert!(solve_static(&a, &DVector::from_element(1, 1.0), &opts).is_err());
    }

    #[test]
    fn paths_interpolate() {
        let a = MatrixPath::sampled(vec![
            DMatrix::from_element(1, 1, 0.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.0),
        ])
        .unwrap();
        assert_abs_diff_eq!(a.entry(0, 0, 0.25), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.entry(0, 0, 0.5), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.entry(0, 0, 1.0), 0.0, epsilon = 1e-15);
        let c = VectorPath::sampled(vec![DVector::zeros(1), DVector::zeros(1)]).unwrap();
        assert!(BalanceSystem::new(a, c).is_err());
    }

    #[test]
    fn ivp_kernel_diagonal_values() {
        let (a, c) = two_by_two();
        let sys = BalanceSystem::constant(a, c)
            .unwrap()
            .with_initial(DVector::zeros(2), DVector::zeros(2))
            .unwrap();
        let vp = assemble_ivp(&sys).unwrap();
        assert_eq!(vp.kernel(0, 0, 0.4, 0.4), -1.0);
        assert_eq!(vp.kernel(0, 1, 0.4, 0.4), 0.0);
        assert_eq!(vp.lambda(), 2.0);
    }

    #[test]
    fn ivp_requires_initial_data() {
        let (a, c) = two_by_two();
        let sys = BalanceSystem::constant(a, c).unwrap();
        assert_eq!(
            assemble_ivp(&sys).unwrap_err(),
            BalanceError::MissingData("initial values p")
        );
    }

    #[test]
    fn ivp_equilibrium_is_constant() {
        let (a, c) = two_by_two();
        let xs = solve_static(&a, &c, &StaticOptions::default()).unwrap().x;
        let sys = BalanceSystem::constant(a, c)
            .unwrap()
            .with_initial(xs.clone(), DVector::zeros(2))
            .unwrap();
        let tr = simulate_ivp(&sys, &fine()).unwrap();
        for i in 0..2 {
            for v in &tr.state[i] {
                assert_abs_diff_eq!(*v, xs[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn ivp_scalar_damped_closed_form() {
        let sys = BalanceSystem::constant(DMatrix::zeros(1, 1), DVector::zeros(1))
            .unwrap()
            .with_initial(DVector::from_element(1, 1.0), DVector::zeros(1))
            .unwrap();
        let tr = simulate_ivp(
            &sys,
            &SolverConfig {
                nodes: 801,
                ..fine()
            },
        )
        .unwrap();
        for (k, &t) in tr.t.iter().enumerate() {
            let exact = (-t).exp() * (t.cos() + t.sin());
            assert_abs_diff_eq!(tr.state[0][k], exact, epsilon = 1e-6);
        }
        assert_eq!(tr.state[0][0], 1.0);
    }

    #[test]
    fn ivp_two_participants_against_ode() {
        let (a, c) = two_by_two();
        let xs = solve_static(&a, &c, &StaticOptions::default()).unwrap().x;
        let p = &xs + DVector::from_vec(vec![1.0, 0.0]);
        let sys = BalanceSystem::constant(a.clone(), c.clone())
            .unwrap()
            .with_initial(p.clone(), DVector::zeros(2))
            .unwrap();
        let tr = simulate_ivp(
            &sys,
            &SolverConfig {
                nodes: 801,
                ..fine()
            },
        )
        .unwrap();
        let rhs = |_t: f64, y: &[f64]| {
            let x = DVector::from_column_slice(&y[..2]);
            let v = DVector::from_column_slice(&y[2..]);
            let acc = (&a * &x + &c - &x - &v) * 2.0;
            vec![v[0], v[1], acc[0], acc[1]]
        };
        let y0 = [p[0], p[1], 0.0, 0.0];
        let ys = ode::rk4_dense(&rhs, &tr.t, &y0, 4);
        for (k, y) in ys.iter().enumerate() {
            assert_abs_diff_eq!(tr.state[0][k], y[0], epsilon = 1e-6);
            assert_abs_diff_eq!(tr.state[1][k], y[1], epsilon = 1e-6);
        }
    }

    #[test]
    fn ivp_initial_velocity() {
        let (a, c) = two_by_two();
        let pp = DVector::from_vec(vec![50.0, -30.0]);
        let sys = BalanceSystem::constant(a, c)
            .unwrap()
            .with_initial(DVector::zeros(2), pp.clone())
            .unwrap();
        let tr = simulate_ivp(&sys, &fine()).unwrap();
        let dt = tr.t[1];
        for i in 0..2 {
            let x = &tr.state[i];
            let fd = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt);
            assert!((fd - pp[i]).abs() < 1e-3 * pp[i].abs(), "{fd} vs {}", pp[i]);
            assert_eq!(tr.velocity[i][0], pp[i]);
        }
    }

    fn bvp_system() -> (BalanceSystem, DVector<f64>) {
        let (a, c) = two_by_two();
        let xs = solve_static(&a, &c, &StaticOptions::default()).unwrap().x;
        let sys = BalanceSystem::constant(a, c)
            .unwrap()
            .with_start(xs.clone())
            .unwrap()
            .with_terminal(&xs * 1.1)
            .unwrap();
        (sys, xs)
    }

    #[test]
    fn bvp_kernel_boundary_behaviour() {
        let (sys, _) = bvp_system();
        let fp = assemble_bvp(&sys).unwrap();
        for &t in &[0.2, 0.5, 0.9] {
            assert_abs_diff_eq!(fp.kernel(0, 1, t, 0.0), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(fp.kernel(0, 1, t, 1.0), 0.0, epsilon = 1e-15);
            let lower = fp.kernel(1, 1, t, t);
            let upper = (1.0 - t) * (t + 1.0 - t * 0.4);
            assert_abs_diff_eq!(upper - lower, fp.diagonal_jump(1, t), epsilon = 1e-14);
        }
    }

    #[test]
    fn bvp_equilibrium_is_constant() {
        let (a, c) = two_by_two();
        let xs = solve_static(&a, &c, &StaticOptions::default()).unwrap().x;
        let sys = BalanceSystem::constant(a, c)
            .unwrap()
            .with_start(xs.clone())
            .unwrap()
            .with_terminal(xs.clone())
            .unwrap();
        let tr = forecast_bvp(&sys, &BvpConfig::default()).unwrap();
        for i in 0..2 {
            for v in &tr.state[i] {
                assert_abs_diff_eq!(*v, xs[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn bvp_boundaries_and_residual() {
        let (sys, xs) = bvp_system();
        let tr = forecast_bvp(&sys, &BvpConfig::default()).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(tr.state[i][0], xs[i], epsilon = 1e-9);
            assert_abs_diff_eq!(*tr.state[i].last().unwrap(), 1.1 * xs[i], epsilon = 1e-9);
        }
        assert!(sys.ode_residual(&tr) < 1e-6, "{}", sys.ode_residual(&tr));
    }

    #[test]
    fn bvp_matches_shooting() {
        // Linear BVP: superpose two RK4 shots with x'(0) = 0 and x'(0) = e_i.
        let (sys, xs) = bvp_system();
        let cfg = BvpConfig {
            nodes: 401,
            ..BvpConfig::default()
        };
        let tr = forecast_bvp(&sys, &cfg).unwrap();
        let (a, c) = two_by_two();
        let rhs = |_t: f64, y: &[f64]| {
            let x = DVector::from_column_slice(&y[..2]);
            let v = DVector::from_column_slice(&y[2..]);
            let acc = (&a * &x + &c - &x - &v) * 2.0;
            vec![v[0], v[1], acc[0], acc[1]]
        };
        let shoot = |v0: [f64; 2]| ode::rk4_dense(&rhs, &tr.t, &[xs[0], xs[1], v0[0], v0[1]], 4);
        let base = shoot([0.0, 0.0]);
        let e1 = shoot([1.0, 0.0]);
        let e2 = shoot([0.0, 1.0]);
        let end = tr.t.len() - 1;
        let col = |s: &Vec<Vec<f64>>| {
            DVector::from_vec(vec![s[end][0] - base[end][0], s[end][1] - base[end][1]])
        };
        let jac = DMatrix::from_columns(&[col(&e1), col(&e2)]);
        let miss = DVector::from_vec(vec![1.1 * xs[0] - base[end][0], 1.1 * xs[1] - base[end][1]]);
        let v0 = jac.lu().solve(&miss).unwrap();
        let sol = shoot([v0[0], v0[1]]);
        for k in 0..tr.t.len() {
            assert_abs_diff_eq!(tr.state[0][k], sol[k][0], epsilon = 1e-5);
            assert_abs_diff_eq!(tr.state[1][k], sol[k][1], epsilon = 1e-5);
        }
    }

    #[test]
    fn bvp_stacked_equals_direct() {
        let (sys, _) = bvp_system();
        let direct = forecast_bvp(&sys, &BvpConfig::default()).unwrap();
        let stacked = forecast_bvp(
            &sys,
            &BvpConfig {
                route: BvpRoute::Stacked,
                ..BvpConfig::default()
            },
        )
        .unwrap();
        for i in 0..2 {
            for (a, b) in direct.state[i].iter().zip(&stacked.state[i]) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn bvp_requires_terminal() {
        let (a, c) = two_by_two();
        let sys = BalanceSystem::constant(a, c)
            .unwrap()
            .with_start(DVector::zeros(2))
            .unwrap();
        assert_eq!(
            assemble_bvp(&sys).unwrap_err(),
            BalanceError::MissingData("terminal values r")
        );
    }

    #[test]
    fn sweep_matches_independent_solves() {
        let (sys, _) = bvp_system();
        let cfg = BvpConfig::default();
        assert!(scenario_sweep(&sys, &[], &cfg).unwrap().is_empty());
        let vars: Vec<Variation> = (0..5)
            .map(|k| Variation {
                c_scale: Some(0.9 + 0.05 * k as f64),
                ..Variation::default()
            })
            .collect();
        let swept = scenario_sweep(&sys, &vars, &cfg).unwrap();
        for (v, tr) in vars.iter().zip(&swept) {
            let direct = forecast_bvp(&v.apply(&sys).unwrap(), &cfg).unwrap();
            for i in 0..2 {
                for (a, b) in direct.state[i].iter().zip(&tr.state[i]) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn critical_lambda_is_reported() {
        // x'' + λx' + λ(1 - a)x = 0 with zero boundary values has a nontrivial solution
        // when λ(1 - a) - λ²/4 = π².
        let b: f64 = 11.0;
        let exact = 2.0 * b - 2.0 * (b * b - PI * PI).sqrt();
        let sys = BalanceSystem::constant(DMatrix::from_element(1, 1, 1.0 - b), DVector::zeros(1))
            .unwrap()
            .with_start(DVector::zeros(1))
            .unwrap()
            .with_terminal(DVector::zeros(1))
            .unwrap();
        let problem = assemble_bvp(&sys).unwrap();
        let numbers = fredholm::characteristic_numbers(&problem, 201, 1).unwrap();
        assert!(numbers[0].im.abs() < 1e-9);
        assert!(
            (numbers[0].re - exact).abs() < 1e-3 * exact,
            "{numbers:?} vs {exact}"
        );
        let cfg = BvpConfig::default();
        let err = forecast_bvp(&sys.clone().with_lambda(numbers[0].re).unwrap(), &cfg).unwrap_err();
        assert!(matches!(err, BalanceError::Critical(_)));
        assert!(err.to_string().contains("not meaningful"));
        assert!(forecast_bvp(&sys.with_lambda(2.0 * exact).unwrap(), &cfg).is_ok());
    }

    #[test]
    fn diagnose_worked_example() {
        let (a, c) = two_by_two();
        let d = diagnose(&BalanceSystem::constant(a, c).unwrap(), 5);
        assert_abs_diff_eq!(d.row_sum_norm[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.det_i_minus_a[0], 0.45, epsilon = 1e-12);
        assert!(d.nonnegative.iter().all(|&b| b));
        assert!(d.strongly_connected);
        assert_eq!(d.verdict, Verdict::WellPosed);
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn diagnose_decomposable() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.0, 0.0]);
        let d = diagnose(&BalanceSystem::constant(a, DVector::zeros(2)).unwrap(), 3);
        assert!(!d.strongly_connected);
        assert_eq!(d.verdict, Verdict::WarnDecomposable);
    }

    #[test]
    fn diagnose_column_sum_warning_only() {
        // Column sums 1.1 and 0.2, row sums 0.7 and 0.6; det(I - A) = 0.38.
        let a = DMatrix::from_row_slice(2, 2, &[0.6, 0.1, 0.5, 0.1]);
        let d = diagnose(&BalanceSystem::constant(a, DVector::zeros(2)).unwrap(), 2);
        assert_abs_diff_eq!(d.det_i_minus_a[0], 0.4 * 0.9 - 0.05, epsilon = 1e-12);
        assert_eq!(d.verdict, Verdict::WellPosed);
        assert!(d
            .warnings
            .iter()
            .any(|w| matches!(w, Warning::NormNotBelowOne { .. })));
    }

    #[test]
    fn diagnose_singular_and_ill_conditioned() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let d = diagnose(&BalanceSystem::constant(a, DVector::zeros(2)).unwrap(), 2);
        assert_eq!(d.verdict, Verdict::FailSingular);
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5 - 1e-9]);
        let d = diagnose(&BalanceSystem::constant(a, DVector::zeros(2)).unwrap(), 2);
        assert_eq!(d.verdict, Verdict::WarnIllConditioned);
    }
}
