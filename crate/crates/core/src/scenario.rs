//! Scenario files and the `ecodyn` command line.
//!
//! A scenario is a JSON object naming one model and carrying exactly one matching
//! parameter block:
//!
//! ```json
//! {
//!   "model": "harrod",
//!   "harrod": { "m": 0.5, "n": 10, "k0": 100, "horizon": 10 },
//!   "grid": { "points": 1001 },
//!   "solver": { "tol": 1e-12, "max_iter": 500 },
//!   "outputs": { "csv_path": "harrod_base.csv", "report_path": "harrod_base.json" }
//! }
//! ```
//!
//! Relative output paths resolve against `ECODYN_OUTPUT_DIR` when set, otherwise
//! against the directory holding the scenario file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::balance::{
    self, BalanceSystem, BalanceTrajectory, BvpConfig, MatrixPath, SolveStats, StaticOptions,
    Variation, VectorPath,
};
use crate::grid::Grid;
use crate::harrod::{self, CrisisVariant, GrowthLaw, HarrodParams};
use crate::phillips::{self, PhillipsParams};
use crate::volterra::SolverConfig;

pub const OUTPUT_DIR_ENV: &str = "ECODYN_OUTPUT_DIR";
pub const DEFAULT_TAU_MAX: f64 = 3.0;
pub const DEFAULT_POINTS: usize = 401;
pub const DEFAULT_DIAGNOSTIC_NODES: usize = 11;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl ScenarioError {
    pub fn exit_code(&self) -> u8 {
        match self {
            ScenarioError::Validation(_) => 2,
            ScenarioError::Solver(_) => 3,
            ScenarioError::Io { .. } => 1,
        }
    }
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(msg.into())
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

// ---------------------------------------------------------------------------
// Configuration

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Harrod,
    Phillips,
    Balance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarrodVariant {
    #[default]
    Base,
    Depreciation,
    Cumulative,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarrodBlock {
    pub m: f64,
    pub n: f64,
    pub k0: f64,
    /// End of the integration interval `[0, horizon]`.
    pub horizon: f64,
    #[serde(default)]
    pub variant: HarrodVariant,
    /// Depreciation rate `a`.
    pub depreciation: Option<f64>,
    /// Cumulation rate `r`.
    pub cumulation: Option<f64>,
    /// RK4 steps per grid interval.
    pub substeps: Option<usize>,
    /// Blow-up ceiling as a multiple of `k0`.
    pub ceiling_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhillipsBlock {
    pub k: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub y1: f64,
    pub y1p: f64,
    /// End of the dimensionless interval `[1, tau_max]`.
    pub tau_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceMode {
    Ivp,
    Bvp,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceBlock {
    /// Constant interaction matrix, rows first.
    pub a: Option<Vec<Vec<f64>>>,
    /// Interaction matrix sampled at uniform nodes of `[0, 1]`.
    pub a_samples: Option<Vec<Vec<Vec<f64>>>>,
    pub c: Option<Vec<f64>>,
    pub c_samples: Option<Vec<Vec<f64>>>,
    pub p: Vec<f64>,
    pub p_prime: Option<Vec<f64>>,
    pub r: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    /// Defaults to `bvp` when `r` is given, `ivp` otherwise.
    pub mode: Option<BalanceMode>,
    pub diagnostic_nodes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsBlock {
    pub csv_path: Option<PathBuf>,
    /// Defaults to the CSV path with extension `report.json`.
    pub report_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    pub harrod: Option<HarrodBlock>,
    pub phillips: Option<PhillipsBlock>,
    pub balance: Option<BalanceBlock>,
    pub grid: Option<GridBlock>,
    pub solver: Option<SolverBlock>,
    pub outputs: Option<OutputsBlock>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationSpec {
    pub c_scale: Option<f64>,
    pub c: Option<Vec<f64>>,
    pub c_samples: Option<Vec<Vec<f64>>>,
    pub r: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variations: Vec<VariationSpec>,
}

/// Validated model, ready to run.
#[derive(Debug, Clone)]
pub enum Model {
    Harrod {
        params: HarrodParams,
        variant: HarrodVariant,
        horizon: f64,
        substeps: usize,
        ceiling_factor: f64,
    },
    Phillips {
        params: PhillipsParams,
        tau_max: f64,
    },
    Balance {
        system: BalanceSystem,
        mode: BalanceMode,
        diagnostic_nodes: usize,
    },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: Model,
    pub points: usize,
    pub solver: SolverConfig,
    pub csv_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        load_json(path)
    }

    /// Checks every constraint and builds the model.
    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        let present: Vec<&str> = [
            ("harrod", self.harrod.is_some()),
            ("phillips", self.phillips.is_some()),
            ("balance", self.balance.is_some()),
        ]
        .iter()
        .filter(|(_, p)| *p)
        .map(|(n, _)| *n)
        .collect();
        let wanted = match self.model {
            ModelKind::Harrod => "harrod",
            ModelKind::Phillips => "phillips",
            ModelKind::Balance => "balance",
        };
        if present != [wanted] {
            return Err(invalid(format!(
                "model is {wanted}: exactly the `{wanted}` block must be present (found: {})",
                if present.is_empty() {
                    "none".to_string()
                } else {
                    present.join(", ")
                }
            )));
        }

        let points = self.grid.as_ref().map_or(DEFAULT_POINTS, |g| g.points);
        if points < 2 {
            return Err(invalid(format!("grid.points: must be >= 2 (got {points})")));
        }
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            nodes: points,
            tol: self
                .solver
                .as_ref()
                .and_then(|s| s.tol)
                .unwrap_or(defaults.tol),
            max_iter: self
                .solver
                .as_ref()
                .and_then(|s| s.max_iter)
                .unwrap_or(defaults.max_iter),
        };
        if !(solver.tol > 0.0 && solver.tol.is_finite()) {
            return Err(invalid(format!(
                "solver.tol: must be > 0 (got {})",
                solver.tol
            )));
        }
        if solver.max_iter == 0 {
            return Err(invalid("solver.max_iter: must be >= 1 (got 0)"));
        }

        let model = match self.model {
            ModelKind::Harrod => validate_harrod(self.harrod.as_ref().unwrap())?,
            ModelKind::Phillips => validate_phillips(self.phillips.as_ref().unwrap())?,
            ModelKind::Balance => validate_balance(self.balance.as_ref().unwrap())?,
        };
        let csv_path = self.outputs.as_ref().and_then(|o| o.csv_path.clone());
        let report_path = self
            .outputs
            .as_ref()
            .and_then(|o| o.report_path.clone())
            .or_else(|| csv_path.as_ref().map(|p| p.with_extension("report.json")));
        Ok(Scenario {
            model,
            points,
            solver,
            csv_path,
            report_path,
        })
    }
}

fn validate_harrod(b: &HarrodBlock) -> Result<Model, ScenarioError> {
    let field = |e: harrod::HarrodError| invalid(format!("harrod.{e}"));
    let mut params = HarrodParams::new(b.m, b.n, b.k0).map_err(field)?;
    if !(b.horizon > 0.0 && b.horizon.is_finite()) {
        return Err(invalid(format!(
            "harrod.horizon: must be > 0 (got {})",
            b.horizon
        )));
    }
    match b.variant {
        HarrodVariant::Base => {}
        HarrodVariant::Depreciation => {
            let a = b
                .depreciation
                .ok_or_else(|| invalid("harrod.depreciation: required by variant depreciation"))?;
            params = params
                .with_depreciation(a)
                .map_err(|e| invalid(format!("harrod.{e}")))?;
        }
        HarrodVariant::Cumulative => {
            let r = b
                .cumulation
                .ok_or_else(|| invalid("harrod.cumulation: required by variant cumulative"))?;
            params = params
                .with_cumulation(r)
                .map_err(|e| invalid(format!("harrod.{e}")))?;
        }
    }
    let substeps = b.substeps.unwrap_or(4);
    if substeps == 0 {
        return Err(invalid("harrod.substeps: must be >= 1 (got 0)"));
    }
    let ceiling_factor = b.ceiling_factor.unwrap_or(harrod::DEFAULT_CEILING_FACTOR);
    if !(ceiling_factor > 1.0) {
        return Err(invalid(format!(
            "harrod.ceiling_factor: must be > 1 (got {ceiling_factor})"
        )));
    }
    Ok(Model::Harrod {
        params,
        variant: b.variant,
        horizon: b.horizon,
        substeps,
        ceiling_factor,
    })
}

fn validate_phillips(b: &PhillipsBlock) -> Result<Model, ScenarioError> {
    let params = PhillipsParams::new(b.k, b.l, b.m, b.n, b.y1, b.y1p)
        .map_err(|e| invalid(format!("phillips.{e}")))?;
    let tau_max = b.tau_max.unwrap_or(DEFAULT_TAU_MAX);
    if !(tau_max > 1.0 && tau_max.is_finite()) {
        return Err(invalid(format!(
            "phillips.tau_max: must be > 1 (got {tau_max})"
        )));
    }
    Ok(Model::Phillips { params, tau_max })
}

fn matrix(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>, ScenarioError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(format!(
            "{field}: must be a non-empty square matrix"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector(v: &[f64], n: usize, field: &str) -> Result<DVector<f64>, ScenarioError> {
    if v.len() != n {
        return Err(invalid(format!(
            "{field}: has length {} but there are {n} participants",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(format!("{field}: entries must be finite")));
    }
    Ok(DVector::from_column_slice(v))
}

fn cost_path(
    c: Option<&Vec<f64>>,
    samples: Option<&Vec<Vec<f64>>>,
    n: usize,
    prefix: &str,
) -> Result<Option<VectorPath>, ScenarioError> {
    let bad = |e: balance::BalanceError| invalid(format!("{prefix}c: {e}"));
    match (c, samples) {
        (Some(_), Some(_)) => Err(invalid(format!(
            "{prefix}c and {prefix}c_samples are mutually exclusive"
        ))),
        (Some(c), None) => Ok(Some(
            VectorPath::constant(vector(c, n, &format!("{prefix}c"))?).map_err(bad)?,
        )),
        (None, Some(s)) => {
            let field = format!("{prefix}c_samples");
            if s.len() < 2 {
                return Err(invalid(format!("{field}: needs at least two samples")));
            }
            let v = s
                .iter()
                .map(|c| vector(c, n, &field))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Some(VectorPath::sampled(v).map_err(bad)?))
        }
        (None, None) => Ok(None),
    }
}

fn validate_balance(b: &BalanceBlock) -> Result<Model, ScenarioError> {
    let a = match (&b.a, &b.a_samples) {
        (Some(a), None) => MatrixPath::constant(matrix(a, "balance.a")?),
        (None, Some(s)) => {
            if s.len() < 2 {
                return Err(invalid("balance.a_samples: needs at least two samples"));
            }
            let m = s
                .iter()
                .map(|a| matrix(a, "balance.a_samples"))
                .collect::<Result<Vec<_>, _>>()?;
            if m.iter().any(|x| x.nrows() != m[0].nrows()) {
                return Err(invalid("balance.a_samples: samples differ in size"));
            }
            MatrixPath::sampled(m)
        }
        _ => {
            return Err(invalid(
                "balance: exactly one of `a` and `a_samples` is required",
            ))
        }
    }
    .map_err(|e| invalid(format!("balance.a: {e}")))?;
    let n = a.dim();
    let c = cost_path(b.c.as_ref(), b.c_samples.as_ref(), n, "balance.")?
        .ok_or_else(|| invalid("balance: exactly one of `c` and `c_samples` is required"))?;
    if a.sample_count() > 1 && c.sample_count() > 1 && a.sample_count() != c.sample_count() {
        return Err(invalid(format!(
            "balance.c_samples: {} samples but balance.a_samples has {}; sample grids must match",
            c.sample_count(),
            a.sample_count()
        )));
    }
    let mut system = BalanceSystem::new(a, c).map_err(|e| invalid(format!("balance: {e}")))?;
    if let Some(l) = b.lambda {
        system = system
            .with_lambda(l)
            .map_err(|_| invalid(format!("balance.lambda: must be finite and > 0 (got {l})")))?;
    }
    let p = vector(&b.p, n, "balance.p")?;
    let mode = b.mode.unwrap_or(if b.r.is_some() {
        BalanceMode::Bvp
    } else {
        BalanceMode::Ivp
    });
    system = match &b.p_prime {
        Some(pp) => system.with_initial(p, vector(pp, n, "balance.p_prime")?),
        None => system.with_start(p),
    }
    .map_err(|e| invalid(format!("balance: {e}")))?;
    if let Some(r) = &b.r {
        system = system
            .with_terminal(vector(r, n, "balance.r")?)
            .map_err(|e| invalid(format!("balance: {e}")))?;
    }
    match mode {
        BalanceMode::Ivp if b.p_prime.is_none() => {
            return Err(invalid("balance.p_prime: required by mode ivp"))
        }
        BalanceMode::Bvp if b.r.is_none() => {
            return Err(invalid("balance.r: required by mode bvp"))
        }
        _ => {}
    }
    let diagnostic_nodes = b.diagnostic_nodes.unwrap_or(DEFAULT_DIAGNOSTIC_NODES);
    if diagnostic_nodes == 0 {
        return Err(invalid("balance.diagnostic_nodes: must be >= 1 (got 0)"));
    }
    Ok(Model::Balance {
        system,
        mode,
        diagnostic_nodes,
    })
}

/// Parses a JSON file, naming the offending field path on type errors.
fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if field.is_empty() || field == "." {
            invalid(format!("{}: {inner}", path.display()))
        } else {
            invalid(format!("{}: {field}: {inner}", path.display()))
        }
    })
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        load_json(path)
    }

    pub fn to_variations(&self, n: usize) -> Result<Vec<Variation>, ScenarioError> {
        self.variations
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let prefix = format!("variations[{k}].");
                if let Some(s) = v.c_scale {
                    if !s.is_finite() {
                        return Err(invalid(format!(
                            "{prefix}c_scale: must be finite (got {s})"
                        )));
                    }
                }
                Ok(Variation {
                    c: cost_path(v.c.as_ref(), v.c_samples.as_ref(), n, &prefix)?,
                    c_scale: v.c_scale,
                    r: v.r
                        .as_ref()
                        .map(|r| vector(r, n, &format!("{prefix}r")))
                        .transpose()?,
                })
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Output

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

/// Column-oriented numeric table with an optional leading integer column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub index: Option<(String, Vec<usize>)>,
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

/// 17 significant digits: enough to round-trip every `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    fn rows(&self) -> usize {
        self.columns
            .first()
            .map(Vec::len)
            .or_else(|| self.index.as_ref().map(|(_, i)| i.len()))
            .unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let record = |w: &mut csv::Writer<Vec<u8>>, cells: Vec<String>| {
            w.write_record(cells).expect("in-memory csv write");
        };
        let mut header = self.header.clone();
        if let Some((name, _)) = &self.index {
            header.insert(0, name.clone());
        }
        record(&mut w, header);
        for k in 0..self.rows() {
            let mut row: Vec<String> = self.columns.iter().map(|c| format_float(c[k])).collect();
            if let Some((_, idx)) = &self.index {
                row.insert(0, idx[k].to_string());
            }
            record(&mut w, row);
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("ascii csv")
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for k in 0..self.rows() {
            let mut row: serde_json::Map<String, Value> = self
                .header
                .iter()
                .zip(&self.columns)
                .map(|(h, c)| (h.clone(), json!(c[k])))
                .collect();
            if let Some((name, idx)) = &self.index {
                row.insert(name.clone(), json!(idx[k]));
            }
            let _ = writeln!(out, "{}", Value::Object(row));
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Jsonl => self.to_jsonl(),
        }
    }
}

fn growth_table(t: &[f64], k: &[f64], i: &[f64], y: &[f64]) -> Table {
    Table {
        header: ["t", "K", "I", "Y"].iter().map(|s| s.to_string()).collect(),
        columns: vec![t.to_vec(), k.to_vec(), i.to_vec(), y.to_vec()],
        ..Table::default()
    }
}

fn balance_table(tr: &BalanceTrajectory) -> Table {
    let mut header = vec!["t".to_string()];
    header.extend((1..=tr.state.len()).map(|i| format!("x_{i}")));
    let mut columns = vec![tr.t.clone()];
    columns.extend(tr.state.iter().cloned());
    Table {
        header,
        columns,
        ..Table::default()
    }
}

/// Where artifacts go and in which format.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub base_dir: PathBuf,
    pub format: Format,
}

impl RunOptions {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    fn table_path(&self, path: &Path) -> PathBuf {
        let p = self.resolve(path);
        match self.format {
            Format::Csv => p,
            Format::Jsonl => p.with_extension("jsonl"),
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), ScenarioError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    fs::write(path, content).map_err(io_err(path))
}

fn write_json(path: &Path, value: &Value) -> Result<(), ScenarioError> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    write_file(path, &text)
}

/// Files written and what to tell the user.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    pub message: String,
    /// Harrod integration hit its crisis flag inside the horizon.
    pub crisis: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.crisis {
            4
        } else {
            0
        }
    }
}

// ---------------------------------------------------------------------------
// Commands

fn require_csv(s: &Scenario) -> Result<&Path, ScenarioError> {
    s.csv_path
        .as_deref()
        .ok_or_else(|| invalid("outputs.csv_path: required by this command"))
}

fn crisis_variant(v: HarrodVariant) -> CrisisVariant {
    match v {
        HarrodVariant::Base => CrisisVariant::Base,
        HarrodVariant::Depreciation => CrisisVariant::Depreciation,
        HarrodVariant::Cumulative => CrisisVariant::Cumulative,
    }
}

fn crisis_report(params: &HarrodParams, variant: HarrodVariant, horizon: f64) -> Value {
    let report = harrod::crisis_time(params, crisis_variant(variant), None, horizon)
        .expect("closed-form variants need no function");
    json!({
        "variant": report.variant,
        "t_crisis": report.t_crisis,
        "mechanism": report.mechanism,
    })
}

fn describe_crisis(report: &Value) -> String {
    match report["t_crisis"].as_f64() {
        Some(t) => format!("t_crisis={t}"),
        None => "t_crisis=none".to_string(),
    }
}

fn stats_json(stats: &SolveStats) -> Value {
    match stats {
        SolveStats::Picard {
            iterations,
            residual,
            ..
        } => json!({ "method": "picard", "iterations": iterations, "residual": residual }),
        SolveStats::Nystrom { condition } => json!({ "method": "nystrom", "condition": condition }),
    }
}

fn solve_balance(
    system: &BalanceSystem,
    mode: BalanceMode,
    s: &Scenario,
) -> Result<BalanceTrajectory, ScenarioError> {
    let out = match mode {
        BalanceMode::Ivp => balance::simulate_ivp(system, &s.solver),
        BalanceMode::Bvp => balance::forecast_bvp(
            system,
            &BvpConfig {
                nodes: s.points,
                ..BvpConfig::default()
            },
        ),
    };
    out.map_err(|e| ScenarioError::Solver(e.to_string()))
}

fn balance_report(system: &BalanceSystem, nodes: usize) -> Value {
    let diagnostics = balance::diagnose(system, nodes);
    let a0 = system.a().at(0.0);
    let c0 = system.c().at(0.0);
    let equilibrium = balance::solve_static(&a0, &c0, &StaticOptions::default())
        .ok()
        .map(|s| {
            json!({
                "x": s.x.as_slice(),
                "method": s.method,
                "iterations": s.iterations,
                "residual": s.residual,
            })
        });
    json!({
        "model": "balance",
        "diagnostics": diagnostics,
        "static_balance_at_t0": equilibrium,
    })
}

/// `ecodyn run`: trajectory table plus a JSON report.
pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<Outcome, ScenarioError> {
    let csv = opts.table_path(require_csv(s)?);
    let report_path = s.report_path.as_deref().map(|p| opts.resolve(p));
    let mut artifacts = Vec::new();
    match &s.model {
        Model::Harrod {
            params,
            variant,
            horizon,
            substeps,
            ceiling_factor,
        } => {
            let grid =
                Grid::new(0.0, *horizon, s.points).map_err(|e| invalid(format!("grid: {e}")))?;
            let law = match variant {
                HarrodVariant::Base => GrowthLaw::Base,
                HarrodVariant::Depreciation => GrowthLaw::Depreciation,
                HarrodVariant::Cumulative => GrowthLaw::Cumulative,
            };
            let tr = harrod::solve_variant_ivp(law, params, &grid, *substeps, *ceiling_factor);
            write_file(
                &csv,
                &growth_table(&tr.t, &tr.capital, &tr.investment, &tr.income).render(opts.format),
            )?;
            artifacts.push(csv);
            let mut report = crisis_report(params, *variant, *horizon);
            report["model"] = json!("harrod");
            report["flag"] = json!(tr.crisis);
            let mut message = describe_crisis(&report);
            if let Some(flag) = &tr.crisis {
                let _ = write!(
                    message,
                    "\ncrisis flag at t={} ({:?}); trajectory truncated",
                    flag.t, flag.cause
                );
            }
            if let Some(p) = report_path {
                write_json(&p, &report)?;
                artifacts.push(p);
            }
            Ok(Outcome {
                artifacts,
                message,
                crisis: tr.crisis.is_some(),
            })
        }
        Model::Phillips { params, tau_max } => {
            let sol = phillips::solve_corrected(params, *tau_max, &s.solver)
                .map_err(|e| ScenarioError::Solver(e.to_string()))?;
            let t_end = (tau_max - 1.0) / params.k;
            let grid =
                Grid::new(0.0, t_end, s.points).map_err(|e| invalid(format!("grid: {e}")))?;
            let (capital, investment) = phillips::capital_from_income(params, &grid, &sol.income)
                .map_err(|e| ScenarioError::Solver(e.to_string()))?;
            write_file(
                &csv,
                &growth_table(&sol.t, &capital, &investment, &sol.income).render(opts.format),
            )?;
            artifacts.push(csv);
            let residual = phillips::equation_residual(params, &sol);
            if let Some(p) = report_path {
                let coeffs = phillips::dimensionless_form(params);
                write_json(
                    &p,
                    &json!({
                        "model": "phillips",
                        "tau_max": tau_max,
                        "alpha": coeffs.alpha,
                        "beta": coeffs.beta,
                        "gamma": coeffs.gamma,
                        "iterations": sol.iterations,
                        "integral_residual": sol.residual,
                        "equation_residual": residual,
                    }),
                )?;
                artifacts.push(p);
            }
            Ok(Outcome {
                artifacts,
                message: format!(
                    "phillips: {} iterations, equation residual {residual:.3e}",
                    sol.iterations
                ),
                crisis: false,
            })
        }
        Model::Balance {
            system,
            mode,
            diagnostic_nodes,
        } => {
            let tr = solve_balance(system, *mode, s)?;
            write_file(&csv, &balance_table(&tr).render(opts.format))?;
            artifacts.push(csv);
            let mut report = balance_report(system, *diagnostic_nodes);
            report["mode"] = json!(match mode {
                BalanceMode::Ivp => "ivp",
                BalanceMode::Bvp => "bvp",
            });
            report["solver"] = stats_json(&tr.stats);
            report["ode_residual"] = json!(system.ode_residual(&tr));
            let verdict = report["diagnostics"]["verdict"].clone();
            if let Some(p) = report_path {
                write_json(&p, &report)?;
                artifacts.push(p);
            }
            Ok(Outcome {
                artifacts,
                message: format!("balance: verdict {}", verdict.as_str().unwrap_or("?")),
                crisis: false,
            })
        }
    }
}

fn balance_model(s: &Scenario, command: &str) -> Result<(BalanceSystem, usize), ScenarioError> {
    match &s.model {
        Model::Balance {
            system,
            diagnostic_nodes,
            ..
        } => Ok((system.clone(), *diagnostic_nodes)),
        _ => Err(invalid(format!("model: `{command}` needs model balance"))),
    }
}

/// Path with `suffix` appended to the file stem.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned());
    let name = match ext {
        Some(e) => format!("{stem}{suffix}.{e}"),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

/// `ecodyn sweep`: one forecast per variation from a shared resolvent, plus a
/// summary table of terminal, maximum and minimum values.
pub fn run_sweep(
    s: &Scenario,
    spec: &SweepSpec,
    opts: &RunOptions,
) -> Result<Outcome, ScenarioError> {
    let (system, _) = balance_model(s, "sweep")?;
    if system.r().is_none() {
        return Err(invalid("balance.r: required by sweep"));
    }
    let variations = spec.to_variations(system.n())?;
    let csv = opts.table_path(require_csv(s)?);
    let cfg = BvpConfig {
        nodes: s.points,
        ..BvpConfig::default()
    };
    let results = balance::scenario_sweep(&system, &variations, &cfg)
        .map_err(|e| ScenarioError::Solver(e.to_string()))?;
    let n = system.n();
    let mut artifacts = Vec::new();
    let mut header = Vec::with_capacity(3 * n);
    for kind in ["terminal", "max", "min"] {
        header.extend((1..=n).map(|i| format!("{kind}_x_{i}")));
    }
    let mut columns = vec![Vec::with_capacity(results.len()); header.len()];
    for (k, tr) in results.iter().enumerate() {
        let path = sibling(&csv, &format!("_variation_{k}"));
        write_file(&path, &balance_table(tr).render(opts.format))?;
        artifacts.push(path);
        for i in 0..n {
            let x = &tr.state[i];
            columns[i].push(*x.last().unwrap());
            columns[n + i].push(x.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            columns[2 * n + i].push(x.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    let summary = sibling(&csv, "_summary");
    let table = Table {
        index: Some(("variation".into(), (0..results.len()).collect())),
        header,
        columns,
    };
    write_file(&summary, &table.render(opts.format))?;
    artifacts.push(summary);
    Ok(Outcome {
        message: format!("sweep: {} variations", results.len()),
        artifacts,
        crisis: false,
    })
}

/// `ecodyn diagnose`: the solvability report only. Never fails on the system itself.
pub fn run_diagnose(s: &Scenario, opts: &RunOptions) -> Result<Outcome, ScenarioError> {
    let (system, nodes) = balance_model(s, "diagnose")?;
    let report = balance_report(&system, nodes);
    let d = &report["diagnostics"];
    let message = format!(
        "verdict={} strongly_connected={} max_row_sum={}",
        d["verdict"].as_str().unwrap_or("?"),
        d["strongly_connected"],
        d["row_sum_norm"]
            .as_array()
            .map(|v| v.iter().filter_map(Value::as_f64).fold(0.0, f64::max))
            .unwrap_or(f64::NAN)
    );
    let mut artifacts = Vec::new();
    if let Some(p) = s.report_path.as_deref().map(|p| opts.resolve(p)) {
        write_json(&p, &report)?;
        artifacts.push(p);
    }
    Ok(Outcome {
        artifacts,
        message,
        crisis: false,
    })
}

/// `ecodyn crisis`: closed-form Harrod crisis time.
pub fn run_crisis(s: &Scenario, opts: &RunOptions) -> Result<Outcome, ScenarioError> {
    let Model::Harrod {
        params,
        variant,
        horizon,
        ..
    } = &s.model
    else {
        return Err(invalid("model: `crisis` needs model harrod"));
    };
    let mut report = crisis_report(params, *variant, *horizon);
    let message = format!(
        "{}\nmechanism: {}",
        describe_crisis(&report),
        report["mechanism"].as_str().unwrap_or("")
    );
    report["model"] = json!("harrod");
    let mut artifacts = Vec::new();
    if let Some(p) = s.report_path.as_deref().map(|p| opts.resolve(p)) {
        write_json(&p, &report)?;
        artifacts.push(p);
    }
    Ok(Outcome {
        artifacts,
        message,
        crisis: false,
    })
}

// ---------------------------------------------------------------------------
// Command line

#[derive(Debug, Parser)]
#[command(
    name = "ecodyn",
    version,
    about = "Economic-dynamics scenarios via integral equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a scenario and write its trajectory and report.
    Run(CommonArgs),
    /// Forecast a balance scenario under each variation of a sweep file.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// JSON file `{"variations": [{"c_scale": .., "c": [..], "r": [..]}, ..]}`.
        spec: PathBuf,
    },
    /// Solvability diagnostics of a balance scenario.
    Diagnose(CommonArgs),
    /// Closed-form crisis time of a Harrod scenario.
    Crisis(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Scenario JSON file.
    config: PathBuf,
    /// Override `grid.points`.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Override `solver.tol`.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl CommonArgs {
    fn load(&self) -> Result<(Scenario, RunOptions), ScenarioError> {
        let mut cfg = ScenarioConfig::load(&self.config)?;
        if let Some(points) = self.grid_points {
            cfg.grid = Some(GridBlock { points });
        }
        if let Some(tol) = self.tol {
            let solver = cfg.solver.get_or_insert(SolverBlock {
                tol: None,
                max_iter: None,
            });
            solver.tol = Some(tol);
        }
        let scenario = cfg.validate().map_err(|e| match e {
            ScenarioError::Validation(m) => invalid(format!("{}: {m}", self.config.display())),
            other => other,
        })?;
        let base_dir = match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self
                .config
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_default(),
        };
        Ok((
            scenario,
            RunOptions {
                base_dir,
                format: self.format,
            },
        ))
    }
}

fn dispatch(command: &Command) -> Result<Outcome, ScenarioError> {
    match command {
        Command::Run(a) => {
            let (s, o) = a.load()?;
            run_scenario(&s, &o)
        }
        Command::Sweep { common, spec } => {
            let (s, o) = common.load()?;
            run_sweep(&s, &SweepSpec::load(spec)?, &o)
        }
        Command::Diagnose(a) => {
            let (s, o) = a.load()?;
            run_diagnose(&s, &o)
        }
        Command::Crisis(a) => {
            let (s, o) = a.load()?;
            run_crisis(&s, &o)
        }
    }
}

/// Parses `args` (program name first), runs the command, prints a summary and
/// returns the process exit code.
pub fn cli_main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match dispatch(&cli.command) {
        Ok(outcome) => {
            println!("{}", outcome.message);
            for p in &outcome.artifacts {
                println!("wrote {}", p.display());
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("ecodyn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
