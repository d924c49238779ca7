//! Harrod growth models: the discrete yearly recurrence, the exponential baseline
//! it is usually (incorrectly) replaced by, the integral-form continuous model with
//! its closed forms, and the crisis times of each variant.
//!
//! The continuous model ties capital to realized income through
//! `K(t) = (n/t)·∫₀ᵗ Y dh`, which gives `K(t) = K0/(1 - s t)` with `s = m/n`; the
//! capital denominator vanishes at the crisis time `t = 1/s = n/m`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::ode::rk4_step;

/// Longest discrete horizon accepted by [`discrete_trajectory`].
pub const MAX_DISCRETE_YEARS: usize = 100_000;

/// Blow-up ceiling for [`solve_variant_ivp`], relative to `K0`.
pub const DEFAULT_CEILING_FACTOR: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarrodError {
    #[error("{field}: must satisfy {constraint} (got {value})")]
    InvalidParameter {
        field: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("discrete horizon of {requested} years exceeds the cap of {cap}")]
    HorizonTooLong { requested: usize, cap: usize },
    #[error("capital overflowed at year {year}")]
    Overflow { year: usize },
    #[error("grid node t = {t} lies at or beyond the crisis time {crisis}")]
    BeyondCrisis { t: f64, crisis: f64 },
    #[error("variant {0:?} needs a user-supplied function")]
    MissingFunction(CrisisVariant),
}

/// Scalar macro-parameters of the Harrod models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarrodParams {
    m: f64,
    n: f64,
    k0: f64,
    deprec_a: f64,
    cumul_r: f64,
}

impl HarrodParams {
    /// `m` is the accumulation share in (0, 1), `n` the capital/income ratio and
    /// `k0` the initial capital. Depreciation and cumulation start disabled.
    pub fn new(m: f64, n: f64, k0: f64) -> Result<Self, HarrodError> {
        if !(m > 0.0 && m < 1.0) {
            return Err(HarrodError::InvalidParameter {
                field: "m",
                constraint: "0 < m < 1",
                value: m,
            });
        }
        if !(n > 0.0 && n.is_finite()) {
            return Err(HarrodError::InvalidParameter {
                field: "n",
                constraint: "n > 0",
                value: n,
            });
        }
        if !(k0 >= 0.0 && k0.is_finite()) {
            return Err(HarrodError::InvalidParameter {
                field: "k0",
                constraint: "K0 >= 0",
                value: k0,
            });
        }
        Ok(Self {
            m,
            n,
            k0,
            deprec_a: 0.0,
            cumul_r: 0.0,
        })
    }

    pub fn with_depreciation(mut self, a: f64) -> Result<Self, HarrodError> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(HarrodError::InvalidParameter {
                field: "deprec_a",
                constraint: "a >= 0",
                value: a,
            });
        }
        self.deprec_a = a;
        Ok(self)
    }

    pub fn with_cumulation(mut self, r: f64) -> Result<Self, HarrodError> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(HarrodError::InvalidParameter {
                field: "cumul_r",
                constraint: "r >= 0",
                value: r,
            });
        }
        self.cumul_r = r;
        Ok(self)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn deprec_a(&self) -> f64 {
        self.deprec_a
    }

    pub fn cumul_r(&self) -> f64 {
        self.cumul_r
    }

    /// Growth rate `s = m/n`.
    pub fn s(&self) -> f64 {
        self.m / self.n
    }

    /// `I0 = s·K0`.
    pub fn i0(&self) -> f64 {
        self.s() * self.k0
    }

    /// `Y0 = K0/n`.
    pub fn y0(&self) -> f64 {
        self.k0 / self.n
    }
}

/// Yearly capital, income and investment of the discrete recurrence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteTrajectory {
    pub years: Vec<usize>,
    pub capital: Vec<f64>,
    pub income: Vec<f64>,
    pub investment: Vec<f64>,
}

/// `K_j = K0·(1+s)^j`, `Y_j = K_j/n`, `I_j = s·K_j` for `j = 0..=years`.
pub fn discrete_trajectory(
    params: &HarrodParams,
    years: usize,
) -> Result<DiscreteTrajectory, HarrodError> {
    if years > MAX_DISCRETE_YEARS {
        return Err(HarrodError::HorizonTooLong {
            requested: years,
            cap: MAX_DISCRETE_YEARS,
        });
    }
    let s = params.s();
    let mut capital = Vec::with_capacity(years + 1);
    let mut k = params.k0;
    for year in 0..=years {
        if !k.is_finite() {
            return Err(HarrodError::Overflow { year });
        }
        capital.push(k);
        k *= 1.0 + s;
    }
    Ok(DiscreteTrajectory {
        years: (0..=years).collect(),
        income: capital.iter().map(|k| k / params.n).collect(),
        investment: capital.iter().map(|k| s * k).collect(),
        capital,
    })
}

/// First year `N <= max_year` where the accumulated investment `Σ_{j=1..N} I_j`
/// reaches the same-year capital `K_N`.
///
/// Both sides scale with `K0`, so the scan runs on the normalized sequence and the
/// answer does not depend on the initial capital.
pub fn discrete_contradiction_year(params: &HarrodParams, max_year: usize) -> Option<usize> {
    let s = params.s();
    let mut capital = 1.0;
    let mut invested = 0.0;
    for year in 1..=max_year {
        capital *= 1.0 + s;
        invested += s * capital;
        if invested >= capital {
            return Some(year);
        }
    }
    None
}

/// Two closed-form guesses of the contradiction year, for side-by-side reporting:
/// the frequently quoted `1/s` and the log estimate `ln((1+s)/s)/ln(1+s)` that
/// follows from summing the geometric progression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContradictionEstimates {
    pub reciprocal_rate: f64,
    pub geometric: f64,
}

pub fn contradiction_estimates(params: &HarrodParams) -> ContradictionEstimates {
    let s = params.s();
    ContradictionEstimates {
        reciprocal_rate: 1.0 / s,
        geometric: ((1.0 + s) / s).ln() / (1.0 + s).ln(),
    }
}

/// Why an integration stopped before the end of its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrisisCause {
    /// `|K|` passed the configured ceiling.
    CeilingExceeded,
    /// The growth coefficient's denominator reached zero.
    SingularCoefficient,
}

/// Grid node that could not be reached; the crisis lies in `(t_{index-1}, t_index]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrisisFlag {
    pub index: usize,
    pub t: f64,
    pub cause: CrisisCause,
}

/// Sampled capital, investment and income; truncated at `crisis` when set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarrodTrajectory {
    pub t: Vec<f64>,
    pub capital: Vec<f64>,
    pub investment: Vec<f64>,
    pub income: Vec<f64>,
    pub crisis: Option<CrisisFlag>,
}

impl HarrodTrajectory {
    fn with_capacity(n: usize) -> Self {
        Self {
            t: Vec::with_capacity(n),
            capital: Vec::with_capacity(n),
            investment: Vec::with_capacity(n),
            income: Vec::with_capacity(n),
            crisis: None,
        }
    }

    fn push(&mut self, t: f64, k: f64, i: f64, y: f64) {
        self.t.push(t);
        self.capital.push(k);
        self.investment.push(i);
        self.income.push(y);
    }
}

/// The exponential solution `K0·e^{st}` of the naive differential form. Kept only as
/// a comparison baseline; it has no crisis.
pub fn exponential_baseline(params: &HarrodParams, grid: &Grid) -> HarrodTrajectory {
    let s = params.s();
    let mut out = HarrodTrajectory::with_capacity(grid.len());
    for t in grid.points() {
        let k = params.k0 * (s * t).exp();
        out.push(t, k, s * k, k / params.n);
    }
    out
}

/// Closed forms `K = K0/(1-st)`, `I = I0/(1-st)²`, `Y = Y0/(1-st)²`.
pub fn continuous_trajectory(
    params: &HarrodParams,
    grid: &Grid,
) -> Result<HarrodTrajectory, HarrodError> {
    let s = params.s();
    let mut out = HarrodTrajectory::with_capacity(grid.len());
    for t in grid.points() {
        let d = 1.0 - s * t;
        if d <= 0.0 {
            return Err(HarrodError::BeyondCrisis { t, crisis: 1.0 / s });
        }
        out.push(
            t,
            params.k0 / d,
            params.i0() / (d * d),
            params.y0() / (d * d),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrisisVariant {
    Base,
    GeneralizedF,
    Depreciation,
    Cumulative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrisisReport {
    pub variant: CrisisVariant,
    /// `None` means no crisis within the search horizon.
    pub t_crisis: Option<f64>,
    pub mechanism: &'static str,
}

/// Absolute tolerance of the bisection used for the generalized variant.
pub const ROOT_TOLERANCE: f64 = 1e-9;

/// Crisis time of a model variant.
///
/// `f` is the user's proportionality function (only read for
/// [`CrisisVariant::GeneralizedF`]); `horizon` bounds its root search.
pub fn crisis_time(
    params: &HarrodParams,
    variant: CrisisVariant,
    f: Option<&dyn Fn(f64) -> f64>,
    horizon: f64,
) -> Result<CrisisReport, HarrodError> {
    let s = params.s();
    let (t_crisis, mechanism) = match variant {
        CrisisVariant::Base => (
            Some(params.n / params.m),
            "capital denominator 1 - s t vanishes",
        ),
        CrisisVariant::GeneralizedF => {
            let f = f.ok_or(HarrodError::MissingFunction(variant))?;
            (
                bracket_and_bisect(|t| f(t) - 1.0 / s, horizon),
                "capital denominator 1 - s f(t) vanishes",
            )
        }
        CrisisVariant::Depreciation => {
            let a = params.deprec_a;
            let t = if a > 0.0 {
                (1.0 / s).min(1.0 / a)
            } else {
                1.0 / s
            };
            (Some(t), "first root of (1 - a t)(1 - s t)")
        }
        CrisisVariant::Cumulative => (
            Some(cumulative_blow_up(s, params.cumul_r)),
            "positive root of 1 - s t - s r t^2",
        ),
    };
    Ok(CrisisReport {
        variant,
        t_crisis,
        mechanism,
    })
}

/// Positive root of `1 - s t - s r t²`, i.e. `-1/(2r) + sqrt(1/(4r²) + 1/(s r))`,
/// written in a form that stays accurate as `r → 0`, where it tends to `1/s`.
pub fn cumulative_blow_up(s: f64, r: f64) -> f64 {
    2.0 / (s * (1.0 + (1.0 + 4.0 * r / s).sqrt()))
}

/// Root of an increasing `g` with `g(0) < 0`: doubles the upper end from 1 until the
/// sign changes or `horizon` is passed, then bisects.
fn bracket_and_bisect(g: impl Fn(f64) -> f64, horizon: f64) -> Option<f64> {
    if g(0.0) >= 0.0 {
        return Some(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0_f64.min(horizon);
    while g(hi) < 0.0 {
        if hi >= horizon {
            return None;
        }
        lo = hi;
        hi = (2.0 * hi).min(horizon);
    }
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Growth law `K' = g(t)·K` of a model variant.
#[derive(Clone, Copy)]
pub enum GrowthLaw<'a> {
    /// `g = s/(1 - s t)`.
    Base,
    /// `g = m(t)/(n - t m(t))` with a time-dependent accumulation share.
    TimeVaryingShare(&'a dyn Fn(f64) -> f64),
    /// `g = (a + s - 2 a s t)/(1 - (a + s) t + a s t²)`.
    Depreciation,
    /// `g = s (1 + r t)/(1 - s t - s r t²)`.
    Cumulative,
}

impl std::fmt::Debug for GrowthLaw<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            GrowthLaw::Base => "Base",
            GrowthLaw::TimeVaryingShare(_) => "TimeVaryingShare",
            GrowthLaw::Depreciation => "Depreciation",
            GrowthLaw::Cumulative => "Cumulative",
        };
        f.write_str(name)
    }
}

impl GrowthLaw<'_> {
    /// `(numerator, denominator)` of `g(t)`; the law is singular once the
    /// denominator is no longer positive.
    fn coefficient(&self, p: &HarrodParams, t: f64) -> (f64, f64) {
        let s = p.s();
        match self {
            GrowthLaw::Base => (s, 1.0 - s * t),
            GrowthLaw::TimeVaryingShare(m) => {
                let m = m(t);
                (m, p.n - t * m)
            }
            GrowthLaw::Depreciation => {
                let a = p.deprec_a;
                (a + s - 2.0 * a * s * t, 1.0 - (a + s) * t + a * s * t * t)
            }
            GrowthLaw::Cumulative => {
                let r = p.cumul_r;
                (s * (1.0 + r * t), 1.0 - s * t - s * r * t * t)
            }
        }
    }

    fn share(&self, p: &HarrodParams, t: f64) -> f64 {
        match self {
            GrowthLaw::TimeVaryingShare(m) => m(t),
            _ => p.m,
        }
    }

    /// Investment flow implied by the capital and its rate of change.
    fn investment(&self, p: &HarrodParams, t: f64, k: f64, dk: f64) -> f64 {
        match self {
            GrowthLaw::Base | GrowthLaw::TimeVaryingShare(_) => dk,
            // (1 - a t)·K replaces K in the capital balance.
            GrowthLaw::Depreciation => (1.0 - p.deprec_a * t) * dk - p.deprec_a * k,
            GrowthLaw::Cumulative => dk / (1.0 + p.cumul_r * t),
        }
    }
}

/// Integrates `K' = g(t) K`, `K(grid.lo()) = K0` with fixed-step RK4 on the grid,
/// `substeps` steps per grid interval. Integration stops, with a crisis flag, at the
/// first node whose step meets a non-positive coefficient denominator or pushes
/// `|K|` past `ceiling_factor·K0`.
pub fn solve_variant_ivp(
    law: GrowthLaw<'_>,
    params: &HarrodParams,
    grid: &Grid,
    substeps: usize,
    ceiling_factor: f64,
) -> HarrodTrajectory {
    let ceiling = ceiling_factor * params.k0.max(f64::MIN_POSITIVE);
    let substeps = substeps.max(1);
    let singular = std::cell::Cell::new(false);
    let rhs = |t: f64, y: &[f64]| {
        let (num, den) = law.coefficient(params, t);
        if den <= 0.0 || !den.is_finite() {
            singular.set(true);
        }
        vec![num / den * y[0]]
    };
    let record = |out: &mut HarrodTrajectory, t: f64, k: f64| {
        let (num, den) = law.coefficient(params, t);
        let dk = num / den * k;
        let i = law.investment(params, t, k, dk);
        out.push(t, k, i, i / law.share(params, t));
    };

    let points = grid.points();
    let mut out = HarrodTrajectory::with_capacity(points.len());
    let mut k = params.k0;
    if law.coefficient(params, points[0]).1 <= 0.0 {
        out.crisis = Some(CrisisFlag {
            index: 0,
            t: points[0],
            cause: CrisisCause::SingularCoefficient,
        });
        return out;
    }
    record(&mut out, points[0], k);
    for (idx, w) in points.windows(2).enumerate() {
        let h = (w[1] - w[0]) / substeps as f64;
        let mut y = vec![k];
        for s in 0..substeps {
            y = rk4_step(&rhs, w[0] + s as f64 * h, &y, h);
        }
        let cause = if singular.get() || law.coefficient(params, w[1]).1 <= 0.0 {
            Some(CrisisCause::SingularCoefficient)
        } else if !(y[0].abs() <= ceiling) {
            Some(CrisisCause::CeilingExceeded)
        } else {
            None
        };
        if let Some(cause) = cause {
            out.crisis = Some(CrisisFlag {
                index: idx + 1,
                t: w[1],
                cause,
            });
            return out;
        }
        k = y[0];
        record(&mut out, w[1], k);
    }
    out
}

/// Capital of the generalized model `K0/(1 - s f(t))` at the grid nodes, stopping at
/// the first node where the denominator is no longer positive.
pub fn generalized_trajectory(
    params: &HarrodParams,
    f: &dyn Fn(f64) -> f64,
    grid: &Grid,
) -> (Vec<f64>, Vec<f64>) {
    let s = params.s();
    grid.points()
        .into_iter()
        .map_while(|t| {
            let d = 1.0 - s * f(t);
            (d > 0.0).then(|| (t, params.k0 / d))
        })
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn canonical() -> HarrodParams {
        HarrodParams::new(0.5, 10.0, 100.0).unwrap()
    }

    #[test]
    fn parameter_validation_names_the_field() {
        let err = HarrodParams::new(1.5, 10.0, 100.0).unwrap_err();
        assert_eq!(err.to_string(), "m: must satisfy 0 < m < 1 (got 1.5)");
        assert!(HarrodParams::new(0.5, 0.0, 1.0).is_err());
        assert!(HarrodParams::new(0.5, 1.0, -1.0).is_err());
        assert!(canonical().with_depreciation(-0.1).is_err());
        assert!(canonical().with_cumulation(f64::NAN).is_err());
        assert_eq!(canonical().s(), 0.5 / 10.0);
    }

    #[test]
    fn discrete_two_years_by_hand() {
        let d = discrete_trajectory(&canonical(), 2).unwrap();
        assert_eq!(d.years, vec![0, 1, 2]);
        assert_relative_eq!(d.capital[1], 105.0, max_relative = 1e-14);
        assert_relative_eq!(d.capital[2], 110.25, max_relative = 1e-14);
        assert_relative_eq!(d.income[2], 11.025, max_relative = 1e-14);
        assert_relative_eq!(d.investment[2], 5.5125, max_relative = 1e-14);
    }

    #[test]
    fn discrete_zero_and_ten_years() {
        let d = discrete_trajectory(&canonical(), 0).unwrap();
        assert_eq!(d.capital, vec![100.0]);
        let mut k = 100.0;
        for _ in 0..10 {
            k *= 1.05;
        }
        let d = discrete_trajectory(&canonical(), 10).unwrap();
        assert_relative_eq!(d.capital[10], k, max_relative = 1e-14);
        assert!((d.capital[10] - 162.889).abs() < 1e-3);
    }

    #[test]
    fn discrete_horizon_cap() {
        assert!(matches!(
            discrete_trajectory(&canonical(), MAX_DISCRETE_YEARS + 1),
            Err(HarrodError::HorizonTooLong { .. })
        ));
        let fast = HarrodParams::new(0.99, 0.01, 1.0).unwrap();
        assert!(matches!(
            discrete_trajectory(&fast, 1000),
            Err(HarrodError::Overflow { .. })
        ));
    }

    #[test]
    fn contradiction_year_examples() {
        let p = HarrodParams::new(0.5, 10.0, 100.0).unwrap();
        assert_eq!(discrete_contradiction_year(&p, 1000), Some(63));
        assert_eq!(discrete_contradiction_year(&p, 10), None);
        let fast = HarrodParams::new(0.5, 1.0, 1.0).unwrap();
        assert_eq!(discrete_contradiction_year(&fast, 1000), Some(3));
        let est = contradiction_estimates(&p);
        assert_relative_eq!(est.reciprocal_rate, 20.0);
        assert!(est.geometric > 62.0 && est.geometric < 63.0);
    }

    #[test]
    fn exponential_baseline_values() {
        let g = Grid::new(0.0, 20.0, 21).unwrap();
        let e = exponential_baseline(&canonical(), &g);
        assert_eq!(e.capital[0], 100.0);
        assert_relative_eq!(e.capital[20], 100.0 * 1f64.exp(), max_relative = 1e-14);
        for (i, y) in e.investment.iter().zip(&e.income) {
            assert_relative_eq!(i / y, 0.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn continuous_closed_forms_at_t_equal_n() {
        let g = Grid::new(0.0, 10.0, 11).unwrap();
        let c = continuous_trajectory(&canonical(), &g).unwrap();
        assert_relative_eq!(c.capital[10], 200.0, max_relative = 1e-14);
        assert_relative_eq!(c.investment[10], 4.0 * 5.0, max_relative = 1e-14);
        assert_relative_eq!(c.income[10], 4.0 * 10.0, max_relative = 1e-14);
        assert_eq!(
            (c.capital[0], c.investment[0], c.income[0]),
            (100.0, 5.0, 10.0)
        );
    }

    #[test]
    fn continuous_rejects_nodes_past_crisis() {
        let g = Grid::new(0.0, 20.0, 5).unwrap();
        assert!(matches!(
            continuous_trajectory(&canonical(), &g),
            Err(HarrodError::BeyondCrisis { .. })
        ));
    }

    #[test]
    fn crisis_time_variants() {
        let p = canonical();
        let base = crisis_time(&p, CrisisVariant::Base, None, 1e3).unwrap();
        assert_eq!(base.t_crisis, Some(20.0));

        let cum = p.with_cumulation(0.1).unwrap();
        let r = crisis_time(&cum, CrisisVariant::Cumulative, None, 1e3).unwrap();
        let printed = -1.0 / (2.0 * 0.1) + (1.0_f64 / (4.0 * 0.01) + 1.0 / (0.05 * 0.1)).sqrt();
        assert_relative_eq!(r.t_crisis.unwrap(), 10.0, max_relative = 1e-14);
        assert_relative_eq!(r.t_crisis.unwrap(), printed, max_relative = 1e-14);

        let identity = |t: f64| t;
        let g = crisis_time(&p, CrisisVariant::GeneralizedF, Some(&identity), 1e3).unwrap();
        assert!((g.t_crisis.unwrap() - 20.0).abs() < 1e-9);
        let short = crisis_time(&p, CrisisVariant::GeneralizedF, Some(&identity), 5.0).unwrap();
        assert_eq!(short.t_crisis, None);
        assert!(crisis_time(&p, CrisisVariant::GeneralizedF, None, 1.0).is_err());

        let dep = p.with_depreciation(0.1).unwrap();
        let d = crisis_time(&dep, CrisisVariant::Depreciation, None, 1e3).unwrap();
        assert_eq!(d.t_crisis, Some(10.0));
    }

    #[test]
    fn cumulative_time_tends_to_base_as_rate_vanishes() {
        assert_relative_eq!(cumulative_blow_up(0.05, 0.0), 20.0);
        assert_relative_eq!(cumulative_blow_up(0.05, 1e-12), 20.0, max_relative = 1e-9);
    }

    #[test]
    fn base_ivp_matches_closed_form() {
        let g = Grid::new(0.0, 10.0, 10_001).unwrap();
        let tr = solve_variant_ivp(GrowthLaw::Base, &canonical(), &g, 1, DEFAULT_CEILING_FACTOR);
        assert!(tr.crisis.is_none());
        let k = *tr.capital.last().unwrap();
        assert_relative_eq!(k, 200.0, max_relative = 1e-10);
        // I = K' and Y = I/m follow the closed forms as well.
        assert_relative_eq!(*tr.investment.last().unwrap(), 20.0, max_relative = 1e-9);
        assert_relative_eq!(*tr.income.last().unwrap(), 40.0, max_relative = 1e-9);
    }

    #[test]
    fn depreciation_ivp_matches_factored_closed_form() {
        let p = canonical().with_depreciation(0.1).unwrap();
        let g = Grid::new(0.0, 5.0, 5_001).unwrap();
        let tr = solve_variant_ivp(GrowthLaw::Depreciation, &p, &g, 1, DEFAULT_CEILING_FACTOR);
        assert_relative_eq!(
            *tr.capital.last().unwrap(),
            100.0 / (0.5 * 0.75),
            max_relative = 1e-9
        );
    }

    #[test]
    fn constant_share_reduces_to_base() {
        let m = |_t: f64| 0.5;
        let g = Grid::new(0.0, 15.0, 3_001).unwrap();
        let tr = solve_variant_ivp(
            GrowthLaw::TimeVaryingShare(&m),
            &canonical(),
            &g,
            1,
            DEFAULT_CEILING_FACTOR,
        );
        for (t, k) in tr.t.iter().zip(&tr.capital) {
            assert_relative_eq!(*k, 100.0 / (1.0 - 0.05 * t), max_relative = 1e-9);
        }
    }

    #[test]
    fn base_ivp_flags_crisis_at_the_singular_node() {
        let g = Grid::new(0.0, 30.0, 301).unwrap();
        let tr = solve_variant_ivp(GrowthLaw::Base, &canonical(), &g, 1, DEFAULT_CEILING_FACTOR);
        let flag = tr.crisis.expect("crisis inside horizon");
        assert!((flag.t - 20.0).abs() <= g.step() + 1e-12, "{flag:?}");
        assert_eq!(tr.t.len(), flag.index);
    }

    #[test]
    fn ceiling_flags_blow_up() {
        let g = Grid::new(0.0, 19.9, 200).unwrap();
        let tr = solve_variant_ivp(GrowthLaw::Base, &canonical(), &g, 1, 10.0);
        assert_eq!(tr.crisis.unwrap().cause, CrisisCause::CeilingExceeded);
        assert!(tr.capital.iter().all(|k| *k <= 1000.0));
    }

    #[test]
    fn generalized_trajectory_stops_before_denominator_vanishes() {
        let f = |t: f64| t * t / 10.0;
        let g = Grid::new(0.0, 20.0, 21).unwrap();
        let (t, k) = generalized_trajectory(&canonical(), &f, &g);
        // f(t) = 20 at t = sqrt(200) ≈ 14.14
        assert_eq!(t.len(), 15);
        assert_relative_eq!(k[10], 100.0 / (1.0 - 0.05 * 10.0), max_relative = 1e-14);
    }
}
