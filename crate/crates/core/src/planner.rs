//! Sample-size determination from interval-length criteria.
//!
//! Both criteria weigh each outcome `y` by `P_π{Y = y}` and by whether its
//! interval covers `π` (closed endpoints):
//!
//! * expected length `E_π l = Σ_y l(y)·P_π{Y=y}·1{π ∈ [π_L(y), π_R(y)]}`,
//! * length quantile `P_π{l ≤ d} = Σ_y P_π{Y=y}·1{l(y) ≤ d}·1{π ∈ [π_L(y), π_R(y)]}`.
//!
//! A design of total size `n` (split `n/2`, `n/2`) satisfies the first
//! criterion when `sup_{π ≤ π₀} E_π l ≤ d`, and the second when
//! `inf_{π ≤ π₀} P_π{l ≤ d}/γ ≥ Λ`.

use crate::asymptotic::asymptotic_table;
use crate::curve::CurveTable;
use crate::error::{check_open_prob, check_prob, Error, Result};
use crate::exact::{ConfidenceSpec, ExactCi, IntervalResult, Method, TailRule};
use crate::model::{IctModel, ModelConfig};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Interval endpoints for every `y` in `lo..=hi`. An interval with
/// `lower > upper` is empty: it covers nothing and has length zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTable {
    pub lo: i64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub method: Method,
}

impl IntervalTable {
    pub fn from_results(lo: i64, results: &[IntervalResult], method: Method) -> Self {
        Self {
            lo,
            lower: results.iter().map(|r| r.lower).collect(),
            upper: results.iter().map(|r| r.upper).collect(),
            method,
        }
    }

    pub fn exact(ci: &ExactCi<'_>, lo: i64, hi: i64) -> Result<Self> {
        let results = ci.table(lo, hi)?;
        Ok(Self::from_results(lo, &results, Method::Exact))
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.lower.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn length(&self, i: usize) -> f64 {
        (self.upper[i] - self.lower[i]).max(0.0)
    }

    pub fn covers(&self, i: usize, pi: f64) -> bool {
        self.lower[i] <= pi && pi <= self.upper[i]
    }

    pub fn lengths(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.length(i)).collect()
    }
}

/// Coverage and length summaries at one `π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub pi: f64,
    pub coverage: f64,
    pub expected_length: f64,
    /// `P_π{l ≤ d, π covered}`, when a `d` was requested.
    pub quantile_prob: Option<f64>,
}

pub fn point_stats(model: &IctModel, table: &IntervalTable, pi: f64, d: Option<f64>) -> Result<PointStats> {
    check_prob("pi", pi)?;
    let pmf = model.pmf_range(pi, table.lo, table.hi())?;
    let mut coverage = 0.0;
    let mut expected_length = 0.0;
    let mut quantile = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        if !table.covers(i, pi) {
            continue;
        }
        let len = table.length(i);
        coverage += p;
        expected_length += p * len;
        if d.is_some_and(|d| len <= d) {
            quantile += p;
        }
    }
    Ok(PointStats {
        pi,
        coverage,
        expected_length,
        quantile_prob: d.map(|_| quantile),
    })
}

pub fn sweep(model: &IctModel, table: &IntervalTable, pis: &[f64], d: Option<f64>) -> Result<Vec<PointStats>> {
    pis.par_iter().map(|&pi| point_stats(model, table, pi, d)).collect()
}

/// `{step, 2·step, …} ∩ (0, upper]`, with `upper` itself always included.
pub fn pi_grid(upper: f64, step: f64) -> Vec<f64> {
    let count = (upper / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (1..=count).map(|i| i as f64 * step).collect();
    match grid.last() {
        Some(&last) if (upper - last).abs() <= 1e-12 => {
            *grid.last_mut().unwrap() = upper;
        }
        _ => grid.push(upper),
    }
    grid
}

/// Interval construction used by the planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Construction {
    Exact(TailRule),
    Asymptotic,
}

impl Construction {
    pub fn method(&self) -> Method {
        match self {
            Construction::Exact(_) => Method::Exact,
            Construction::Asymptotic => Method::Asymptotic,
        }
    }
}

impl Default for Construction {
    fn default() -> Self {
        Construction::Exact(TailRule::Inclusive)
    }
}

/// A model together with the interval table over its truncated support.
#[derive(Debug, Clone)]
pub struct Design {
    pub model: IctModel,
    pub table: IntervalTable,
    pub spec: ConfidenceSpec,
}

impl Design {
    pub fn build(cfg: ModelConfig, spec: ConfidenceSpec, pi_max: f64, eps: f64, how: Construction) -> Result<Self> {
        let model = IctModel::new(cfg);
        let support = model.build_support(pi_max, eps)?;
        let table = match how {
            Construction::Exact(rule) => {
                IntervalTable::exact(&ExactCi::with_rule(&model, spec, rule), support.lo, support.hi)?
            }
            Construction::Asymptotic => asymptotic_table(spec, &cfg, support.lo, support.hi)?,
        };
        Ok(Self { model, table, spec })
    }

    pub fn stats(&self, pi: f64, d: Option<f64>) -> Result<PointStats> {
        point_stats(&self.model, &self.table, pi, d)
    }

    pub fn sweep(&self, pis: &[f64], d: Option<f64>) -> Result<Vec<PointStats>> {
        sweep(&self.model, &self.table, pis, d)
    }
}

pub fn expected_length(pi: f64, spec: ConfidenceSpec, cfg: &ModelConfig) -> Result<f64> {
    let design = Design::build(*cfg, spec, pi.max(1e-12), 1e-10, Construction::default())?;
    Ok(design.stats(pi, None)?.expected_length)
}

pub fn length_quantile_prob(pi: f64, d: f64, spec: ConfidenceSpec, cfg: &ModelConfig) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Parameter {
            name: "d",
            value: d,
            reason: "must be positive",
        });
    }
    let design = Design::build(*cfg, spec, pi.max(1e-12), 1e-10, Construction::default())?;
    Ok(design.stats(pi, Some(d))?.quantile_prob.unwrap_or(0.0))
}

pub fn coverage_exact(pi: f64, spec: ConfidenceSpec, cfg: &ModelConfig) -> Result<f64> {
    let design = Design::build(*cfg, spec, pi.max(1e-12), 1e-10, Construction::default())?;
    Ok(design.stats(pi, None)?.coverage)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthCriterion {
    ExpectedLength { d: f64 },
    QuantileLength { d: f64, level: f64 },
}

impl LengthCriterion {
    pub fn expected(d: f64) -> Result<Self> {
        Ok(Self::ExpectedLength {
            d: check_open_prob("d", d)?,
        })
    }

    pub fn quantile(d: f64, level: f64) -> Result<Self> {
        Ok(Self::QuantileLength {
            d: check_open_prob("d", d)?,
            level: check_open_prob("level", level)?,
        })
    }

    pub fn d(&self) -> f64 {
        match *self {
            Self::ExpectedLength { d } | Self::QuantileLength { d, .. } => d,
        }
    }

    /// Per-`π` value entering the sup/inf.
    fn value(&self, s: &PointStats, gamma: f64) -> f64 {
        match self {
            Self::ExpectedLength { .. } => s.expected_length,
            Self::QuantileLength { .. } => s.quantile_prob.unwrap_or(0.0) / gamma,
        }
    }

    /// Worst value over the grid and the `π` where it is attained.
    fn worst(&self, stats: &[PointStats], gamma: f64) -> (f64, f64) {
        let mut best = (f64::NAN, f64::NAN);
        for s in stats {
            let v = self.value(s, gamma);
            let worse = match self {
                Self::ExpectedLength { .. } => !(v <= best.0),
                Self::QuantileLength { .. } => !(v >= best.0),
            };
            if best.0.is_nan() || worse {
                best = (v, s.pi);
            }
        }
        best
    }

    fn holds(&self, worst: f64) -> bool {
        match *self {
            Self::ExpectedLength { d } => worst <= d,
            Self::QuantileLength { level, .. } => worst >= level,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    pub pi_step: f64,
    pub n_start: u64,
    pub n_cap: u64,
    pub support_eps: f64,
    pub construction: Construction,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            pi_step: 1e-3,
            n_start: 2,
            n_cap: 200_000,
            support_eps: 1e-10,
            construction: Construction::default(),
        }
    }
}

/// Criterion evaluated at one sample size.
#[derive(Debug, Clone)]
pub struct CriterionEval {
    pub n: u64,
    pub value: f64,
    pub binding_pi: f64,
    pub holds: bool,
    pub stats: Vec<PointStats>,
}

pub fn evaluate_criterion(
    n: u64,
    lambda: f64,
    criterion: &LengthCriterion,
    spec: ConfidenceSpec,
    pi0: f64,
    opts: &PlanOptions,
) -> Result<CriterionEval> {
    let cfg = ModelConfig::equal_split(n, lambda)?;
    let design = Design::build(cfg, spec, pi0, opts.support_eps, opts.construction)?;
    let grid = pi_grid(pi0, opts.pi_step);
    let d = match criterion {
        LengthCriterion::QuantileLength { d, .. } => Some(*d),
        LengthCriterion::ExpectedLength { .. } => None,
    };
    let stats = design.sweep(&grid, d)?;
    let (value, binding_pi) = criterion.worst(&stats, spec.gamma());
    let holds = criterion.holds(value);
    info!("n = {n}: criterion value {value:.6} at pi = {binding_pi} ({})", if holds { "holds" } else { "fails" });
    Ok(CriterionEval {
        n,
        value,
        binding_pi,
        holds,
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub n: u64,
    pub criterion_value_at_n: f64,
    pub binding_pi: f64,
    /// Criterion value at `n − 2`, if `n > 2`.
    pub criterion_value_below: Option<f64>,
    pub profile: CurveTable,
}

/// Smallest even `n` whose design meets `criterion` for every `π` on the
/// grid over `(0, π₀]`. Brackets by doubling, then bisects on even sizes.
pub fn min_n(
    criterion: &LengthCriterion,
    spec: ConfidenceSpec,
    lambda: f64,
    pi0: f64,
    opts: &PlanOptions,
) -> Result<PlanResult> {
    check_open_prob("pi0", pi0)?;
    let n_start = opts.n_start.max(2) + opts.n_start.max(2) % 2;
    let eval = |n: u64| evaluate_criterion(n, lambda, criterion, spec, pi0, opts);

    let mut failing: Option<CriterionEval> = None;
    let mut n = n_start;
    let mut holding = loop {
        let e = eval(n)?;
        if e.holds {
            break e;
        }
        if n >= opts.n_cap {
            return Err(Error::Infeasible(format!(
                "criterion not met at the cap n = {n}: worst value {} at pi = {}",
                e.value, e.binding_pi
            )));
        }
        failing = Some(e);
        n = (n * 2).min(opts.n_cap);
    };

    if let Some(mut fail) = failing {
        while holding.n - fail.n > 2 {
            let mid = (fail.n + holding.n) / 2;
            let mid = mid - mid % 2;
            let e = eval(mid)?;
            if e.holds {
                holding = e;
            } else {
                fail = e;
            }
        }
        // The bracket ends with fail.n == holding.n − 2, so the returned size
        // is verified on both sides even when the criterion jitters in n.
        debug_assert_eq!(fail.n + 2, holding.n);
        return Ok(finish(holding, Some(fail.value), criterion, spec, lambda, pi0));
    }
    let below = if holding.n > 2 {
        Some(eval(holding.n - 2)?.value)
    } else {
        None
    };
    Ok(finish(holding, below, criterion, spec, lambda, pi0))
}

fn finish(
    e: CriterionEval,
    below: Option<f64>,
    criterion: &LengthCriterion,
    spec: ConfidenceSpec,
    lambda: f64,
    pi0: f64,
) -> PlanResult {
    let gamma = spec.gamma();
    let mut profile = CurveTable::new()
        .with_meta("n", e.n)
        .with_meta("lambda", lambda)
        .with_meta("gamma", gamma)
        .with_meta("pi0", pi0)
        .with_meta("criterion", serde_json::to_value(criterion).expect("serialisable"));
    profile
        .push_column("pi", e.stats.iter().map(|s| s.pi).collect())
        .and_then(|_| profile.push_column("value", e.stats.iter().map(|s| criterion.value(s, gamma)).collect()))
        .and_then(|_| profile.push_column("coverage", e.stats.iter().map(|s| s.coverage).collect()))
        .expect("columns share the grid length");
    PlanResult {
        n: e.n,
        criterion_value_at_n: e.value,
        binding_pi: e.binding_pi,
        criterion_value_below: below,
        profile,
    }
}

/// Expected length at `π` for each `λ` in `lambdas`.
pub fn length_vs_lambda_curve(pi: f64, n: u64, spec: ConfidenceSpec, lambdas: &[f64]) -> Result<CurveTable> {
    check_prob("pi", pi)?;
    let values = lambdas
        .iter()
        .map(|&lambda| {
            let cfg = ModelConfig::equal_split(n, lambda)?;
            let design = Design::build(cfg, spec, pi.max(1e-12), 1e-10, Construction::default())?;
            Ok(design.stats(pi, None)?.expected_length)
        })
        .collect::<Result<Vec<f64>>>()?;
    CurveTable::new()
        .with_meta("pi", pi)
        .with_meta("n", n)
        .with_meta("gamma", spec.gamma())
        .with_column("lambda", lambdas.to_vec())?
        .with_column("expected_length", values)
}

/// Interval endpoints and lengths as a function of the observed `y`.
pub fn length_profile(table: &IntervalTable) -> Result<CurveTable> {
    let ys: Vec<f64> = (table.lo..=table.hi()).map(|y| y as f64).collect();
    CurveTable::new()
        .with_meta("method", table.method.to_string())
        .with_column("y", ys)?
        .with_column("lower", table.lower.clone())?
        .with_column("upper", table.upper.clone())?
        .with_column("length", table.lengths())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_upper() {
        let g = pi_grid(0.1, 1e-3);
        assert_eq!(g.len(), 100);
        assert_eq!(*g.last().unwrap(), 0.1);
        let g = pi_grid(0.0025, 1e-3);
        assert_eq!(g, vec![0.001, 0.002, 0.0025]);
    }

    #[test]
    fn empty_indicator_gives_zero() {
        let cfg = ModelConfig::equal_split(2, 0.5).unwrap();
        let model = IctModel::new(cfg);
        // intervals that all sit above 0.5
        let table = IntervalTable {
            lo: -5,
            lower: vec![0.6; 20],
            upper: vec![0.9; 20],
            method: Method::Exact,
        };
        let s = point_stats(&model, &table, 0.3, Some(1.0)).unwrap();
        assert_eq!(s.expected_length, 0.0);
        assert_eq!(s.coverage, 0.0);
        assert_eq!(s.quantile_prob, Some(0.0));
    }

    #[test]
    fn quantile_limits() {
        let spec = ConfidenceSpec::new(0.95).unwrap();
        let cfg = ModelConfig::equal_split(40, 0.5).unwrap();
        let design = Design::build(cfg, spec, 1.0, 1e-10, Construction::default()).unwrap();
        let s = design.stats(0.3, Some(1.0)).unwrap();
        assert_eq!(s.quantile_prob.unwrap(), s.coverage);
        let min_len = design.table.lengths().into_iter().fold(f64::INFINITY, f64::min);
        let s = design.stats(0.3, Some(min_len * 0.5)).unwrap();
        assert_eq!(s.quantile_prob.unwrap(), 0.0);
    }

    #[test]
    fn odd_n_rejected() {
        let spec = ConfidenceSpec::new(0.95).unwrap();
        let c = LengthCriterion::expected(0.2).unwrap();
        assert!(evaluate_criterion(31, 0.5, &c, spec, 0.1, &PlanOptions::default()).is_err());
    }

    #[test]
    fn min_n_small_target_is_minimal() {
        let spec = ConfidenceSpec::new(0.95).unwrap();
        let c = LengthCriterion::expected(0.3).unwrap();
        let opts = PlanOptions::default();
        let plan = min_n(&c, spec, 0.5, 0.2, &opts).unwrap();
        assert!(plan.criterion_value_at_n <= 0.3);
        let below = plan.criterion_value_below.unwrap();
        assert!(below > 0.3);
        assert_eq!(plan.profile.rows(), 200);
    }

    #[test]
    fn min_n_cap_reports_infeasible() {
        let spec = ConfidenceSpec::new(0.95).unwrap();
        let c = LengthCriterion::expected(0.01).unwrap();
        let opts = PlanOptions {
            n_cap: 64,
            ..PlanOptions::default()
        };
        assert!(matches!(min_n(&c, spec, 0.5, 0.1, &opts), Err(Error::Infeasible(_))));
    }
}
