//! Exact confidence interval for `π` by inverting the stochastically
//! ordered family `F_π`.
//!
//! `F_π(z)` is continuous and strictly decreasing in `π` wherever it lies in
//! `(0, 1)`, so each endpoint is the boundary of a set `[0, root]` and is
//! located by bisection on a fixed dyadic grid. Because the grid is fixed,
//! bounds learned from a neighbouring `z` only skip evaluations whose outcome
//! is already implied by monotonicity; warm-started tables therefore agree
//! bit for bit with single calls.

use crate::error::{check_open_prob, Error, Result};
use crate::model::{IctModel, ModelConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const BISECTION_TOL: f64 = 1e-9;
const MAX_ITER: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Asymptotic,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Asymptotic => "asymptotic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSpec {
    gamma: f64,
}

impl ConfidenceSpec {
    pub fn new(gamma: f64) -> Result<Self> {
        check_open_prob("gamma", gamma).map(|gamma| Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(1 + γ)/2`
    pub fn upper_quantile(&self) -> f64 {
        (1.0 + self.gamma) / 2.0
    }

    /// `(1 − γ)/2`
    pub fn lower_quantile(&self) -> f64 {
        (1.0 - self.gamma) / 2.0
    }
}

/// Which tail events are set to `(1 − γ)/2` when inverting `F_π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailRule {
    /// `P_{π_L}{Y ≥ z} = P_{π_R}{Y ≤ z} = (1 − γ)/2`. Coverage is at least `γ`
    /// for every `π`.
    #[default]
    Inclusive,
    /// `P_{π_L}{Y > z} = P_{π_R}{Y < z} = (1 − γ)/2`, i.e. `F_{π_L}(z) = (1+γ)/2`
    /// and `F_{π_R}(z⁻) = (1−γ)/2`. Shorter, but its coverage can drop below
    /// `γ` because `Y` is discrete.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalResult {
    pub lower: f64,
    pub upper: f64,
    pub length: f64,
    pub method: Method,
    pub observed: Option<i64>,
}

impl IntervalResult {
    pub fn new(lower: f64, upper: f64, method: Method, observed: Option<i64>) -> Self {
        Self {
            lower,
            upper,
            length: upper - lower,
            method,
            observed,
        }
    }

    /// Closed-interval membership.
    pub fn covers(&self, pi: f64) -> bool {
        self.lower <= pi && pi <= self.upper
    }
}

/// Largest `π` on the dyadic grid where a monotone predicate still holds.
///
/// `pred` must be true on `[0, root]` and false after. `known_true` is a point
/// already known to satisfy `pred`. Returns the final bracket `(lo, hi)` with
/// `pred(lo)` true and `pred(hi)` false, or `None` if `pred(0)` fails, or
/// `Some((1, 1))` if `pred(1)` holds.
fn dyadic_boundary<F>(pred: F, known_true: Option<f64>) -> Result<Option<(f64, f64)>>
where
    F: Fn(f64) -> Result<bool>,
{
    let known = known_true.unwrap_or(f64::NEG_INFINITY);
    let test = |p: f64| -> Result<bool> {
        if p <= known {
            Ok(true)
        } else {
            pred(p)
        }
    };
    if !test(0.0)? {
        return Ok(None);
    }
    if test(1.0)? {
        return Ok(Some((1.0, 1.0)));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..MAX_ITER {
        if hi - lo <= BISECTION_TOL {
            return Ok(Some((lo, hi)));
        }
        let mid = 0.5 * (lo + hi);
        if test(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numerical(format!(
        "bisection stalled at [{lo}, {hi}] after {MAX_ITER} iterations"
    )))
}

/// Exact interval engine bound to one precomputed model.
#[derive(Debug, Clone, Copy)]
pub struct ExactCi<'a> {
    model: &'a IctModel,
    spec: ConfidenceSpec,
    rule: TailRule,
}

/// Bisection state carried from one `z` to the next.
#[derive(Debug, Clone, Copy, Default)]
struct Warm {
    lower_true: Option<f64>,
    upper_true: Option<f64>,
}

impl<'a> ExactCi<'a> {
    pub fn new(model: &'a IctModel, spec: ConfidenceSpec) -> Self {
        Self::with_rule(model, spec, TailRule::Inclusive)
    }

    pub fn with_rule(model: &'a IctModel, spec: ConfidenceSpec, rule: TailRule) -> Self {
        Self { model, spec, rule }
    }

    pub fn spec(&self) -> ConfidenceSpec {
        self.spec
    }

    pub fn rule(&self) -> TailRule {
        self.rule
    }

    fn cdf(&self, z: i64, pi: f64) -> Result<f64> {
        let v = self.model.cdf_with_row(z, &self.model.row(pi));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!("F_pi({z}) is not finite at pi = {pi}")))
        }
    }

    fn solve(&self, z: i64, warm: Warm) -> Result<(IntervalResult, Warm)> {
        let (z_low, z_up) = match self.rule {
            TailRule::Inclusive => (z - 1, z),
            TailRule::Strict => (z, z - 1),
        };
        let hi_q = self.spec.upper_quantile();
        let lo_q = self.spec.lower_quantile();

        let lower = dyadic_boundary(|p| Ok(self.cdf(z_low, p)? >= hi_q), warm.lower_true)?;
        let upper = dyadic_boundary(|p| Ok(self.cdf(z_up, p)? > lo_q), warm.upper_true)?;

        // The lower endpoint takes the inner side of its bracket and the upper
        // endpoint the outer side, so the reported interval contains the
        // exact one.
        let (lower_val, lower_true) = match lower {
            None => (0.0, None),
            Some((lo, _)) => (lo, Some(lo)),
        };
        let (upper_val, upper_true) = match upper {
            None => (0.0, None),
            Some((lo, hi)) => (hi, Some(lo)),
        };
        let lower_val = lower_val.min(upper_val);
        Ok((
            IntervalResult::new(lower_val, upper_val, Method::Exact, Some(z)),
            Warm {
                lower_true,
                upper_true,
            },
        ))
    }

    pub fn interval(&self, z: i64) -> Result<IntervalResult> {
        self.solve(z, Warm::default()).map(|(r, _)| r)
    }

    /// One interval per `z` in `lo..=hi`. Endpoints are nondecreasing in `z`.
    pub fn table(&self, lo: i64, hi: i64) -> Result<Vec<IntervalResult>> {
        const CHUNK: i64 = 64;
        if hi < lo {
            return Ok(Vec::new());
        }
        let starts: Vec<i64> = (lo..=hi).step_by(CHUNK as usize).collect();
        let chunks: Vec<Result<Vec<IntervalResult>>> = starts
            .par_iter()
            .map(|&start| {
                let end = (start + CHUNK - 1).min(hi);
                let mut warm = Warm::default();
                let mut out = Vec::with_capacity((end - start + 1) as usize);
                for z in start..=end {
                    let (r, w) = self.solve(z, warm)?;
                    warm = w;
                    out.push(r);
                }
                Ok(out)
            })
            .collect();
        let mut out = Vec::with_capacity((hi - lo + 1) as usize);
        for c in chunks {
            out.extend(c?);
        }
        Ok(out)
    }
}

pub fn exact_ci(z: i64, spec: ConfidenceSpec, cfg: &ModelConfig) -> Result<IntervalResult> {
    let model = IctModel::new(*cfg);
    ExactCi::new(&model, spec).interval(z)
}

pub fn ci_table(
    spec: ConfidenceSpec,
    cfg: &ModelConfig,
    z_range: std::ops::RangeInclusive<i64>,
) -> Result<Vec<IntervalResult>> {
    let model = IctModel::new(*cfg);
    ExactCi::new(&model, spec).table(*z_range.start(), *z_range.end())
}
