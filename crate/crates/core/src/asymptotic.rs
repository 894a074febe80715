//! Method-of-moments estimator and the normal-approximation interval.

use crate::curve::CurveTable;
use crate::error::{check_prob, Error, Result};
use crate::exact::{ConfidenceSpec, IntervalResult, Method};
use crate::model::{IctModel, ModelConfig};
use crate::normal::normal_quantile;
use crate::planner::{pi_grid, Construction, Design, IntervalTable};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmEstimate {
    pub pi_hat: f64,
    pub ybar1: f64,
    pub ybar2: f64,
}

/// `π̂ = (Ȳ⁽²⁾ − Ȳ⁽¹⁾)/2`, unclamped.
pub fn mm_estimate(ybar1: f64, ybar2: f64) -> MmEstimate {
    MmEstimate {
        pi_hat: 0.5 * (ybar2 - ybar1),
        ybar1,
        ybar2,
    }
}

/// `V(π̂) = ¼(1/n₁ + 1/n₂)(λ + π(1 − π))`.
pub fn mm_variance(pi: f64, cfg: &ModelConfig) -> Result<f64> {
    check_prob("pi", pi)?;
    let inv = 1.0 / cfg.n1 as f64 + 1.0 / cfg.n2 as f64;
    Ok(0.25 * inv * (cfg.lambda + pi * (1.0 - pi)))
}

/// Unclamped roots of `(π̂ − π)² ≤ u²·V(π)` for a balanced design of total
/// size `n`; `None` when the quadratic has no real roots.
fn raw_bounds(pi_hat: f64, u: f64, n: f64, lambda: f64) -> Option<(f64, f64)> {
    let u2 = u * u;
    let disc = u2 + 4.0 * lambda * (u2 + n) + 4.0 * n * pi_hat * (1.0 - pi_hat);
    if disc < 0.0 {
        return None;
    }
    let center = 2.0 * pi_hat * n + u2;
    let half = u * disc.sqrt();
    let denom = 2.0 * (n + u2);
    Some(((center - half) / denom, (center + half) / denom))
}

fn balanced_total(cfg: &ModelConfig) -> Result<f64> {
    if cfg.is_balanced() {
        Ok(cfg.total() as f64)
    } else {
        Err(Error::Domain(format!(
            "asymptotic interval needs equal groups, got n1 = {}, n2 = {}",
            cfg.n1, cfg.n2
        )))
    }
}

/// Normal-approximation interval, clamped to `[0, 1]`.
pub fn asymptotic_ci(pi_hat: f64, spec: ConfidenceSpec, cfg: &ModelConfig) -> Result<IntervalResult> {
    let n = balanced_total(cfg)?;
    let u = normal_quantile(spec.upper_quantile())?;
    let (lo, hi) = raw_bounds(pi_hat, u, n, cfg.lambda).ok_or_else(|| {
        Error::Numerical(format!("negative discriminant at pi_hat = {pi_hat}"))
    })?;
    Ok(IntervalResult::new(
        lo.clamp(0.0, 1.0),
        hi.clamp(0.0, 1.0),
        Method::Asymptotic,
        None,
    ))
}

/// Interval for the observed total `z`, using `π̂ = z/n` (equal groups).
pub fn asymptotic_ci_for_z(z: i64, spec: ConfidenceSpec, cfg: &ModelConfig) -> Result<IntervalResult> {
    let n = balanced_total(cfg)?;
    let mut r = asymptotic_ci(z as f64 / n, spec, cfg)?;
    r.observed = Some(z);
    Ok(r)
}

/// Asymptotic intervals for every `z` in `lo..=hi`. Outcomes whose quadratic
/// has no real roots get an empty interval.
pub fn asymptotic_table(spec: ConfidenceSpec, cfg: &ModelConfig, lo: i64, hi: i64) -> Result<IntervalTable> {
    let n = balanced_total(cfg)?;
    let u = normal_quantile(spec.upper_quantile())?;
    let len = (hi - lo + 1).max(0) as usize;
    let mut lower = Vec::with_capacity(len);
    let mut upper = Vec::with_capacity(len);
    for z in lo..=hi {
        match raw_bounds(z as f64 / n, u, n, cfg.lambda) {
            Some((a, b)) => {
                lower.push(a.clamp(0.0, 1.0));
                upper.push(b.clamp(0.0, 1.0));
            }
            None => {
                lower.push(1.0);
                upper.push(0.0);
            }
        }
    }
    Ok(IntervalTable {
        lo,
        lower,
        upper,
        method: Method::Asymptotic,
    })
}

/// Exact coverage probability of the asymptotic interval at `π`.
pub fn coverage_asymptotic(pi: f64, spec: ConfidenceSpec, cfg: &ModelConfig) -> Result<f64> {
    check_prob("pi", pi)?;
    let model = IctModel::new(*cfg);
    let support = model.build_support(pi.max(1e-12), 1e-10)?;
    let table = asymptotic_table(spec, cfg, support.lo, support.hi)?;
    Ok(crate::planner::point_stats(&model, &table, pi, None)?.coverage)
}

/// The two planning maps `π ↦ E_π l` and `π ↦ P_π{l ≤ d}` over `(0, π₀]`
/// for each `n`, computed with asymptotic interval lengths.
pub fn asymptotic_plan_curves(
    lambda: f64,
    n_list: &[u64],
    d: f64,
    spec: ConfidenceSpec,
    pi0: f64,
    pi_step: f64,
) -> Result<(CurveTable, CurveTable)> {
    let grid = pi_grid(pi0, pi_step);
    let mut expected = base_table(lambda, d, spec, pi0, "expected_length");
    let mut quantile = base_table(lambda, d, spec, pi0, "length_quantile_prob");
    expected.push_column("pi", grid.clone())?;
    quantile.push_column("pi", grid.clone())?;
    for &n in n_list {
        let cfg = ModelConfig::equal_split(n, lambda)?;
        let design = Design::build(cfg, spec, pi0, 1e-10, Construction::Asymptotic)?;
        let stats = design.sweep(&grid, Some(d))?;
        expected.push_column(&format!("n={n}"), stats.iter().map(|s| s.expected_length).collect())?;
        quantile.push_column(
            &format!("n={n}"),
            stats.iter().map(|s| s.quantile_prob.unwrap_or(0.0)).collect(),
        )?;
    }
    Ok((expected, quantile))
}

fn base_table(lambda: f64, d: f64, spec: ConfidenceSpec, pi0: f64, quantity: &str) -> CurveTable {
    CurveTable::new()
        .with_meta("method", "asymptotic")
        .with_meta("quantity", quantity)
        .with_meta("lambda", lambda)
        .with_meta("d", d)
        .with_meta("gamma", spec.gamma())
        .with_meta("pi0", pi0)
}
