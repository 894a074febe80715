//! Disclosure risk of the sensitive answer and the smallest admissible `λ`.
//!
//! A respondent with `Z = 1` is protected when the posterior `P{Z=1 | Y}`
//! stays at or below `τ`. In the subtraction group this holds iff `Y₁ ≥ V`,
//! in the addition group iff `Y₂ ≤ W`, where
//! `V = λ(1/τ−1)/(1/π−1) − 1` and `W = λ(1/π−1)/(1/τ−1)`.

use crate::dist::{PoissonParams, PoissonTable};
use crate::error::{check_open_prob, check_positive, Error, Result};
use crate::planner::pi_grid;
use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacySpec {
    delta: f64,
    tau: f64,
    pi0: f64,
}

impl PrivacySpec {
    pub fn new(delta: f64, tau: f64, pi0: f64) -> Result<Self> {
        check_open_prob("delta", delta)?;
        check_open_prob("tau", tau)?;
        check_open_prob("pi0", pi0)?;
        if pi0 > 0.5 {
            return Err(Error::Parameter {
                name: "pi0",
                value: pi0,
                reason: "must not exceed 0.5",
            });
        }
        Ok(Self { delta, tau, pi0 })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyThresholds {
    pub v: f64,
    pub w: f64,
}

impl PrivacyThresholds {
    pub fn new(pi: f64, lambda: f64, tau: f64) -> Result<Self> {
        check_open_prob("pi", pi)?;
        check_positive("lambda", lambda)?;
        check_open_prob("tau", tau)?;
        Ok(Self::raw(pi, lambda, tau))
    }

    fn raw(pi: f64, lambda: f64, tau: f64) -> Self {
        let odds_pi = 1.0 / pi - 1.0;
        let odds_tau = 1.0 / tau - 1.0;
        Self {
            v: lambda * odds_tau / odds_pi - 1.0,
            w: lambda * odds_pi / odds_tau,
        }
    }
}

fn check_model(pi: f64, lambda: f64) -> Result<()> {
    check_open_prob("pi", pi)?;
    check_positive("lambda", lambda)?;
    Ok(())
}

/// `P{Z = 1 | Y₁ = y₁}` in the subtraction group.
pub fn disclosure_prob_group1(y1: i64, pi: f64, lambda: f64) -> Result<f64> {
    check_model(pi, lambda)?;
    if y1 < -1 {
        return Err(Error::Domain(format!("report y1 = {y1} is impossible")));
    }
    Ok(1.0 / (1.0 + (y1 + 1) as f64 / lambda * (1.0 / pi - 1.0)))
}

/// `P{Z = 1 | Y₂ = y₂}` in the addition group.
pub fn disclosure_prob_group2(y2: i64, pi: f64, lambda: f64) -> Result<f64> {
    check_model(pi, lambda)?;
    if y2 < 0 {
        return Err(Error::Domain(format!("report y2 = {y2} is impossible")));
    }
    if y2 == 0 {
        return Ok(0.0);
    }
    Ok(1.0 / (1.0 + lambda / y2 as f64 * (1.0 / pi - 1.0)))
}

fn ceil_index(v: f64) -> i64 {
    v.ceil().clamp(-2.0, i64::MAX as f64 / 2.0) as i64
}

fn floor_index(w: f64) -> i64 {
    w.floor().clamp(-1.0, i64::MAX as f64 / 2.0) as i64
}

/// `P{Y₁ ≥ V} = 1 − F(⌈V⌉ − 1) − π·P(⌈V⌉)`.
fn group1_with(table: &PoissonTable, pi: f64, v: f64) -> f64 {
    let c = ceil_index(v);
    (1.0 - table.cdf(c - 1) - pi * table.pmf(c)).clamp(0.0, 1.0)
}

/// `P{Y₂ ≤ W} = F(⌊W⌋ − 1) + (1 − π)·P(⌊W⌋)`.
fn group2_with(table: &PoissonTable, pi: f64, w: f64) -> f64 {
    let m = floor_index(w);
    (table.cdf(m - 1) + (1.0 - pi) * table.pmf(m)).clamp(0.0, 1.0)
}

/// Probability that a group-1 report keeps the disclosure risk at most `τ`.
pub fn protection_prob_group1(pi: f64, lambda: f64, tau: f64) -> Result<f64> {
    let t = PrivacyThresholds::new(pi, lambda, tau)?;
    let table = PoissonTable::new(&PoissonParams::new(lambda)?);
    Ok(group1_with(&table, pi, t.v))
}

/// Probability that a group-2 report keeps the disclosure risk at most `τ`.
pub fn protection_prob_group2(pi: f64, lambda: f64, tau: f64) -> Result<f64> {
    let t = PrivacyThresholds::new(pi, lambda, tau)?;
    let table = PoissonTable::new(&PoissonParams::new(lambda)?);
    Ok(group2_with(&table, pi, t.w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Subtraction,
    Addition,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Subtraction => "subtraction",
            Group::Addition => "addition",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub lambda: f64,
    pub feasible: bool,
    /// Smallest protection probability found on the `π` grid.
    pub worst_protection: f64,
    pub binding_pi: f64,
    pub binding_group: Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyConfig {
    pub pi_step: f64,
    pub lambda_step: f64,
    pub lambda_cap: f64,
    /// Width of the final bisection bracket around `λ_min`.
    pub refine_tol: f64,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        Self {
            pi_step: 1e-3,
            lambda_step: 1e-3,
            lambda_cap: 100.0,
            refine_tol: 1e-7,
        }
    }
}

fn feasibility_on(lambda: f64, spec: &PrivacySpec, grid: &[f64]) -> Feasibility {
    let table = PoissonTable::new(&PoissonParams::new(lambda).expect("lambda is positive"));
    let mut worst = (f64::INFINITY, f64::NAN, Group::Subtraction);
    for &pi in grid {
        let t = PrivacyThresholds::raw(pi, lambda, spec.tau);
        let g1 = group1_with(&table, pi, t.v);
        let g2 = group2_with(&table, pi, t.w);
        if g1 < worst.0 {
            worst = (g1, pi, Group::Subtraction);
        }
        if g2 < worst.0 {
            worst = (g2, pi, Group::Addition);
        }
    }
    Feasibility {
        lambda,
        feasible: worst.0 >= spec.delta,
        worst_protection: worst.0,
        binding_pi: worst.1,
        binding_group: worst.2,
    }
}

/// Checks both protection probabilities against `δ` at every `π` on the grid
/// over `(0, π₀]`.
pub fn privacy_feasible(lambda: f64, spec: &PrivacySpec, cfg: &PrivacyConfig) -> Result<Feasibility> {
    check_positive("lambda", lambda)?;
    check_positive("pi_step", cfg.pi_step)?;
    Ok(feasibility_on(lambda, spec, &pi_grid(spec.pi0, cfg.pi_step)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaMin {
    pub lambda_min: f64,
    /// Diagnostics at the returned `λ`.
    pub at_min: Feasibility,
    /// Feasible stretches of the `λ` grid that end before `λ_min`.
    pub earlier_feasible_runs: usize,
}

/// Smallest `λ` from which the design stays feasible for every larger grid
/// value up to the cap. Feasibility can switch on and off as `λ` grows
/// because `⌈V⌉` and `⌊W⌋` jump, so the whole grid is scanned and the answer
/// is the start of the last feasible run, refined inside its grid cell by
/// bisection.
pub fn lambda_min(spec: &PrivacySpec, cfg: &PrivacyConfig) -> Result<LambdaMin> {
    check_positive("lambda_step", cfg.lambda_step)?;
    check_positive("lambda_cap", cfg.lambda_cap)?;
    check_positive("pi_step", cfg.pi_step)?;
    let grid = pi_grid(spec.pi0, cfg.pi_step);
    let steps = (cfg.lambda_cap / cfg.lambda_step + 1e-9).floor() as usize;
    let flags: Vec<bool> = (1..=steps)
        .into_par_iter()
        .map(|i| feasibility_on(i as f64 * cfg.lambda_step, spec, &grid).feasible)
        .collect();
    let first_in_run = match flags.iter().rposition(|&f| !f) {
        None => 0,
        Some(i) if i + 1 == flags.len() => {
            let worst = feasibility_on(cfg.lambda_cap, spec, &grid);
            return Err(Error::Infeasible(format!(
                "no feasible lambda up to {}: protection {} at pi = {} ({} group)",
                cfg.lambda_cap, worst.worst_protection, worst.binding_pi, worst.binding_group
            )));
        }
        Some(i) => i + 1,
    };
    let earlier_feasible_runs = flags[..first_in_run]
        .windows(2)
        .filter(|w| w[0] && !w[1])
        .count();
    if earlier_feasible_runs > 0 {
        info!("feasibility is not monotone in lambda: {earlier_feasible_runs} earlier feasible run(s)");
    }

    let grid_lambda = |i: usize| (i + 1) as f64 * cfg.lambda_step;
    let mut hi = grid_lambda(first_in_run);
    let mut lo = if first_in_run == 0 { 0.0 } else { grid_lambda(first_in_run - 1) };
    while hi - lo > cfg.refine_tol {
        let mid = 0.5 * (lo + hi);
        if mid > 0.0 && feasibility_on(mid, spec, &grid).feasible {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    debug!("lambda_min bracket [{lo}, {hi}]");
    Ok(LambdaMin {
        lambda_min: hi,
        at_min: feasibility_on(hi, spec, &grid),
        earlier_feasible_runs,
    })
}
