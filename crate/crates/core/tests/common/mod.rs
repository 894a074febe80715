//! Reference computations that share no code with the library.
#![allow(dead_code)]

use ict_core::exact::{ConfidenceSpec, ExactCi};
use ict_core::model::{IctModel, ModelConfig};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};
use std::collections::BTreeMap;

pub fn poisson(k: i64, mean: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    Poisson::new(mean).unwrap().pmf(k as u64)
}

/// `P{X₊ − X₋ = k}` by summing the product of two Poisson masses.
pub fn skellam_conv(k: i64, mean_plus: f64, mean_minus: f64) -> f64 {
    let top = (mean_minus + 40.0 * mean_minus.sqrt() + 60.0) as i64;
    let start = (-k).max(0);
    (start..=top)
        .map(|j| poisson(j, mean_minus) * poisson(j + k, mean_plus))
        .sum()
}

pub fn binom(k: i64, n: u64, p: f64) -> f64 {
    if k < 0 || k as u64 > n {
        return 0.0;
    }
    let mut c = 1.0f64;
    for i in 0..k as u64 {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k as u64) as i32)
}

/// Distribution of `ΣY₂ − ΣY₁` for two respondents per group, by listing
/// every `(X, Z)` configuration with `X ≤ xmax`.
pub fn enumerate_two_by_two(lambda: f64, pi: f64, xmax: i64) -> BTreeMap<i64, f64> {
    let single: Vec<(i64, i64, f64)> = (0..=xmax)
        .flat_map(|x| {
            let px = poisson(x, lambda);
            [(x, 0, px * (1.0 - pi)), (x, 1, px * pi)]
        })
        .collect();
    let mut out = BTreeMap::new();
    for a in &single {
        for b in &single {
            for c in &single {
                for d in &single {
                    // a, b in the subtraction group; c, d in the addition group
                    let y = (c.0 + c.1) + (d.0 + d.1) - (a.0 - a.1) - (b.0 - b.1);
                    *out.entry(y).or_insert(0.0) += a.2 * b.2 * c.2 * d.2;
                }
            }
        }
    }
    out
}

/// `P{Y₁ = y}` for one subtraction-group report.
pub fn report1_pmf(y: i64, pi: f64, lambda: f64) -> f64 {
    (1.0 - pi) * poisson(y, lambda) + pi * poisson(y + 1, lambda)
}

/// `P{Y₂ = y}` for one addition-group report.
pub fn report2_pmf(y: i64, pi: f64, lambda: f64) -> f64 {
    (1.0 - pi) * poisson(y, lambda) + pi * poisson(y - 1, lambda)
}

/// Posterior `P{Z = 1 | Y = y}` by enumerating `(X, Z)` with `X ≤ 50`;
/// `sign = −1` for the subtraction group, `+1` for the addition group.
pub fn posterior_enumerated(y: i64, pi: f64, lambda: f64, sign: i64) -> f64 {
    let mut joint1 = 0.0;
    let mut total = 0.0;
    for x in 0..=50 {
        for z in 0..=1 {
            if x + sign * z == y {
                let p = poisson(x, lambda) * if z == 1 { pi } else { 1.0 - pi };
                total += p;
                if z == 1 {
                    joint1 += p;
                }
            }
        }
    }
    joint1 / total
}

/// Coverage at `π` from per-outcome intervals computed one at a time.
pub fn coverage_fresh(cfg: ModelConfig, gamma: f64, pi: f64, lo: i64, hi: i64) -> (f64, f64) {
    let model = IctModel::new(cfg);
    let ci = ExactCi::new(&model, ConfidenceSpec::new(gamma).unwrap());
    let mut cov = 0.0;
    let mut len = 0.0;
    for y in lo..=hi {
        let p = model.y_pmf(y, pi).unwrap();
        let r = ci.interval(y).unwrap();
        if r.lower <= pi && pi <= r.upper {
            cov += p;
            len += p * (r.upper - r.lower);
        }
    }
    (cov, len)
}

/// Pearson χ² p-value of observed counts against expected probabilities,
/// pooling cells with expected count below 5 into their neighbour.
pub fn chi_square_p(observed: &[u64], probs: &[f64]) -> (f64, usize) {
    let total: u64 = observed.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        acc.0 += o as f64;
        acc.1 += p * total as f64;
        if acc.1 >= 5.0 {
            cells.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += acc.0;
        last.1 += acc.1;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len() - 1;
    let p = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat);
    (p, df)
}
