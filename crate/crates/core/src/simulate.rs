//! Monte Carlo generator for item count surveys.
//!
//! Replicate `i` of a run with seed `s` draws from `ChaCha8Rng` seeded with
//! `s` on stream `i`, so every replicate can be regenerated on its own and
//! results do not depend on the thread schedule. Within a replicate the
//! subtraction group is drawn first, then the addition group; each
//! respondent draws `X` and then `Z`.

use crate::error::{check_prob, Error, Result};
use crate::exact::{ConfidenceSpec, ExactCi, Method};
use crate::model::{IctModel, ModelConfig};
use crate::planner::IntervalTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Above this mean the Poisson sampler switches from inversion to rejection.
const INVERSION_MAX_MEAN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub pi: f64,
    pub cfg: ModelConfig,
    pub replicates: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(pi: f64, cfg: ModelConfig, replicates: u64, seed: u64) -> Result<Self> {
        check_prob("pi", pi)?;
        if replicates == 0 {
            return Err(Error::Parameter {
                name: "replicates",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(Self {
            pi,
            cfg,
            replicates,
            seed,
        })
    }

    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

enum PoissonSampler {
    Inversion { exp_neg_mean: f64, mean: f64 },
    Rejection(Poisson<f64>),
}

impl PoissonSampler {
    fn new(mean: f64) -> Self {
        if mean <= INVERSION_MAX_MEAN {
            Self::Inversion {
                exp_neg_mean: (-mean).exp(),
                mean,
            }
        } else {
            Self::Rejection(Poisson::new(mean).expect("mean is positive and finite"))
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> i64 {
        match self {
            Self::Inversion { exp_neg_mean, mean } => {
                let u: f64 = rng.random();
                let mut k = 0i64;
                let mut p = *exp_neg_mean;
                let mut cdf = p;
                while u > cdf && p > 0.0 {
                    k += 1;
                    p *= mean / k as f64;
                    cdf += p;
                }
                k
            }
            Self::Rejection(d) => d.sample(rng) as i64,
        }
    }
}

/// One simulated survey with all reports kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReplicate {
    pub index: u64,
    /// Reports `Y₁ = X − Z` of the subtraction group.
    pub y1: Vec<i64>,
    /// Reports `Y₂ = X + Z` of the addition group.
    pub y2: Vec<i64>,
    pub z1_sum: u64,
    pub z2_sum: u64,
}

impl RawReplicate {
    /// The observed statistic `ΣY₂ − ΣY₁`.
    pub fn statistic(&self) -> i64 {
        self.y2.iter().sum::<i64>() - self.y1.iter().sum::<i64>()
    }
}

fn draw_group<R: Rng>(rng: &mut R, size: u64, pi: f64, x: &PoissonSampler, sign: i64, mut sink: impl FnMut(i64)) -> u64 {
    let mut z_sum = 0;
    for _ in 0..size {
        let xi = x.sample(rng);
        let zi = i64::from(rng.random::<f64>() < pi);
        z_sum += zi as u64;
        sink(xi + sign * zi);
    }
    z_sum
}

/// Observed statistic of replicate `index`.
pub fn gen_replicate(sim: &SimConfig, index: u64) -> i64 {
    let mut rng = sim.rng(index);
    let x = PoissonSampler::new(sim.cfg.lambda);
    let mut sum1 = 0i64;
    let mut sum2 = 0i64;
    draw_group(&mut rng, sim.cfg.n1, sim.pi, &x, -1, |y| sum1 += y);
    draw_group(&mut rng, sim.cfg.n2, sim.pi, &x, 1, |y| sum2 += y);
    sum2 - sum1
}

/// Replicate `index` with every report; consumes the same random stream as
/// [`gen_replicate`], so `statistic()` agrees with it.
pub fn gen_replicate_raw(sim: &SimConfig, index: u64) -> RawReplicate {
    let mut rng = sim.rng(index);
    let x = PoissonSampler::new(sim.cfg.lambda);
    let mut y1 = Vec::with_capacity(sim.cfg.n1 as usize);
    let mut y2 = Vec::with_capacity(sim.cfg.n2 as usize);
    let z1_sum = draw_group(&mut rng, sim.cfg.n1, sim.pi, &x, -1, |y| y1.push(y));
    let z2_sum = draw_group(&mut rng, sim.cfg.n2, sim.pi, &x, 1, |y| y2.push(y));
    RawReplicate {
        index,
        y1,
        y2,
        z1_sum,
        z2_sum,
    }
}

/// Statistics of all replicates, in replicate order.
pub fn simulate_statistics(sim: &SimConfig) -> Vec<i64> {
    (0..sim.replicates)
        .into_par_iter()
        .map(|i| gen_replicate(sim, i))
        .collect()
}

pub fn simulate_raw(sim: &SimConfig) -> Vec<RawReplicate> {
    (0..sim.replicates)
        .into_par_iter()
        .map(|i| gen_replicate_raw(sim, i))
        .collect()
}

/// Writes `replicate,group,y` rows; group 1 subtracts, group 2 adds.
pub fn write_raw_csv<W: Write>(mut w: W, reps: &[RawReplicate]) -> std::io::Result<()> {
    writeln!(w, "replicate,group,y")?;
    for r in reps {
        for y in &r.y1 {
            writeln!(w, "{},1,{y}", r.index)?;
        }
        for y in &r.y2 {
            writeln!(w, "{},2,{y}", r.index)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCoverage {
    pub method: Method,
    pub replicates: u64,
    pub coverage: f64,
    pub coverage_se: f64,
    pub mean_length: f64,
    pub length_se: f64,
}

/// Fraction of simulated intervals containing the true `π`, with binomial
/// standard error, and the mean interval length.
pub fn empirical_coverage(sim: &SimConfig, spec: ConfidenceSpec, method: Method) -> Result<EmpiricalCoverage> {
    let zs = simulate_statistics(sim);
    let lo = *zs.iter().min().expect("at least one replicate");
    let hi = *zs.iter().max().expect("at least one replicate");
    let table = match method {
        Method::Exact => {
            let model = IctModel::new(sim.cfg);
            IntervalTable::exact(&ExactCi::new(&model, spec), lo, hi)?
        }
        Method::Asymptotic => crate::asymptotic::asymptotic_table(spec, &sim.cfg, lo, hi)?,
    };
    let m = zs.len() as f64;
    let mut hits = 0u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &z in &zs {
        let i = (z - lo) as usize;
        hits += u64::from(table.covers(i, sim.pi));
        let len = table.length(i);
        sum += len;
        sum_sq += len * len;
    }
    let coverage = hits as f64 / m;
    let mean_length = sum / m;
    let var = if zs.len() > 1 {
        ((sum_sq - m * mean_length * mean_length) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(EmpiricalCoverage {
        method,
        replicates: sim.replicates,
        coverage,
        coverage_se: (coverage * (1.0 - coverage) / m).sqrt(),
        mean_length,
        length_se: (var / m).sqrt(),
    })
}
