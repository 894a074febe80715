//! Law of the observed statistic `Y = ΣY₂ᵢ − ΣY₁ᵢ = ξ + η`, where
//! `ξ ~ Skellam(n₂λ, n₁λ)` collects the neutral answers and
//! `η ~ Bin(n₁ + n₂, π)` the sensitive ones.

use crate::dist::{BinomialRow, SkellamParams, SkellamTable, Truncation};
use crate::error::{check_positive, check_prob, Error, Result};
use serde::{Deserialize, Serialize};

/// One item-count design: group sizes and the neutral-question mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n1: u64,
    pub n2: u64,
    pub lambda: f64,
}

impl ModelConfig {
    pub fn new(n1: u64, n2: u64, lambda: f64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::Parameter {
                name: "group size",
                value: n1.min(n2) as f64,
                reason: "both groups need at least one respondent",
            });
        }
        check_positive("lambda", lambda)?;
        Ok(Self { n1, n2, lambda })
    }

    /// `n₁ = n₂ = n/2`; `n` must be even.
    pub fn equal_split(n: u64, lambda: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::Parameter {
                name: "n",
                value: n as f64,
                reason: "total sample size must be even and at least 2",
            });
        }
        Self::new(n / 2, n / 2, lambda)
    }

    pub fn total(&self) -> u64 {
        self.n1 + self.n2
    }

    pub fn is_balanced(&self) -> bool {
        self.n1 == self.n2
    }

    pub fn skellam(&self) -> SkellamParams {
        SkellamParams::new(self.n2 as f64 * self.lambda, self.n1 as f64 * self.lambda)
            .expect("validated config")
    }
}

/// Truncated support `[lo, hi]` of `Y` with its pmf at the reference `π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSupport {
    pub lo: i64,
    pub hi: i64,
    pub reference_pi: f64,
    pub pmf_table: Vec<f64>,
}

impl StatisticSupport {
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn contains(&self, y: i64) -> bool {
        (self.lo..=self.hi).contains(&y)
    }
}

/// Precomputed Skellam table for one design; every query is read-only.
#[derive(Debug, Clone)]
pub struct IctModel {
    cfg: ModelConfig,
    skellam: SkellamTable,
}

impl IctModel {
    pub fn new(cfg: ModelConfig) -> Self {
        Self::with_truncation(cfg, &Truncation::default())
    }

    pub fn with_truncation(cfg: ModelConfig, trunc: &Truncation) -> Self {
        let skellam = SkellamTable::new(&cfg.skellam(), trunc);
        Self { cfg, skellam }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn skellam(&self) -> &SkellamTable {
        &self.skellam
    }

    pub(crate) fn row(&self, pi: f64) -> BinomialRow {
        BinomialRow::new(self.cfg.total(), pi)
    }

    /// `Σ_k G(z − k)·b(k)` over the binomial row, ascending `k`.
    pub(crate) fn cdf_with_row(&self, z: i64, row: &BinomialRow) -> f64 {
        let sk = &self.skellam;
        let mut acc = 0.0;
        for (i, &b) in row.pmf.iter().enumerate() {
            let k = (row.lo + i) as i64;
            let g = sk.cdf(z - k);
            if g == 0.0 {
                break;
            }
            acc += g * b;
        }
        acc.clamp(0.0, 1.0)
    }

    /// `F_π(z) = P_π{Y ≤ z}`.
    pub fn mixture_cdf(&self, z: i64, pi: f64) -> Result<f64> {
        check_prob("pi", pi)?;
        Ok(self.cdf_with_row(z, &self.row(pi)))
    }

    /// `F_π(z⁻) = P_π{Y < z} = F_π(z − 1)`.
    pub fn mixture_cdf_strict(&self, z: i64, pi: f64) -> Result<f64> {
        self.mixture_cdf(z - 1, pi)
    }

    pub fn y_pmf(&self, y: i64, pi: f64) -> Result<f64> {
        check_prob("pi", pi)?;
        let row = self.row(pi);
        Ok(row
            .pmf
            .iter()
            .enumerate()
            .map(|(i, &b)| b * self.skellam.pmf(y - (row.lo + i) as i64))
            .sum())
    }

    /// `P_π{Y = y}` for every `y` in `lo..=hi`.
    pub fn pmf_range(&self, pi: f64, lo: i64, hi: i64) -> Result<Vec<f64>> {
        check_prob("pi", pi)?;
        let row = self.row(pi);
        let mut out = vec![0.0; (hi - lo + 1).max(0) as usize];
        let sk = self.skellam.pmf_slice();
        let sk_lo = self.skellam.lo();
        for (i, &b) in row.pmf.iter().enumerate() {
            // y = sk_lo + j + k
            let shift = sk_lo + (row.lo + i) as i64 - lo;
            let j_start = (-shift).max(0) as usize;
            let j_end = ((out.len() as i64 - shift).min(sk.len() as i64)).max(0) as usize;
            for j in j_start..j_end {
                out[(shift + j as i64) as usize] += b * sk[j];
            }
        }
        Ok(out)
    }

    /// Support `[lo, hi]` with `P_π{Y ∉ [lo, hi]} < eps` for all `π ≤ pi_max`.
    pub fn build_support(&self, pi_max: f64, eps: f64) -> Result<StatisticSupport> {
        check_prob("pi_max", pi_max)?;
        if !(eps > 0.0 && eps <= 1e-6) {
            return Err(Error::Parameter {
                name: "eps",
                value: eps,
                reason: "must lie in (0, 1e-6]",
            });
        }
        let sk = &self.skellam;
        let quarter = eps / 4.0;
        // ξ < lo_xi with probability below eps/4
        let mut lo_xi = sk.lo();
        while lo_xi < sk.hi() && sk.cdf(lo_xi) < quarter {
            lo_xi += 1;
        }
        let total = sk.total_mass();
        let mut hi_xi = sk.hi();
        while hi_xi > lo_xi && total - sk.cdf(hi_xi - 1) < quarter {
            hi_xi -= 1;
        }
        let row = self.row(pi_max);
        let mut k_hi = row.hi();
        let mut tail = 0.0;
        while k_hi > row.lo {
            let t = tail + row.pmf[k_hi - row.lo];
            if t >= quarter {
                break;
            }
            tail = t;
            k_hi -= 1;
        }
        let lo = lo_xi;
        let hi = hi_xi + k_hi as i64;
        let pmf_table = self.pmf_range(pi_max, lo, hi)?;
        Ok(StatisticSupport {
            lo,
            hi,
            reference_pi: pi_max,
            pmf_table,
        })
    }
}

pub fn mixture_cdf(z: i64, pi: f64, cfg: &ModelConfig) -> Result<f64> {
    IctModel::new(*cfg).mixture_cdf(z, pi)
}

pub fn mixture_cdf_strict(z: i64, pi: f64, cfg: &ModelConfig) -> Result<f64> {
    IctModel::new(*cfg).mixture_cdf_strict(z, pi)
}

pub fn y_pmf(y: i64, pi: f64, cfg: &ModelConfig) -> Result<f64> {
    IctModel::new(*cfg).y_pmf(y, pi)
}

pub fn build_support(pi_max: f64, cfg: &ModelConfig, eps: f64) -> Result<StatisticSupport> {
    IctModel::new(*cfg).build_support(pi_max, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{skellam_cdf, skellam_pmf};

    fn model(n1: u64, n2: u64, lambda: f64) -> IctModel {
        IctModel::new(ModelConfig::new(n1, n2, lambda).unwrap())
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::new(0, 3, 1.0).is_err());
        assert!(ModelConfig::new(3, 3, 0.0).is_err());
        assert!(ModelConfig::equal_split(7, 1.0).is_err());
        let c = ModelConfig::equal_split(100, 0.5).unwrap();
        assert_eq!((c.n1, c.n2, c.total()), (50, 50, 100));
    }

    #[test]
    fn degenerate_pi_reduces_to_skellam() {
        let m = model(5, 5, 0.5);
        let s = m.config().skellam();
        for z in -6..=6 {
            let g = skellam_cdf(z as f64, &s).unwrap();
            assert!((m.mixture_cdf(z, 0.0).unwrap() - g).abs() < 1e-13);
            let g1 = skellam_cdf((z - 10) as f64, &s).unwrap();
            assert!((m.mixture_cdf(z, 1.0).unwrap() - g1).abs() < 1e-13);
            let gs = skellam_cdf((z - 1) as f64, &s).unwrap();
            assert!((m.mixture_cdf_strict(z, 0.0).unwrap() - gs).abs() < 1e-13);
            assert!((m.y_pmf(z, 0.0).unwrap() - skellam_pmf(z, &s)).abs() < 1e-14);
        }
        assert!(m.mixture_cdf(0, 1.2).is_err());
    }

    #[test]
    fn strict_cdf_lattice_identity() {
        let m = model(4, 6, 0.8);
        for z in -8..20 {
            let lhs = m.mixture_cdf_strict(z, 0.37).unwrap();
            let rhs = m.mixture_cdf(z, 0.37).unwrap() - m.y_pmf(z, 0.37).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn pmf_range_matches_pointwise() {
        let m = model(30, 30, 0.7);
        let v = m.pmf_range(0.2, -20, 40).unwrap();
        for (i, &p) in v.iter().enumerate() {
            let y = -20 + i as i64;
            assert!((p - m.y_pmf(y, 0.2).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn support_collapses_for_tiny_lambda() {
        let m = model(3, 3, 0.01);
        let s = m.build_support(1.0, 1e-10).unwrap();
        assert!(s.lo >= -8 && s.hi <= 6 + 8, "{:?}", (s.lo, s.hi));
        assert!(m.build_support(0.5, 1e-3).is_err());
    }

    #[test]
    fn support_nests_in_eps() {
        let m = model(20, 20, 1.3);
        let tight = m.build_support(0.4, 1e-12).unwrap();
        let loose = m.build_support(0.4, 1e-7).unwrap();
        assert!(tight.lo <= loose.lo && tight.hi >= loose.hi);
    }
}
