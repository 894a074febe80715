//! Probability kernels for the Poisson, binomial and Skellam laws.
//!
//! Point masses are evaluated in log space with Loader's saddle-point
//! decomposition (`stirlerr` + `bd0`), which keeps full relative precision
//! for counts in the tens of thousands. Skellam masses are computed by a
//! windowed convolution of two Poisson laws; an independent route through
//! exponentially scaled modified Bessel functions is kept for cross-checks.

use crate::error::{check_positive, check_prob, Error, Result};
use std::f64::consts::{LN_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Terms more than this many nats below the running maximum are dropped.
const LOG_TERM_CUTOFF: f64 = 42.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonParams {
    mean: f64,
}

impl PoissonParams {
    pub fn new(mean: f64) -> Result<Self> {
        check_positive("mean", mean).map(|mean| Self { mean })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialParams {
    trials: u64,
    success_prob: f64,
}

impl BinomialParams {
    pub fn new(trials: u64, success_prob: f64) -> Result<Self> {
        check_prob("success_prob", success_prob).map(|success_prob| Self {
            trials,
            success_prob,
        })
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn success_prob(&self) -> f64 {
        self.success_prob
    }
}

/// Law of `X₊ − X₋` with independent `X₊ ~ Po(mean_plus)`, `X₋ ~ Po(mean_minus)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkellamParams {
    mean_plus: f64,
    mean_minus: f64,
}

impl SkellamParams {
    pub fn new(mean_plus: f64, mean_minus: f64) -> Result<Self> {
        Ok(Self {
            mean_plus: check_positive("mean_plus", mean_plus)?,
            mean_minus: check_positive("mean_minus", mean_minus)?,
        })
    }

    pub fn mean_plus(&self) -> f64 {
        self.mean_plus
    }

    pub fn mean_minus(&self) -> f64 {
        self.mean_minus
    }

    pub fn mean(&self) -> f64 {
        self.mean_plus - self.mean_minus
    }

    pub fn variance(&self) -> f64 {
        self.mean_plus + self.mean_minus
    }
}

/// Truncation of infinite supports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Half-width of the initial window, in standard deviations.
    pub width_sd: f64,
    /// Upper bound on the neglected mass per side.
    pub tail_tol: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            width_sd: 12.0,
            tail_tol: 1e-12,
        }
    }
}

// ---------------------------------------------------------------------------
// Loader's saddle-point pieces

/// `ln n! − (n + ½) ln n + n − ln √(2π)`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    debug_assert!(n > 0);
    if n <= 15 {
        let nf = n as f64;
        let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        return ln_fact - (nf + 0.5) * nf.ln() + nf - LN_SQRT_2PI;
    }
    let nf = n as f64;
    let nn = nf * nf;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
}

/// Deviance term `x ln(x/np) + np − x`, accurate when `x ≈ np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

// ---------------------------------------------------------------------------
// Poisson

fn ln_poisson_raw(k: u64, mean: f64) -> f64 {
    if k == 0 {
        return -mean;
    }
    let kf = k as f64;
    -stirlerr(k) - bd0(kf, mean) - 0.5 * (2.0 * PI * kf).ln()
}

pub fn poisson_ln_pmf(k: i64, p: &PoissonParams) -> f64 {
    if k < 0 {
        f64::NEG_INFINITY
    } else {
        ln_poisson_raw(k as u64, p.mean)
    }
}

pub fn poisson_pmf(k: i64, p: &PoissonParams) -> f64 {
    poisson_ln_pmf(k, p).exp()
}

/// `P{X ≤ k}`; zero for negative `k`.
pub fn poisson_cdf(k: i64, p: &PoissonParams) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let mean = p.mean;
    let top = poisson_pmf(k, p);
    if (k as f64) < mean {
        // Terms shrink going down from k; gather them, then add smallest first.
        let mut terms = vec![top];
        let mut t = top;
        let mut j = k;
        while j > 0 {
            t *= j as f64 / mean;
            j -= 1;
            if t < top * 1e-18 {
                break;
            }
            terms.push(t);
        }
        terms.iter().rev().sum::<f64>().min(1.0)
    } else {
        let mut terms = Vec::new();
        let mut t = top;
        let mut j = k;
        loop {
            j += 1;
            t *= mean / j as f64;
            if t < top * 1e-18 || t == 0.0 {
                break;
            }
            terms.push(t);
        }
        let tail: f64 = terms.iter().rev().sum();
        (1.0 - tail).clamp(0.0, 1.0)
    }
}

/// Dense Poisson pmf/cdf over `0..=kmax`, where `kmax` leaves less than
/// `1e-18` of mass beyond the table.
#[derive(Debug, Clone)]
pub struct PoissonTable {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl PoissonTable {
    pub fn new(p: &PoissonParams) -> Self {
        let mean = p.mean;
        let kmax = (mean + 14.0 * mean.sqrt() + 40.0).ceil() as usize;
        let pmf: Vec<f64> = (0..=kmax).map(|k| ln_poisson_raw(k as u64, mean).exp()).collect();
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for &v in &pmf {
            acc += v;
            cdf.push(acc.min(1.0));
        }
        Self { pmf, cdf }
    }

    pub fn pmf(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.pmf.get(k as usize).copied().unwrap_or(0.0)
        }
    }

    pub fn cdf(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.cdf.get(k as usize).copied().unwrap_or(1.0)
        }
    }
}

/// Poisson pmf on the window `[lo, lo + len)`.
fn poisson_window(mean: f64, trunc: &Truncation) -> (i64, Vec<f64>) {
    let sd = mean.sqrt();
    let lo = (mean - trunc.width_sd * sd - 10.0).floor().max(0.0) as i64;
    let mut hi = (mean + trunc.width_sd * sd + 10.0).ceil() as i64;
    let limit = trunc.tail_tol * 1e-3;
    while ln_poisson_raw(hi as u64, mean).exp() > limit {
        hi += 8;
    }
    let pmf = (lo..=hi).map(|k| ln_poisson_raw(k as u64, mean).exp()).collect();
    (lo, pmf)
}

// ---------------------------------------------------------------------------
// Binomial

fn ln_binom_raw(k: u64, n: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if k == 0 {
        return nf * (-p).ln_1p();
    }
    if k == n {
        return nf * p.ln();
    }
    let kf = k as f64;
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

/// `ln P{η = k}` for `η ~ Bin(n, π)`; `-inf` outside `0..=n`.
pub fn binom_ln_pmf(k: i64, p: &BinomialParams) -> f64 {
    if k < 0 || k as u64 > p.trials {
        f64::NEG_INFINITY
    } else {
        ln_binom_raw(k as u64, p.trials, p.success_prob)
    }
}

pub fn binom_pmf(k: i64, p: &BinomialParams) -> f64 {
    binom_ln_pmf(k, p).exp()
}

pub fn binom_cdf(k: i64, p: &BinomialParams) -> f64 {
    if k < 0 {
        return 0.0;
    }
    if k as u64 >= p.trials {
        return 1.0;
    }
    let row = BinomialRow::new(p.trials, p.success_prob);
    let upto = (k - row.lo as i64 + 1).clamp(0, row.pmf.len() as i64) as usize;
    row.pmf[..upto].iter().sum::<f64>().min(1.0)
}

/// Binomial pmf restricted to the indices where it exceeds `1e-17` times
/// its maximum. The neglected mass is below `1e-14` for any `n`.
#[derive(Debug, Clone)]
pub struct BinomialRow {
    pub lo: usize,
    pub pmf: Vec<f64>,
}

impl BinomialRow {
    pub fn new(n: u64, p: f64) -> Self {
        if p <= 0.0 {
            return Self { lo: 0, pmf: vec![1.0] };
        }
        if p >= 1.0 {
            return Self {
                lo: n as usize,
                pmf: vec![1.0],
            };
        }
        let q = 1.0 - p;
        let odds = p / q;
        let mode = (((n + 1) as f64) * p).floor().min(n as f64) as u64;
        let peak = ln_binom_raw(mode, n, p).exp();
        let cut = peak * 1e-17;

        let mut below = Vec::new();
        let mut t = peak;
        let mut k = mode;
        while k > 0 {
            // pmf(k-1) = pmf(k) * k / ((n-k+1) * odds)
            t *= k as f64 / ((n - k + 1) as f64 * odds);
            k -= 1;
            if t < cut {
                break;
            }
            below.push(t);
        }
        let lo = mode as usize - below.len();
        let mut pmf: Vec<f64> = below.into_iter().rev().collect();
        pmf.push(peak);
        let mut t = peak;
        let mut k = mode;
        while k < n {
            t *= (n - k) as f64 / (k + 1) as f64 * odds;
            k += 1;
            if t < cut {
                break;
            }
            pmf.push(t);
        }
        Self { lo, pmf }
    }

    pub fn hi(&self) -> usize {
        self.lo + self.pmf.len() - 1
    }
}

// ---------------------------------------------------------------------------
// Skellam: convolution route

/// `ln P{ξ = k}` by summing `Po(k + j; μ₊)·Po(j; μ₋)` outward from the
/// dominant index. The summand is log-concave in `j`, so the walk stops once
/// terms fall `LOG_TERM_CUTOFF` nats below the peak.
pub fn skellam_ln_pmf(k: i64, s: &SkellamParams) -> f64 {
    let (mp, mm) = (s.mean_plus, s.mean_minus);
    let jmin = (-k).max(0);
    let kf = k as f64;
    let jstar = ((-kf + (kf * kf + 4.0 * mp * mm).sqrt()) / 2.0).round() as i64;
    let jstar = jstar.max(jmin);
    let term = |j: i64| ln_poisson_raw((k + j) as u64, mp) + ln_poisson_raw(j as u64, mm);

    let peak = term(jstar);
    let mut terms = vec![peak];
    let mut j = jstar;
    while j > jmin {
        j -= 1;
        let t = term(j);
        if t < peak - LOG_TERM_CUTOFF {
            break;
        }
        terms.push(t);
    }
    let mut j = jstar;
    loop {
        j += 1;
        let t = term(j);
        if t < peak - LOG_TERM_CUTOFF {
            break;
        }
        terms.push(t);
    }
    log_sum_exp(&terms)
}

pub fn skellam_pmf(k: i64, s: &SkellamParams) -> f64 {
    skellam_ln_pmf(k, s).exp()
}

/// `G(x) = P{ξ ≤ ⌊x⌋}`.
pub fn skellam_cdf(x: f64, s: &SkellamParams) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("skellam_cdf argument is NaN".into()));
    }
    if x == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let table = SkellamTable::new(s, &Truncation::default());
    Ok(table.cdf(x.floor() as i64))
}

/// Skellam pmf and prefix cdf over a truncated window, built by
/// convolving two windowed Poisson pmfs in ascending order.
#[derive(Debug, Clone)]
pub struct SkellamTable {
    lo: i64,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl SkellamTable {
    pub fn new(s: &SkellamParams, trunc: &Truncation) -> Self {
        let (plo, pp) = poisson_window(s.mean_plus, trunc);
        let (mlo, pm) = poisson_window(s.mean_minus, trunc);
        // ξ = X₊ − X₋ ranges over [plo − mhi, phi − mlo].
        let mhi = mlo + pm.len() as i64 - 1;
        let full_lo = plo - mhi;
        let len = pp.len() + pm.len() - 1;
        let mut full = vec![0.0; len];
        // index of ξ = (plo + a) − (mlo + b) is a + (pm.len() - 1 - b)
        let last = pm.len() - 1;
        for (a, &va) in pp.iter().enumerate() {
            for (b, &vb) in pm.iter().enumerate() {
                full[a + last - b] += va * vb;
            }
        }

        // Trim to the mean ± width_sd·sd window, extended while edge mass is
        // still above the tail tolerance.
        let sd = s.variance().sqrt();
        let limit = trunc.tail_tol * 1e-3;
        let mut lo = ((s.mean() - trunc.width_sd * sd).floor() as i64).max(full_lo);
        let full_hi = full_lo + len as i64 - 1;
        let mut hi = ((s.mean() + trunc.width_sd * sd).ceil() as i64).min(full_hi);
        while lo > full_lo && full[(lo - full_lo) as usize] > limit {
            lo -= 1;
        }
        while hi < full_hi && full[(hi - full_lo) as usize] > limit {
            hi += 1;
        }
        let pmf = full[(lo - full_lo) as usize..=(hi - full_lo) as usize].to_vec();
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for &v in &pmf {
            acc += v;
            cdf.push(acc);
        }
        Self { lo, pmf, cdf }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.pmf.len() as i64 - 1
    }

    pub fn pmf_slice(&self) -> &[f64] {
        &self.pmf
    }

    pub fn pmf(&self, k: i64) -> f64 {
        if k < self.lo || k > self.hi() {
            0.0
        } else {
            self.pmf[(k - self.lo) as usize]
        }
    }

    pub fn cdf(&self, k: i64) -> f64 {
        if k < self.lo {
            0.0
        } else if k > self.hi() {
            *self.cdf.last().expect("non-empty table")
        } else {
            self.cdf[(k - self.lo) as usize]
        }
    }

    pub fn total_mass(&self) -> f64 {
        *self.cdf.last().expect("non-empty table")
    }
}

// ---------------------------------------------------------------------------
// Skellam: Bessel route

/// `ln(I_k(x)·e^{−x})` for `k = 0..=kmax`, by Miller's backward recurrence
/// normalised with `e^x = I_0(x) + 2 Σ_{k≥1} I_k(x)`.
pub fn ln_scaled_bessel_i(x: f64, kmax: usize) -> Vec<f64> {
    assert!(x > 0.0 && x.is_finite(), "bessel argument must be positive");
    let kf = kmax as f64;
    let start = ((kf * kf + 80.0 * x).sqrt().ceil() as usize).max(kmax) + 20;
    const RESCALE: f64 = 1e250;
    let ln_rescale = RESCALE.ln();

    // ln v_k for k = 0..=start, computed downward.
    let mut ln_v = vec![0.0; start + 1];
    let mut offset = 0.0;
    let mut next = 0.0; // v_{k+1}
    let mut cur = 1.0; // v_k
    ln_v[start] = 0.0;
    for k in (1..=start).rev() {
        let prev = next + (2.0 * k as f64 / x) * cur;
        next = cur;
        cur = prev;
        if cur > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            offset += ln_rescale;
        }
        ln_v[k - 1] = cur.ln() + offset;
    }
    let mut terms = Vec::with_capacity(start + 1);
    terms.push(ln_v[0]);
    terms.extend(ln_v[1..].iter().map(|v| v + LN_2));
    let ln_norm = log_sum_exp(&terms);
    ln_v.truncate(kmax + 1);
    ln_v.iter_mut().for_each(|v| *v -= ln_norm);
    ln_v
}

/// Skellam log-pmf over `lo..=hi` via modified Bessel functions.
pub fn skellam_ln_pmf_bessel(lo: i64, hi: i64, s: &SkellamParams) -> Vec<f64> {
    let (mp, mm) = (s.mean_plus, s.mean_minus);
    let x = 2.0 * (mp * mm).sqrt();
    let kmax = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
    let ln_i = ln_scaled_bessel_i(x, kmax);
    let base = -(mp.sqrt() - mm.sqrt()).powi(2);
    let half_ln_ratio = 0.5 * (mp.ln() - mm.ln());
    (lo..=hi)
        .map(|k| base + k as f64 * half_ln_ratio + ln_i[k.unsigned_abs() as usize])
        .collect()
}

pub fn skellam_pmf_bessel(k: i64, s: &SkellamParams) -> f64 {
    skellam_ln_pmf_bessel(k, k, s)[0].exp()
}
