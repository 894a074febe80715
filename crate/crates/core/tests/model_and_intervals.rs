mod common;

use common::*;
use ict_core::asymptotic::{asymptotic_ci, asymptotic_table, coverage_asymptotic};
use ict_core::dist::{skellam_pmf, SkellamParams};
use ict_core::exact::{ci_table, exact_ci, ConfidenceSpec, ExactCi, TailRule};
use ict_core::model::{build_support, mixture_cdf, mixture_cdf_strict, y_pmf, IctModel, ModelConfig};
use ict_core::planner::{pi_grid, Construction, Design};
use proptest::prelude::*;

#[test]
fn two_by_two_enumeration() {
    let cfg = ModelConfig::equal_split(4, 0.5).unwrap();
    for &pi in &[0.0, 0.3, 0.5, 1.0] {
        let oracle = enumerate_two_by_two(0.5, pi, 20);
        for (&y, &p) in &oracle {
            let ours = y_pmf(y, pi, &cfg).unwrap();
            assert!((ours - p).abs() < 1e-9, "pi {pi}, y {y}: {ours} vs {p}");
        }
    }
}

#[test]
fn double_convolution_oracle() {
    let cfg = ModelConfig::equal_split(10, 0.5).unwrap();
    let (pi, z) = (0.3, 0);
    let mut oracle = 0.0;
    for k in 0..=10 {
        let g: f64 = (-60..=z - k).map(|j| skellam_conv(j, 2.5, 2.5)).sum();
        oracle += g * binom(k, 10, pi);
    }
    assert!((mixture_cdf(z, pi, &cfg).unwrap() - oracle).abs() < 1e-9);
}

#[test]
fn degenerate_mixtures() {
    let cfg = ModelConfig::equal_split(10, 0.5).unwrap();
    let s = SkellamParams::new(2.5, 2.5).unwrap();
    for z in -8..=18 {
        let g = |x: i64| -> f64 { (-60..=x).map(|j| skellam_pmf(j, &s)).sum() };
        assert!((mixture_cdf(z, 0.0, &cfg).unwrap() - g(z)).abs() < 1e-12);
        assert!((mixture_cdf(z, 1.0, &cfg).unwrap() - g(z - 10)).abs() < 1e-12);
        assert!((mixture_cdf_strict(z, 0.0, &cfg).unwrap() - g(z - 1)).abs() < 1e-12);
        assert!((y_pmf(z, 0.0, &cfg).unwrap() - skellam_pmf(z, &s)).abs() < 1e-15);
    }
}

#[test]
fn stochastic_ordering_and_consistency() {
    let cfg = ModelConfig::new(30, 40, 0.8).unwrap();
    let support = build_support(1.0, &cfg, 1e-10).unwrap();
    let pis: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    for z in support.lo..=support.hi {
        let cdfs: Vec<f64> = pis.iter().map(|&p| mixture_cdf(z, p, &cfg).unwrap()).collect();
        // summation rounding near 1 is a few ulps
        assert!(cdfs.windows(2).all(|w| w[1] <= w[0] + 1e-13), "z {z}: {cdfs:?}");
        for &p in &pis {
            let diff = mixture_cdf(z, p, &cfg).unwrap() - mixture_cdf(z - 1, p, &cfg).unwrap();
            assert!((diff - y_pmf(z, p, &cfg).unwrap()).abs() < 1e-12);
            let strict = mixture_cdf_strict(z, p, &cfg).unwrap();
            assert!((strict - (mixture_cdf(z, p, &cfg).unwrap() - y_pmf(z, p, &cfg).unwrap())).abs() < 1e-12);
        }
    }
}

#[test]
fn balanced_null_is_symmetric() {
    let cfg = ModelConfig::equal_split(40, 1.3).unwrap();
    for y in 0..40 {
        let a = y_pmf(y, 0.0, &cfg).unwrap();
        let b = y_pmf(-y, 0.0, &cfg).unwrap();
        assert!((a - b).abs() <= 1e-15 + 1e-12 * a);
    }
}

#[test]
fn support_captures_mass() {
    let cfg = ModelConfig::equal_split(100, 0.5).unwrap();
    let s = build_support(1.0, &cfg, 1e-10).unwrap();
    for &pi in &[0.0, 0.1, 0.5, 0.9, 1.0] {
        let mass: f64 = (s.lo..=s.hi).map(|y| y_pmf(y, pi, &cfg).unwrap()).sum();
        assert!((1.0 - 1e-10..=1.0 + 1e-12).contains(&mass), "pi {pi}: {mass}");
    }
    let wide = build_support(1.0, &cfg, 1e-12).unwrap();
    assert!(wide.lo <= s.lo && wide.hi >= s.hi);
    let tiny = build_support(1.0, &ModelConfig::equal_split(4, 0.01).unwrap(), 1e-10).unwrap();
    assert!(tiny.lo >= -8 && tiny.hi <= 12, "{tiny:?}");
}

#[test]
fn exact_coverage_small_samples() {
    let spec = ConfidenceSpec::new(0.95).unwrap();
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    for &half in &[5u64, 25, 50] {
        for &lambda in &[0.5, 0.693] {
            let cfg = ModelConfig::equal_split(2 * half, lambda).unwrap();
            let design = Design::build(cfg, spec, 1.0, 1e-10, Construction::default()).unwrap();
            let stats = design.sweep(&grid, None).unwrap();
            let worst = stats.iter().map(|s| s.coverage).fold(1.0, f64::min);
            assert!(worst >= 0.95 - 1e-9, "n/2 = {half}, lambda = {lambda}: {worst}");
        }
    }
}

#[test]
fn strict_tails_undercover_near_zero() {
    // The literal tail assignment misses π = 0.001 far too often at small λ.
    let spec = ConfidenceSpec::new(0.95).unwrap();
    let cfg = ModelConfig::equal_split(10, 0.05).unwrap();
    let model = IctModel::new(cfg);
    let s = model.build_support(1.0, 1e-10).unwrap();
    let strict = ict_core::planner::IntervalTable::exact(&ExactCi::with_rule(&model, spec, TailRule::Strict), s.lo, s.hi).unwrap();
    let cov = ict_core::planner::point_stats(&model, &strict, 0.001, None).unwrap().coverage;
    assert!(cov < 0.95, "{cov}");
}

#[test]
fn table_sums_match_fresh_intervals() {
    let spec = ConfidenceSpec::new(0.95).unwrap();
    let cfg = ModelConfig::equal_split(60, 0.693).unwrap();
    let design = Design::build(cfg, spec, 0.5, 1e-10, Construction::default()).unwrap();
    for &pi in &[0.05, 0.1, 0.3, 0.5] {
        let s = design.stats(pi, None).unwrap();
        let (cov, len) = coverage_fresh(cfg, 0.95, pi, design.table.lo, design.table.hi());
        assert!((s.coverage - cov).abs() < 1e-8);
        assert!((s.expected_length - len).abs() < 1e-8);
    }
}

#[test]
fn expected_length_shrinks_with_n() {
    let spec = ConfidenceSpec::new(0.95).unwrap();
    let grid = pi_grid(0.2, 1e-3);
    let sup: Vec<f64> = [100u64, 200, 400]
        .iter()
        .map(|&n| {
            let cfg = ModelConfig::equal_split(n, 0.693).unwrap();
            let d = Design::build(cfg, spec, 0.2, 1e-10, Construction::default()).unwrap();
            d.sweep(&grid, None).unwrap().iter().map(|s| s.expected_length).fold(0.0, f64::max)
        })
        .collect();
    if !sup.windows(2).all(|w| w[1] <= w[0]) {
        eprintln!("sup expected length not monotone in n: {sup:?}");
    }
    assert!(sup[2] < sup[0]);
}

#[test]
fn asymptotic_symmetry_and_bounds() {
    let spec = ConfidenceSpec::new(0.95).unwrap();
    let cfg = ModelConfig::equal_split(100, 0.5).unwrap();
    for i in 1..100 {
        let p = i as f64 / 100.0;
        let a = asymptotic_ci(p, spec, &cfg).unwrap();
        let b = asymptotic_ci(1.0 - p, spec, &cfg).unwrap();
        assert!(a.lower >= 0.0 && a.upper <= 1.0 && a.lower <= a.upper);
        assert!(a.length > 0.0);
        if a.lower > 0.0 && a.upper < 1.0 && b.lower > 0.0 && b.upper < 1.0 {
            assert!((a.length - b.length).abs() < 1e-12);
        }
    }
}

#[test]
fn exact_covers_where_asymptotic_fails() {
    let spec = ConfidenceSpec::new(0.95).unwrap();
    for &n in &[50u64, 100] {
        let cfg = ModelConfig::equal_split(n, 0.5).unwrap();
        let model = IctModel::new(cfg);
        let s = model.build_support(1.0, 1e-10).unwrap();
        let asym = Design {
            model: model.clone(),
            table: asymptotic_table(spec, &cfg, s.lo, s.hi).unwrap(),
            spec,
        };
        let exact = Design::build(cfg, spec, 1.0, 1e-10, Construction::default()).unwrap();
        let mut dips = 0;
        for i in 0..=1000 {
            let pi = i as f64 / 1000.0;
            if asym.stats(pi, None).unwrap().coverage < 0.95 {
                dips += 1;
                assert!(exact.stats(pi, None).unwrap().coverage >= 0.95 - 1e-9);
            }
        }
        assert!(dips > 0, "n = {n}");
    }
    let c = coverage_asymptotic(0.3, spec, &ModelConfig::equal_split(100, 0.5).unwrap()).unwrap();
    assert!(c > 0.8 && c < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn endpoints_monotone_and_nested(half in 1u64..40, lambda in 0.05f64..5.0, g in 0.5f64..0.95) {
        let cfg = ModelConfig::equal_split(2 * half, lambda).unwrap();
        let s = build_support(1.0, &cfg, 1e-8).unwrap();
        let narrow = ci_table(ConfidenceSpec::new(g).unwrap(), &cfg, s.lo..=s.hi).unwrap();
        let wide = ci_table(ConfidenceSpec::new(g + 0.04).unwrap(), &cfg, s.lo..=s.hi).unwrap();
        for w in narrow.windows(2) {
            prop_assert!(w[0].lower <= w[1].lower && w[0].upper <= w[1].upper);
        }
        for (a, b) in narrow.iter().zip(&wide) {
            prop_assert!(a.lower <= a.upper);
            prop_assert!(b.lower <= a.lower + 1e-9 && a.upper <= b.upper + 1e-9);
        }
    }

    #[test]
    fn single_call_matches_table(half in 1u64..30, lambda in 0.1f64..3.0, z in -20i64..60) {
        let cfg = ModelConfig::equal_split(2 * half, lambda).unwrap();
        let spec = ConfidenceSpec::new(0.95).unwrap();
        let t = ci_table(spec, &cfg, z..=z + 3).unwrap();
        prop_assert_eq!(t[0], exact_ci(z, spec, &cfg).unwrap());
    }
}
