// SPDX-License-Identifier: MIT OR Apache-2.0

use hetcusum::eigen::symmetric_eigenvalues;
use hetcusum::kernel_cov::{
    empirical_kernel_correlated, empirical_kernel_uncorrelated, theoretical_kernel, VarianceProfile,
};
use hetcusum::lrv::LrvConfig;
use hetcusum::montecarlo::{
    classical_limit_spectrum, critical_value, p_value, sample_weighted_chisq, Functional,
};
use hetcusum::series::{cusum_process, cusum_tied, Series};
use hetcusum::spectrum::{all_eigenvalues, eigenvalues, Spectrum, SpectrumSource, Truncation};
use hetcusum::{run_tests, MethodId, TestConfig};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn symmetric(n: usize, raw: &[f64]) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = raw[i * n + j];
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    a
}

fn matrix_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..24).prop_flat_map(|n| (Just(n), prop::collection::vec(-10.0f64..10.0, n * n)))
}

fn series_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 8..80)
}

fn quick_cfg() -> TestConfig<f64> {
    TestConfig {
        grid: Some(32),
        replications: 1000,
        classical_terms: 50,
        ..TestConfig::default()
    }
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn eigenvalues_match_nalgebra((n, raw) in matrix_strategy()) {
        let a = symmetric(n, &raw);
        let ours = symmetric_eigenvalues(&a, n).unwrap();
        let mut theirs: Vec<f64> = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &a))
            .eigenvalues
            .iter()
            .copied()
            .collect();
        theirs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs())) * n as f64;
        for (x, y) in ours.iter().zip(&theirs) {
            prop_assert!((x - y).abs() <= 1e-10 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn eigenvalue_trace((n, raw) in matrix_strategy()) {
        let a = symmetric(n, &raw);
        let ev = symmetric_eigenvalues(&a, n).unwrap();
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let sum: f64 = ev.iter().sum();
        prop_assert!((trace - sum).abs() <= 1e-10 * (1.0 + trace.abs().max(n as f64 * 10.0)));
        prop_assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigenvalues_scale_linearly((n, raw) in matrix_strategy(), c in 0.1f64..10.0) {
        let a = symmetric(n, &raw);
        let scaled: Vec<f64> = a.iter().map(|v| v * c).collect();
        let ev = symmetric_eigenvalues(&a, n).unwrap();
        let evs = symmetric_eigenvalues(&scaled, n).unwrap();
        let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs())) * n as f64 * c;
        for (x, y) in ev.iter().zip(&evs) {
            prop_assert!((x * c - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn empirical_kernels_symmetric(xs in series_strategy(), g in 4usize..40) {
        let s = Series::new(xs).unwrap();
        let k = empirical_kernel_uncorrelated(&s, g).unwrap();
        prop_assert_eq!(k.asymmetry(), 0.0);
        let (kc, _) = empirical_kernel_correlated(&s, &LrvConfig::bartlett(3.0).unwrap(), g).unwrap();
        prop_assert_eq!(kc.asymmetry(), 0.0);
        let ev = all_eigenvalues(&k).unwrap();
        // a covariance of a Gaussian process: PSD up to rounding
        prop_assert!(ev.iter().all(|&v| v > -1e-10 * ev[0].abs().max(1e-300)));
    }

    #[test]
    fn cusum_endpoints_vanish(xs in series_strategy()) {
        let s = Series::new(xs).unwrap();
        let c = cusum_process(&s);
        prop_assert_eq!(c.values()[0], 0.0);
        prop_assert_eq!(c.values()[s.len()], 0.0);
        let t = cusum_tied(&s);
        prop_assert_eq!(t.values().len(), s.len() + 2);
        prop_assert_eq!(*t.values().last().unwrap(), 0.0);
    }

    #[test]
    fn location_invariance(xs in series_strategy(), shift in -100.0f64..100.0) {
        let s = Series::new(xs.clone()).unwrap();
        let moved = Series::new(xs.iter().map(|v| v + shift).collect()).unwrap();
        let cfg = quick_cfg();
        let (a, b) = match (run_tests(&s, &MethodId::ALL, &cfg, 9), run_tests(&moved, &MethodId::ALL, &cfg, 9)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(ea), Err(eb)) => {
                prop_assert!(ea.is_degenerate() && eb.is_degenerate());
                return Ok(());
            }
            _ => return Ok(()),
        };
        for (ra, rb) in a.iter().zip(&b) {
            let rel = (ra.statistic - rb.statistic).abs() / ra.statistic.abs().max(1e-12);
            prop_assert!(rel < 1e-7, "{}: {} vs {}", ra.method, ra.statistic, rb.statistic);
        }
    }

    #[test]
    fn scale_invariance_power_of_two(xs in series_strategy(), e in -6i32..6) {
        let c = 2f64.powi(e);
        let s = Series::new(xs.clone()).unwrap();
        let scaled = Series::new(xs.iter().map(|v| v * c).collect()).unwrap();
        let cfg = quick_cfg();
        if let (Ok(a), Ok(b)) = (run_tests(&s, &MethodId::ALL, &cfg, 4), run_tests(&scaled, &MethodId::ALL, &cfg, 4)) {
            for (ra, rb) in a.iter().zip(&b) {
                // unnormalized statistics carry the factor c²
                prop_assert!(rb.statistic == ra.statistic || rb.statistic == ra.statistic * c * c);
                prop_assert_eq!(ra.p_value, rb.p_value);
            }
        }
    }

    #[test]
    fn sign_flip_invariance(xs in series_strategy()) {
        let s = Series::new(xs.clone()).unwrap();
        let flipped = Series::new(xs.iter().map(|v| -v).collect()).unwrap();
        let cfg = quick_cfg();
        if let (Ok(a), Ok(b)) = (run_tests(&s, &MethodId::ALL, &cfg, 2), run_tests(&flipped, &MethodId::ALL, &cfg, 2)) {
            for (ra, rb) in a.iter().zip(&b) {
                prop_assert_eq!(ra.statistic, rb.statistic);
                prop_assert_eq!(ra.p_value, rb.p_value);
            }
        }
    }
}

fn sample() -> hetcusum::LimitSample64 {
    let sp = classical_limit_spectrum::<f64>(Functional::Cm, 100).unwrap();
    sample_weighted_chisq(&sp, 4000, 1, 17).unwrap()
}

proptest! {
    #![proptest_config(cases(200))]

    #[test]
    fn p_value_monotone(a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let ls = sample();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p_value(&ls, lo) >= p_value(&ls, hi));
    }

    #[test]
    fn critical_value_monotone(a in 0.001f64..0.999, b in 0.001f64..0.999) {
        let ls = sample();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(critical_value(&ls, lo).unwrap() >= critical_value(&ls, hi).unwrap());
    }

    #[test]
    fn p_value_at_critical_value(alpha in 0.001f64..0.999) {
        let ls = sample();
        let c = critical_value(&ls, alpha).unwrap();
        prop_assert!(p_value(&ls, c) <= alpha + 1e-12);
    }
}

#[test]
fn limit_sample_deterministic() {
    let sp = Spectrum::from_weights(vec![0.5, 0.25, 0.1], SpectrumSource::Theoretical, 1).unwrap();
    let a = sample_weighted_chisq(&sp, 5000, 1, 3).unwrap();
    let b = sample_weighted_chisq(&sp, 5000, 1, 3).unwrap();
    let c = sample_weighted_chisq(&sp, 5000, 1, 4).unwrap();
    assert_eq!(a.draws(), b.draws());
    assert_ne!(a.draws(), c.draws());
}

#[test]
fn bridge_trace_converges() {
    let p = VarianceProfile::homoskedastic(1.0).unwrap();
    let k = theoretical_kernel(&p, 1000).unwrap();
    let ev = all_eigenvalues(&k).unwrap();
    let total: f64 = ev.iter().sum();
    let trace: f64 = (0..1000).map(|j| k.get(j, j)).sum::<f64>() / 1000.0;
    assert!((total - trace).abs() < 1e-8, "{total} vs {trace}");
    assert!((total - 1.0 / 6.0).abs() < 1e-3, "{total}");
}

#[test]
fn classical_cm_matches_nystrom() {
    let p = VarianceProfile::homoskedastic(1.0).unwrap();
    let k = theoretical_kernel(&p, 256).unwrap();
    let ny = eigenvalues(&k, Truncation::Fixed(100), SpectrumSource::Theoretical).unwrap();
    let cl = classical_limit_spectrum::<f64>(Functional::Cm, 100).unwrap();
    let a = sample_weighted_chisq(&ny, 20_000, 1, 8).unwrap();
    let b = sample_weighted_chisq(&cl, 20_000, 1, 8).unwrap();
    for alpha in [0.10, 0.05, 0.01] {
        let x = critical_value(&a, alpha).unwrap();
        let y = critical_value(&b, alpha).unwrap();
        assert!((x - y).abs() / y < 1e-3, "{alpha}: {x} vs {y}");
    }
}

#[test]
fn eigen_f32_tracks_f64() {
    let p64 = VarianceProfile::<f64>::homoskedastic(1.0).unwrap();
    let p32 = VarianceProfile::<f32>::homoskedastic(1.0).unwrap();
    let e64 = all_eigenvalues(&theoretical_kernel(&p64, 64).unwrap()).unwrap();
    let e32 = all_eigenvalues(&theoretical_kernel(&p32, 64).unwrap()).unwrap();
    for (a, b) in e64.iter().zip(&e32).take(10) {
        assert!((a - *b as f64).abs() < 1e-5, "{a} vs {b}");
    }
}
