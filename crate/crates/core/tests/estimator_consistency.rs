use cvtomo::estimator::*;
use cvtomo::fock::{build_fock, build_gaussian_auto, weyl_moments, GaussianSpec};
use cvtomo::phase_space::{husimi_field, integrate, wigner_field, KernelKind, MomentKernelSet, PhaseGrid};
use cvtomo::sampler::*;
use cvtomo::{BhomConfig, Error, Method};
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{Binomial, Discrete};

fn gauss22() -> cvtomo::DensityMatrix {
    build_gaussian_auto(GaussianSpec::new(2.0, 2.0).unwrap()).unwrap()
}

#[test]
fn single_node_counts_return_the_kernel() {
    let vac = build_fock(0, 12).unwrap();
    let grid = PhaseGrid::covering(&vac, 3, 41).unwrap();
    let k = MomentKernelSet::new(3).unwrap();
    let l = 777;
    let mut counts = vec![0.0; grid.len()];
    counts[l] = 1.0;
    let rec = UhomRecord { counts, events_per_point: 20 };
    let est = estimate_sample_average(&rec, &grid, &k).unwrap();
    assert_eq!(est, k.eval(grid.node(l), KernelKind::P));
    let empty = UhomRecord { counts: vec![0.0; grid.len()], events_per_point: 20 };
    assert!(matches!(estimate_sample_average(&empty, &grid, &k), Err(Error::EmptyData)));
}

#[test]
fn het_vacuum_large_sample() {
    let vac = build_fock(0, 12).unwrap();
    let grid = PhaseGrid::covering(&vac, 1, 161).unwrap();
    let k = MomentKernelSet::new(1).unwrap();
    let rec = sample_het(&vac, &grid, 1_000_000, 21).unwrap();
    let est = estimate_sample_average(&rec, &grid, &k).unwrap();
    // sCRB_1 = 2 at vacuum, one unit per component
    let se = (1.0f64 / 1e6).sqrt();
    for v in est {
        assert!(v.abs() < 3.0 * se, "{v}");
    }
}

#[test]
fn uhom_expected_counts_reproduce_plug_in() {
    let rho = gauss22();
    let grid = PhaseGrid::covering(&rho, 2, 161).unwrap();
    let k = MomentKernelSet::new(2).unwrap();
    let rec = expected_uhom(&rho, &grid, 1000, 1.0).unwrap();
    let est = estimate_sample_average(&rec, &grid, &k).unwrap();
    let q = husimi_field(&rho, &grid);
    let num = integrate(&grid, &q, |_, pt| k.eval(pt, KernelKind::P)).unwrap();
    let oracle = weyl_moments(&rho, 2).unwrap();
    for c in 0..3 {
        assert!((est[c] - num[c]).abs() < 1e-4, "{c}");
        assert!((est[c] - oracle[c]).abs() < 1e-4, "{c}");
    }
}

#[test]
fn invr_expected_vacuum_and_gaussian() {
    let cfg = BhomConfig::default();
    let vac = build_fock(0, 12).unwrap();
    let k1 = MomentKernelSet::new(1).unwrap();
    let rec = expected_bhom(&vac, &cfg.phases(), &cfg.bins().unwrap(), 10_000);
    let est = estimate_bhom_invr(&rec, &cfg.grid(&vac).unwrap(), &k1, cfg.k_c).unwrap();
    assert!(est.iter().all(|v| v.abs() < 1e-2), "{est:?}");

    let g = gauss22();
    let k2 = MomentKernelSet::new(2).unwrap();
    let rec = expected_bhom(&g, &cfg.phases(), &cfg.bins().unwrap(), 10_000);
    let est = estimate_bhom_invr(&rec, &cfg.grid(&g).unwrap(), &k2, cfg.k_c).unwrap();
    let target = [2.0, 0.0, 0.5];
    for c in 0..3 {
        assert!((est[c] - target[c]).abs() < 0.05 * 2.0, "{c}: {est:?}");
    }
    assert!((est[0] - 2.0).abs() < 0.1 && (est[2] - 0.5).abs() < 0.025, "{est:?}");
}

#[test]
fn invr_wiggles_for_fock_three() {
    let cfg = BhomConfig::default();
    let rho = build_fock(3, 19).unwrap();
    let grid = cfg.grid(&rho).unwrap();
    let rec = expected_bhom(&rho, &cfg.phases(), &cfg.bins().unwrap(), 10_000);
    let w_hat = reconstruct_wigner(&rec, &grid, cfg.k_c).unwrap();
    let w = wigner_field(&rho, &grid);
    let dev = w_hat.iter().zip(&w).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    assert!(dev > 0.05, "{dev}");
}

#[test]
fn bhomopt_expected_moments() {
    let cfg = BhomConfig::default();
    let bins = cfg.bins().unwrap();
    let phases = cfg.phases();
    let vac = build_fock(0, 12).unwrap();
    let est = estimate_bhomopt(&expected_bhom(&vac, &phases, &bins, 10_000), 2, BhomOptWeighting::Unweighted).unwrap();
    for (a, b) in est.iter().zip([0.5, 0.0, 0.5]) {
        assert!((a - b).abs() < 1e-2, "{est:?}");
    }
    let est = estimate_bhomopt(&expected_bhom(&gauss22(), &phases, &bins, 10_000), 2, BhomOptWeighting::InverseVariance).unwrap();
    for (a, b) in est.iter().zip([2.0, 0.0, 0.5]) {
        assert!((a - b).abs() < 0.1 * b.max(0.1), "{est:?}");
    }
    for rho in [vac, gauss22(), build_fock(1, 14).unwrap()] {
        let oracle = weyl_moments(&rho, 4).unwrap();
        let scale = oracle.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let est = estimate_bhomopt(&expected_bhom(&rho, &phases, &bins, 10_000), 4, BhomOptWeighting::Unweighted).unwrap();
        for (a, b) in est.iter().zip(&oracle) {
            assert!((a - b).abs() < 0.1 * scale, "{est:?} vs {oracle:?}");
        }
    }
    let n1 = weyl_moments(&build_fock(1, 14).unwrap(), 4).unwrap();
    assert!((n1[0] - 15.0 / 4.0).abs() < 1e-10);
}

#[test]
fn bhomopt_rejects_degenerate_designs() {
    let vac = build_fock(0, 12).unwrap();
    let bins = cvtomo::phase_space::QuadratureBins::new(41, 6.0).unwrap();
    let rec = expected_bhom(&vac, &[0.0, 1.0], &bins, 100);
    assert!(matches!(estimate_bhomopt(&rec, 2, BhomOptWeighting::Unweighted), Err(Error::IllPosed(_))));
    let rec = expected_bhom(&vac, &[0.3, 0.3, 0.3, 0.3], &bins, 100);
    assert!(matches!(estimate_bhomopt(&rec, 2, BhomOptWeighting::Unweighted), Err(Error::IllPosed(_))));
}

/// Two-node binomial design, exact expectation by enumeration.
#[test]
fn ratio_moments_two_nodes() {
    let p = [0.3, 0.6];
    let n0 = 200u64;
    let d0 = Binomial::new(p[0], n0).unwrap();
    let d1 = Binomial::new(p[1], n0).unwrap();
    let (mut a1, mut a2, mut a9) = (0.0, 0.0, 0.0);
    for i in 0..=n0 {
        for j in 0..=n0 {
            if i + j == 0 {
                continue;
            }
            let w = d0.pmf(i) * d1.pmf(j);
            let (x, y) = (i as f64, j as f64);
            let n = x + y;
            a1 += w * x / n;
            a2 += w * x * y / (n * n);
            a9 += w * (x / n0 as f64) * (y / n0 as f64) / (n / n0 as f64);
        }
    }
    let n0f = n0 as f64;
    let p1 = ratio_moment_predict(&p, n0f, RatioMoment::A1 { l: 0 }).unwrap();
    let p2 = ratio_moment_predict(&p, n0f, RatioMoment::A2 { l: 0, lp: 1 }).unwrap();
    let p9 = ratio_moment_predict(&p, n0f, RatioMoment::A9 { l: 0, lp: 1 }).unwrap();
    // residuals are second order in 1/N0
    assert!((a1 - p1).abs() < 1e-5, "{a1} {p1}");
    assert!((a2 - p2).abs() < 1e-5, "{a2} {p2}");
    assert!((a9 - p9).abs() < 1e-5, "{a9} {p9}");
    assert!((a1 - 1.0 / 3.0).abs() > 1e-4);
}

#[test]
fn ratio_moment_argument_checks() {
    assert!(ratio_moment_predict(&[], 10.0, RatioMoment::A1 { l: 0 }).is_err());
    assert!(ratio_moment_predict(&[0.5], 10.0, RatioMoment::A1 { l: 1 }).is_err());
    assert!(ratio_moment_predict(&[1.5], 10.0, RatioMoment::A1 { l: 0 }).is_err());
    assert!(ratio_moment_predict(&[0.5], 0.5, RatioMoment::A1 { l: 0 }).is_err());
}

#[test]
fn mse_harness_smoke() {
    let mut exp = MseExperiment::new(StateFamily::Fock { n: 0 }, Method::Het, 1);
    exp.replications = 50;
    exp.het_events = 10_000;
    let a = run_mse_harness(&exp).unwrap();
    let b = run_mse_harness(&exp).unwrap();
    assert_eq!(a, b);
    assert!(a.scaled_mse > 0.0 && a.standard_error > 0.0);
    assert!((a.scrb_reference - 2.0).abs() < 1e-3);
    assert!(a.ratio > 0.5 && a.ratio < 1.5, "{}", a.ratio);
    assert_eq!(a.csv_row().split(',').count(), MseReport::CSV_HEADER.split(',').count());
    exp.replications = 1;
    assert!(run_mse_harness(&exp).is_err());
    exp.replications = 10;
    exp.method = Method::Bhom;
    exp.eta = 0.5;
    assert!(run_mse_harness(&exp).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn welford_merge_matches_single_pass(xs in prop::collection::vec(-100.0f64..100.0, 2..200), split in 0usize..200) {
        let split = split.min(xs.len());
        let mut all = RunningStats::default();
        let mut left = RunningStats::default();
        let mut right = RunningStats::default();
        for (i, &x) in xs.iter().enumerate() {
            all.push(x);
            if i < split { left.push(x) } else { right.push(x) }
        }
        let merged = left.merge(&right);
        prop_assert_eq!(merged.count, all.count);
        prop_assert!((merged.mean - all.mean).abs() < 1e-9);
        prop_assert!((merged.variance() - all.variance()).abs() < 1e-7 * all.variance().max(1.0));
        prop_assert!(merged.standard_error() >= 0.0);
    }

    #[test]
    fn sample_average_is_scale_free(scale in 0.01f64..100.0, seed in any::<u64>()) {
        let mut rng = substream(seed, 0);
        let n = 50;
        let counts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let table: Vec<f64> = (0..n * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = sample_average(&counts, &table, 3).unwrap();
        let scaled: Vec<f64> = counts.iter().map(|c| c * scale).collect();
        let b = sample_average(&scaled, &table, 3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
