mod common;

use adl_core::analysis::{classify_edges, compute_metrics, downsample_gt, modal_statistics};
use adl_core::clustering::WindowConfig;
use adl_core::estimator::STATS_PEAK_THRESHOLD;
use adl_core::gt_model::{build_gt_volume, ModelParams};
use adl_core::DisparityMap;
use common::{random_map, step_edge, STEP_HEIGHT, STEP_WIDTH};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Naive {
    epe: f64,
    rates: [f64; 3],
    d1: f64,
    count: usize,
}

fn naive(pred: &DisparityMap, gt: &DisparityMap, region: impl Fn(usize) -> bool) -> Naive {
    let (mut sum, mut over, mut d1, mut n) = (0.0, [0usize; 3], 0usize, 0usize);
    for i in 0..gt.len() {
        if !pred.mask()[i] || !gt.mask()[i] || !region(i) {
            continue;
        }
        let g = f64::from(gt.values()[i]);
        let e = (f64::from(pred.values()[i]) - g).abs();
        sum += e;
        n += 1;
        for (k, c) in over.iter_mut().enumerate() {
            if e > (k + 1) as f64 {
                *c += 1;
            }
        }
        if e > 3.0 && e > 0.05 * g {
            d1 += 1;
        }
    }
    let pct = |c: usize| 100.0 * c as f64 / n as f64;
    Naive {
        epe: sum / n as f64,
        rates: over.map(pct),
        d1: pct(d1),
        count: n,
    }
}

fn perturbed(rng: &mut ChaCha8Rng, gt: &DisparityMap) -> DisparityMap {
    let values = gt.values().iter().map(|v| v + rng.random_range(-6.0f32..6.0)).collect();
    let mask = gt.mask().iter().map(|_| rng.random_bool(0.9)).collect();
    DisparityMap::with_mask(gt.width(), gt.height(), values, mask).unwrap()
}

#[test]
fn metrics_match_naive_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let gt = random_map(&mut rng, 37, 23, 0.8);
        let pred = perturbed(&mut rng, &gt);
        let edges: Vec<bool> = (0..gt.len()).map(|_| rng.random_bool(0.25)).collect();
        let r = compute_metrics(&pred, &gt, Some(&edges)).unwrap();
        let regions = [
            (r.all, naive(&pred, &gt, |_| true)),
            (r.edge.unwrap(), naive(&pred, &gt, |i| edges[i])),
            (r.nonedge.unwrap(), naive(&pred, &gt, |i| !edges[i])),
        ];
        for (got, want) in regions {
            assert_eq!(got.count, want.count);
            assert!((got.epe - want.epe).abs() < 1e-10);
            assert!((got.d1 - want.d1).abs() < 1e-10);
            for k in 0..3 {
                assert!((got.rate_gt_kpx[k] - want.rates[k]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn constant_shift_gives_that_epe() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gt = random_map(&mut rng, 20, 10, 1.0);
    let shifted = DisparityMap::from_values(20, 10, gt.values().iter().map(|v| v + 4.0).collect()).unwrap();
    let r = compute_metrics(&shifted, &gt, None).unwrap();
    assert!((r.all.epe - 4.0).abs() < 1e-6);
    assert_eq!(r.all.rate_gt_kpx, [100.0; 3]);
    assert!(r.edge.is_none());
}

#[test]
fn edge_mask_matches_cluster_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for cfg in [WindowConfig::DENSE, WindowConfig::SPARSE] {
        let gt = random_map(&mut rng, 30, 12, 0.7);
        let edges = classify_edges(&gt, &cfg);
        let built = build_gt_volume(&gt, &cfg, &ModelParams::default());
        for i in 0..gt.len() {
            assert_eq!(edges[i], built.modal_counts[i] >= 2, "pixel {i}");
        }
    }
}

#[test]
fn step_edge_band() {
    let gt = step_edge();
    let edges = classify_edges(&gt, &WindowConfig::DENSE);
    for (i, e) in edges.iter().enumerate() {
        assert_eq!(*e, (12..20).contains(&(i % STEP_WIDTH)));
    }
    let built = build_gt_volume(&gt, &WindowConfig::DENSE, &ModelParams::default());
    let s = modal_statistics(&built.volume, &gt, &edges, STATS_PEAK_THRESHOLD).unwrap();
    assert_eq!(s.edge.count, 8 * STEP_HEIGHT);
    assert_eq!(s.edge.modal_fractions, [0.0, 100.0, 0.0]);
    assert_eq!(s.nonedge.modal_fractions, [100.0, 0.0, 0.0]);
    assert_eq!(s.all.modal_fractions, [75.0, 25.0, 0.0]);
    assert_eq!(s.all.outlier_rate, 0.0);
}

#[test]
fn modal_fractions_sum_to_hundred() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for coverage in [1.0, 0.5, 0.2] {
        let gt = random_map(&mut rng, 48, 20, coverage);
        let cfg = if coverage < 0.5 { WindowConfig::SPARSE } else { WindowConfig::DENSE };
        let built = build_gt_volume(&gt, &cfg, &ModelParams::default());
        let edges = classify_edges(&gt, &cfg);
        let s = modal_statistics(&built.volume, &gt, &edges, STATS_PEAK_THRESHOLD).unwrap();
        for r in [s.all, s.edge, s.nonedge] {
            if r.count > 0 {
                assert!((r.modal_fractions.iter().sum::<f64>() - 100.0).abs() < 0.01);
            }
        }
        assert_eq!(s.edge.count + s.nonedge.count, s.all.count);
    }
}

#[test]
fn sparsification_is_binomial_and_deterministic() {
    let gt = DisparityMap::from_values(1000, 1000, vec![10.0; 1_000_000]).unwrap();
    for keep in [0.8, 0.6, 0.4, 0.2] {
        let a = downsample_gt(&gt, keep, 7).unwrap();
        let n = gt.len() as f64;
        let sigma = (n * keep * (1.0 - keep)).sqrt();
        assert!((a.valid_count() as f64 - n * keep).abs() <= 3.0 * sigma);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        assert_eq!(a, pool.install(|| downsample_gt(&gt, keep, 7).unwrap()));
    }
}

#[test]
fn sparsification_only_removes_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gt = random_map(&mut rng, 64, 32, 0.6);
    let sparse = downsample_gt(&gt, 0.4, 3).unwrap();
    assert_eq!(sparse.values(), gt.values());
    assert!(gt.mask().iter().zip(sparse.mask()).all(|(g, s)| g | !s));
}
