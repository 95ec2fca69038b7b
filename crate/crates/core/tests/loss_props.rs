mod common;

use adl_core::loss::{ce_gradient_wrt_logits, cross_entropy, softmax, volume_loss};
use adl_core::DistributionVolume;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / z).collect()
}

/// CE∘softmax evaluated through log-softmax, independent of the library's softmax.
fn ce_of_logits(p_gt: &[f64], logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    -p_gt.iter().zip(logits).map(|(t, l)| t * (l - lse)).sum::<f64>()
}

fn finite_difference(p_gt: &[f64], logits: &[f64], h: f64) -> Vec<f64> {
    (0..logits.len())
        .map(|i| {
            let mut up = logits.to_vec();
            let mut down = logits.to_vec();
            up[i] += h;
            down[i] -= h;
            (ce_of_logits(p_gt, &up) - ce_of_logits(p_gt, &down)) / (2.0 * h)
        })
        .collect()
}

pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-12))
        .fold(0.0, f64::max)
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let logits: Vec<f64> = (0..64).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut target = vec![0.0; 64];
        target[rng.random_range(0..64)] = 1.0;
        let g = ce_gradient_wrt_logits(&target, &logits).unwrap();
        let fd = finite_difference(&target, &logits, 1e-4);
        let err = max_relative_error(&g, &fd);
        assert!(err < 1e-5, "relative error {err}");
        // the library route agrees with the independent one
        let direct = cross_entropy(&target, &softmax(&logits)).unwrap();
        assert!((direct - ce_of_logits(&target, &logits)).abs() < 1e-12);
    }
}

#[test]
fn mixture_target_matches_direct_sum() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let set = adl_core::ClusterSet {
        clusters: vec![
            adl_core::clustering::Cluster { members: vec![50.0; 6], mean: 50.0 },
            adl_core::clustering::Cluster { members: vec![80.0; 3], mean: 80.0 },
        ],
        center_index: 0,
    };
    let target = adl_core::build_gt_distribution(&set, 50.0, &adl_core::ModelParams::default()).unwrap();
    for _ in 0..20 {
        let p = random_distribution(&mut rng, 192);
        let mut oracle = 0.0;
        for d in 0..192 {
            oracle -= target[d] * p[d].ln();
        }
        assert!((cross_entropy(&target, &p).unwrap() - oracle).abs() < 1e-10);
    }
}

proptest! {
    #[test]
    fn gibbs_inequality(seed in any::<u64>(), n in 2usize..64) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t = random_distribution(&mut rng, n);
        let p = random_distribution(&mut rng, n);
        let h = cross_entropy(&t, &t).unwrap();
        prop_assert!(cross_entropy(&t, &p).unwrap() >= h - 1e-12);
    }

    #[test]
    fn gradient_sums_to_zero(logits in prop::collection::vec(-10.0f64..10.0, 1..64), seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t = random_distribution(&mut rng, logits.len());
        let g = ce_gradient_wrt_logits(&t, &logits).unwrap();
        prop_assert!(g.iter().sum::<f64>().abs() < 1e-12);
    }
}

fn random_volume(rng: &mut impl Rng, w: usize, h: usize, d: usize) -> DistributionVolume {
    let mut probs = vec![0.0f32; w * h * d];
    for px in 0..w * h {
        let col = random_distribution(rng, d);
        for (k, v) in col.iter().enumerate() {
            probs[k * w * h + px] = *v as f32;
        }
    }
    DistributionVolume::from_raw(w, h, d, probs).unwrap()
}

#[test]
fn volume_loss_matches_per_pixel_mean() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let t = random_volume(&mut rng, 8, 8, 32);
        let p = random_volume(&mut rng, 8, 8, 32);
        let modeled: Vec<bool> = (0..64).map(|_| rng.random_bool(0.8)).collect();
        let edges: Vec<bool> = (0..64).map(|_| rng.random_bool(0.3)).collect();
        let r = volume_loss(&t, &modeled, &p, &edges).unwrap();

        let (mut sum, mut n, mut esum, mut en) = (0.0, 0usize, 0.0, 0usize);
        for px in 0..64 {
            if !modeled[px] {
                continue;
            }
            let mut ce = 0.0;
            for d in 0..32 {
                ce -= f64::from(t.get(d, px)) * f64::from(p.get(d, px)).ln();
            }
            sum += ce;
            n += 1;
            if edges[px] {
                esum += ce;
                en += 1;
            }
        }
        assert_eq!(r.pixel_count, n);
        assert!((r.total - sum / n as f64).abs() < 1e-8);
        assert!((r.edge_mean - esum / en as f64).abs() < 1e-8);
        let combined = (r.edge_mean * r.edge_count as f64 + r.nonedge_mean * r.nonedge_count as f64) / n as f64;
        assert!((combined - r.total).abs() < 1e-10);
    }
}

#[test]
fn self_loss_is_mean_entropy() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let t = random_volume(&mut rng, 4, 3, 16);
    let r = volume_loss(&t, &[true; 12], &t, &[false; 12]).unwrap();
    let entropy: f64 = (0..12)
        .map(|px| {
            let c = t.column(px);
            -c.iter().map(|v| v * v.ln()).sum::<f64>()
        })
        .sum::<f64>()
        / 12.0;
    assert!((r.total - entropy).abs() < 1e-10);
    assert_eq!(r.total, r.nonedge_mean);
}

#[test]
fn volume_loss_independent_of_thread_count() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
    let t = random_volume(&mut rng, 16, 16, 24);
    let p = random_volume(&mut rng, 16, 16, 24);
    let edges: Vec<bool> = (0..256).map(|i| i % 3 == 0).collect();
    let a = volume_loss(&t, &[true; 256], &p, &edges).unwrap();
    for threads in [1, 2, 5] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let b = pool.install(|| volume_loss(&t, &[true; 256], &p, &edges).unwrap());
        assert_eq!(a, b);
    }
}
