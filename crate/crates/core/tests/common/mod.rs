#![allow(dead_code)]

use adl_core::clustering::WindowSample;
use adl_core::DisparityMap;
use rand::Rng;

pub const STEP_WIDTH: usize = 32;
pub const STEP_HEIGHT: usize = 8;
pub const STEP_NEAR: f32 = 60.0;
pub const STEP_FAR: f32 = 20.0;

/// Left half at disparity 20, right half at 60; the edge lies between columns 15 and 16.
pub fn step_edge() -> DisparityMap {
    let values = (0..STEP_WIDTH * STEP_HEIGHT)
        .map(|i| if i % STEP_WIDTH < STEP_WIDTH / 2 { STEP_FAR } else { STEP_NEAR })
        .collect();
    DisparityMap::from_values(STEP_WIDTH, STEP_HEIGHT, values).unwrap()
}

/// Random map with a few piecewise-constant layers, sub-pixel noise, and optional holes.
pub fn random_map(rng: &mut impl Rng, width: usize, height: usize, coverage: f64) -> DisparityMap {
    let layers: Vec<f32> = (0..3).map(|_| rng.random_range(0.0..150.0)).collect();
    let split: Vec<usize> = (0..2).map(|_| rng.random_range(0..width.max(1))).collect();
    let mut values = Vec::with_capacity(width * height);
    let mut mask = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let layer = usize::from(x >= split[0]) + usize::from(x + y >= split[1] + height / 2);
            values.push(layers[layer.min(2)] + rng.random_range(0.0..2.0) + 0.05 * y as f32);
            mask.push(rng.random_bool(coverage));
        }
    }
    DisparityMap::with_mask(width, height, values, mask).unwrap()
}

/// Union-find over every pair of samples within `eps`; returns partitions as
/// sorted lists of sorted member values.
pub fn union_find_partition(values: &[f64], eps: f64) -> Vec<Vec<f64>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).abs() <= eps {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(values[i]);
    }
    let mut out: Vec<Vec<f64>> = groups
        .into_values()
        .map(|mut g| {
            g.sort_by(f64::total_cmp);
            g
        })
        .collect();
    out.sort_by(|a, b| a[0].total_cmp(&b[0]));
    out
}

pub fn samples(values: &[f64], center: usize) -> Vec<WindowSample> {
    values
        .iter()
        .enumerate()
        .map(|(i, &d)| WindowSample {
            disparity: d,
            is_center: i == center,
        })
        .collect()
}

/// Prints one verdict line and panics on failure.
pub fn verdict(name: &str, ok: bool, detail: String) {
    println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name} failed: {detail}");
}
