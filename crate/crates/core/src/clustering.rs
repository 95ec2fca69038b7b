//! One-dimensional DBSCAN over the ground-truth disparities of a local window.
//!
//! Distances are measured on disparity only; pixel coordinates do not enter.
//! With `min_pts = 1` every sample is a core point and the clusters are the
//! connected components of the "within ε" graph, which for scalars are found
//! by sorting and splitting wherever consecutive values are more than ε apart.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::raster_io::DisparityMap;

/// Local window and DBSCAN thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    rows: usize,
    cols: usize,
    eps: f64,
    min_pts: usize,
}

impl WindowConfig {
    /// Window used for dense ground truth.
    pub const DENSE: WindowConfig = WindowConfig {
        rows: 1,
        cols: 9,
        eps: 3.0,
        min_pts: 1,
    };

    /// Window used for sparse (LiDAR-style) ground truth.
    pub const SPARSE: WindowConfig = WindowConfig {
        rows: 3,
        cols: 9,
        eps: 3.0,
        min_pts: 1,
    };

    pub fn new(rows: usize, cols: usize, eps: f64, min_pts: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows % 2 == 0 || cols % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "window {rows}x{cols} must have odd, positive sides"
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {eps}")));
        }
        if min_pts == 0 {
            return Err(Error::InvalidConfig("min_pts must be at least 1".into()));
        }
        Ok(WindowConfig {
            rows,
            cols,
            eps,
            min_pts,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn min_pts(&self) -> usize {
        self.min_pts
    }

    pub fn area(&self) -> usize {
        self.rows * self.cols
    }
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig::DENSE
    }
}

/// One ground-truth sample from a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSample {
    pub disparity: f64,
    pub is_center: bool,
}

/// Collects the valid disparities of the window centred on `(x, y)`, clipped at
/// the image border. The centre sample comes first.
///
/// Returns `None` when the centre pixel has no label: such pixels are never modeled.
pub fn extract_window(gt: &DisparityMap, x: usize, y: usize, cfg: &WindowConfig) -> Option<Vec<WindowSample>> {
    let mut out = Vec::with_capacity(cfg.area());
    extract_window_into(gt, x, y, cfg, &mut out).then_some(out)
}

pub(crate) fn extract_window_into(
    gt: &DisparityMap,
    x: usize,
    y: usize,
    cfg: &WindowConfig,
    out: &mut Vec<WindowSample>,
) -> bool {
    out.clear();
    let Some(center) = gt.get(x, y) else {
        return false;
    };
    out.push(WindowSample {
        disparity: f64::from(center),
        is_center: true,
    });
    let (hr, hc) = (cfg.rows / 2, cfg.cols / 2);
    let (y0, y1) = (y.saturating_sub(hr), (y + hr).min(gt.height() - 1));
    let (x0, x1) = (x.saturating_sub(hc), (x + hc).min(gt.width() - 1));
    for wy in y0..=y1 {
        for wx in x0..=x1 {
            if (wx, wy) == (x, y) {
                continue;
            }
            if let Some(d) = gt.get(wx, wy) {
                out.push(WindowSample {
                    disparity: f64::from(d),
                    is_center: false,
                });
            }
        }
    }
    true
}

/// One cluster Ω_k.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Member disparities in ascending order.
    pub members: Vec<f64>,
    pub mean: f64,
}

impl Cluster {
    fn from_sorted(members: Vec<f64>) -> Self {
        let mean = members.iter().sum::<f64>() / members.len() as f64;
        Cluster { members, mean }
    }

    pub fn cardinality(&self) -> usize {
        self.members.len()
    }
}

/// The partition of a window's disparities.
///
/// Clusters are ordered by ascending disparity; `center_index` points at Ω₁,
/// the cluster holding the centre pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub center_index: usize,
}

impl ClusterSet {
    /// Number of clusters K.
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn center(&self) -> &Cluster {
        &self.clusters[self.center_index]
    }

    /// N = Σ|Ω_k|, the number of samples housed by some cluster.
    pub fn valid_count(&self) -> usize {
        self.clusters.iter().map(Cluster::cardinality).sum()
    }
}

fn cmp_sample(a: &WindowSample, b: &WindowSample) -> Ordering {
    a.disparity.total_cmp(&b.disparity)
}

/// Partitions window samples with 1D DBSCAN.
///
/// With `min_pts > 1`, samples with fewer than `min_pts` neighbours within ε
/// (the sample itself included) are core-less; those within ε of a core sample
/// join the nearest core sample's cluster (lower disparity on ties), the rest are
/// noise and dropped. A noise centre forms a singleton Ω₁.
///
/// # Panics
///
/// If `values` holds no centre sample.
pub fn cluster_disparities(values: &[WindowSample], cfg: &WindowConfig) -> ClusterSet {
    let mut sorted = values.to_vec();
    sorted.sort_by(cmp_sample);
    let center_pos = sorted
        .iter()
        .position(|s| s.is_center)
        .expect("window samples must contain the centre pixel");
    let eps = cfg.eps;

    if cfg.min_pts <= 1 {
        return split_at_gaps(&sorted, center_pos, eps);
    }

    let n = sorted.len();
    // neighbour counts with a two-pointer sweep
    let mut is_core = vec![false; n];
    let (mut lo, mut hi) = (0usize, 0usize);
    for i in 0..n {
        let d = sorted[i].disparity;
        while sorted[lo].disparity < d - eps {
            lo += 1;
        }
        while hi + 1 < n && sorted[hi + 1].disparity <= d + eps {
            hi += 1;
        }
        is_core[i] = hi + 1 - lo >= cfg.min_pts;
    }

    // label core components in sorted order
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut next = 0usize;
    let mut last_core: Option<usize> = None;
    for i in (0..n).filter(|&i| is_core[i]) {
        match last_core {
            Some(j) if sorted[i].disparity - sorted[j].disparity <= eps => label[i] = label[j],
            Some(_) => {
                next += 1;
                label[i] = Some(next - 1);
            }
            None => {
                label[i] = Some(0);
                next = 1;
            }
        }
        last_core = Some(i);
    }

    // attach border samples to the nearest core sample
    for i in (0..n).filter(|&i| !is_core[i]) {
        let d = sorted[i].disparity;
        let left = (0..i).rev().find(|&j| is_core[j]);
        let right = (i + 1..n).find(|&j| is_core[j]);
        let dist = |j: Option<usize>| j.map(|j| (sorted[j].disparity - d).abs());
        let pick = match (dist(left), dist(right)) {
            (Some(a), Some(b)) => Some(if a <= b { (left, a) } else { (right, b) }),
            (Some(a), None) => Some((left, a)),
            (None, Some(b)) => Some((right, b)),
            (None, None) => None,
        };
        if let Some((Some(j), dist)) = pick {
            if dist <= eps {
                label[i] = label[j];
            }
        }
    }

    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); next];
    for (s, l) in sorted.iter().zip(&label) {
        if let Some(l) = l {
            groups[*l].push(s.disparity);
        }
    }
    let center_value = sorted[center_pos].disparity;
    let mut clusters: Vec<Cluster> = groups.into_iter().map(Cluster::from_sorted).collect();
    let center_index = match label[center_pos] {
        Some(l) => l,
        None => {
            // the centre is noise; house it alone, keeping ascending order
            let at = clusters
                .iter()
                .position(|c| c.mean > center_value)
                .unwrap_or(clusters.len());
            clusters.insert(at, Cluster::from_sorted(vec![center_value]));
            at
        }
    };
    ClusterSet {
        clusters,
        center_index,
    }
}

fn split_at_gaps(sorted: &[WindowSample], center_pos: usize, eps: f64) -> ClusterSet {
    let mut clusters = Vec::new();
    let mut center_index = 0;
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i].disparity - sorted[i - 1].disparity > eps {
            if (start..i).contains(&center_pos) {
                center_index = clusters.len();
            }
            clusters.push(Cluster::from_sorted(
                sorted[start..i].iter().map(|s| s.disparity).collect(),
            ));
            start = i;
        }
    }
    ClusterSet {
        clusters,
        center_index,
    }
}

/// Clusters the window around `(x, y)`, or `None` for an unlabeled centre.
pub fn cluster_at(gt: &DisparityMap, x: usize, y: usize, cfg: &WindowConfig) -> Option<ClusterSet> {
    extract_window(gt, x, y, cfg).map(|w| cluster_disparities(&w, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(values: &[f64], center: usize) -> Vec<WindowSample> {
        values
            .iter()
            .enumerate()
            .map(|(i, &d)| WindowSample {
                disparity: d,
                is_center: i == center,
            })
            .collect()
    }

    #[test]
    fn config_validation() {
        assert!(WindowConfig::new(2, 9, 3.0, 1).is_err());
        assert!(WindowConfig::new(1, 0, 3.0, 1).is_err());
        assert!(WindowConfig::new(1, 9, 0.0, 1).is_err());
        assert!(WindowConfig::new(1, 9, 3.0, 0).is_err());
        assert_eq!(WindowConfig::new(1, 9, 3.0, 1).unwrap(), WindowConfig::DENSE);
    }

    #[test]
    fn dense_interior_window_has_nine_samples() {
        let gt = DisparityMap::from_values(20, 1, (0..20).map(|v| v as f32).collect()).unwrap();
        let w = extract_window(&gt, 10, 0, &WindowConfig::DENSE).unwrap();
        assert_eq!(w.len(), 9);
        assert_eq!(w.iter().filter(|s| s.is_center).count(), 1);
        assert_eq!(w[0].disparity, 10.0);
    }

    #[test]
    fn corner_window_is_clipped() {
        let gt = DisparityMap::from_values(12, 5, vec![1.0; 60]).unwrap();
        let w = extract_window(&gt, 0, 0, &WindowConfig::SPARSE).unwrap();
        // rows 0..=1, cols 0..=4
        assert_eq!(w.len(), 10);
        let w = extract_window(&gt, 11, 4, &WindowConfig::SPARSE).unwrap();
        assert_eq!(w.len(), 10);
    }

    #[test]
    fn sparse_window_counts_only_valid() {
        let values = vec![5.0; 9];
        let mask = vec![true, false, true, false, true, false, true, false, true];
        let gt = DisparityMap::with_mask(9, 1, values, mask).unwrap();
        let w = extract_window(&gt, 4, 0, &WindowConfig::DENSE).unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(cluster_disparities(&w, &WindowConfig::DENSE).valid_count(), 5);
    }

    #[test]
    fn invalid_center_is_not_modeled() {
        let gt = DisparityMap::with_mask(3, 1, vec![1.0; 3], vec![true, false, true]).unwrap();
        assert!(extract_window(&gt, 1, 0, &WindowConfig::DENSE).is_none());
        assert!(cluster_at(&gt, 1, 0, &WindowConfig::DENSE).is_none());
    }

    #[test]
    fn constant_values_form_one_cluster() {
        let set = cluster_disparities(&samples(&[5.0; 9], 4), &WindowConfig::DENSE);
        assert_eq!(set.len(), 1);
        assert_eq!(set.center().mean, 5.0);
    }

    #[test]
    fn two_separated_groups() {
        let set = cluster_disparities(&samples(&[30.0, 10.0, 10.5, 30.2, 11.0], 1), &WindowConfig::DENSE);
        assert_eq!(set.len(), 2);
        assert_eq!(set.clusters[0].members, vec![10.0, 10.5, 11.0]);
        assert_eq!(set.clusters[0].mean, 10.5);
        assert_eq!(set.clusters[1].members, vec![30.0, 30.2]);
        assert!((set.clusters[1].mean - 30.1).abs() < 1e-12);
        assert_eq!(set.center_index, 0);

        let set = cluster_disparities(&samples(&[30.0, 10.0, 10.5, 30.2, 11.0], 3), &WindowConfig::DENSE);
        assert_eq!(set.center_index, 1);
    }

    #[test]
    fn slanted_plane_is_one_cluster() {
        let vals: Vec<f64> = (1..=9).map(f64::from).collect();
        assert_eq!(cluster_disparities(&samples(&vals, 4), &WindowConfig::DENSE).len(), 1);
    }

    #[test]
    fn gap_exactly_eps_joins() {
        let set = cluster_disparities(&samples(&[0.0, 3.0, 6.0], 0), &WindowConfig::DENSE);
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn min_pts_noise_and_border() {
        let cfg = WindowConfig::new(1, 9, 1.0, 3).unwrap();
        // 0,0.5,1 dense; 1.8 border of 1; 10 noise; 20 noise centre
        let set = cluster_disparities(&samples(&[0.0, 0.5, 1.0, 1.8, 10.0, 20.0], 5), &cfg);
        assert_eq!(set.len(), 2);
        assert_eq!(set.clusters[0].members, vec![0.0, 0.5, 1.0, 1.8]);
        assert_eq!(set.center().members, vec![20.0]);
        assert_eq!(set.center_index, 1);
        // the noise sample at 10 is dropped
        assert_eq!(set.valid_count(), 5);
    }

    #[test]
    fn min_pts_border_centre_joins_cluster() {
        let cfg = WindowConfig::new(1, 9, 1.0, 3).unwrap();
        let set = cluster_disparities(&samples(&[0.0, 0.5, 1.0, 1.8], 3), &cfg);
        assert_eq!(set.len(), 1);
        assert_eq!(set.center_index, 0);
    }
}
