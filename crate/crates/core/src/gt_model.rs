//! Adaptive multi-modal ground-truth distributions.
//!
//! Each labeled pixel gets a mixture of discretized Laplacians, one per
//! disparity cluster found in its window. The centre cluster is anchored at
//! the pixel's own (sub-pixel) label and keeps at least weight `α`; the other
//! clusters share `1 − α` in proportion to their size. A window with a single
//! cluster degenerates to a uni-modal Laplacian at the label.

use std::ops::Deref;

use rayon::prelude::*;

use crate::clustering::{cluster_disparities, extract_window_into, ClusterSet, WindowConfig};
use crate::error::{Error, Result};
use crate::raster_io::{DisparityMap, DistributionVolume};

/// Tolerance on `Σ_d p(d) = 1` for in-memory `f64` distributions.
pub const DISTRIBUTION_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    alpha: f64,
    b: f64,
    d_max: usize,
}

impl ModelParams {
    pub fn new(alpha: f64, b: f64, d_max: usize) -> Result<Self> {
        if !(0.5..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig(format!("alpha must lie in [0.5, 1], got {alpha}")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidConfig(format!("Laplacian scale b must be positive, got {b}")));
        }
        if d_max == 0 {
            return Err(Error::InvalidConfig("d_max must be at least 1".into()));
        }
        Ok(ModelParams { alpha, b, d_max })
    }

    /// Centre weight fraction α.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Laplacian scale shared by all components.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Candidate count D.
    pub fn d_max(&self) -> usize {
        self.d_max
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha: 0.8,
            b: 0.8,
            d_max: 192,
        }
    }
}

/// A probability vector over disparity candidates `0..D`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution(Vec<f64>);

impl DiscreteDistribution {
    /// Validates nonnegativity and `Σ = 1` within [`DISTRIBUTION_SUM_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidConfig("probabilities must be finite and nonnegative".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_SUM_TOLERANCE {
            return Err(Error::Unnormalized { sum });
        }
        Ok(DiscreteDistribution(probs))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DiscreteDistribution {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for DiscreteDistribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Mixture weights `w_k`, in the same order as `clusters.clusters`.
///
/// With `N = Σ|Ω_k|`: `w₁ = α + (|Ω₁| − 1)(1 − α)/(N − 1)` for the centre
/// cluster and `w_k = |Ω_k|(1 − α)/(N − 1)` otherwise. A single cluster gets weight 1.
pub fn compute_weights(clusters: &ClusterSet, params: &ModelParams) -> Vec<f64> {
    let n = clusters.valid_count();
    if clusters.len() == 1 || n <= 1 {
        let mut w = vec![0.0; clusters.len()];
        w[clusters.center_index] = 1.0;
        return w;
    }
    let alpha = params.alpha;
    let share = (1.0 - alpha) / (n - 1) as f64;
    clusters
        .clusters
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if k == clusters.center_index {
                alpha + (c.cardinality() - 1) as f64 * share
            } else {
                c.cardinality() as f64 * share
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Component {
    weight: f64,
    mean: f64,
    /// Distance from `mean` to the candidate range; zero for in-range means.
    shift: f64,
    normalizer: f64,
}

/// `Σ_k w_k · Laplacian(d; μ_k, b)` with every Laplacian normalized over `0..D`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMixture {
    components: Vec<Component>,
    b: f64,
    d_max: usize,
}

impl LaplacianMixture {
    /// `weights` and `means` are paired per component.
    pub fn new(weights: &[f64], means: &[f64], b: f64, d_max: usize) -> Self {
        let hi = (d_max - 1) as f64;
        let components = weights
            .iter()
            .zip(means)
            .map(|(&weight, &mean)| {
                // out-of-range means would underflow every candidate; measure
                // distances relative to the nearest candidate instead
                let shift = (-mean).max(mean - hi).max(0.0);
                let normalizer = (0..d_max)
                    .map(|d| (-((d as f64 - mean).abs() - shift) / b).exp())
                    .sum();
                Component {
                    weight,
                    mean,
                    shift,
                    normalizer,
                }
            })
            .collect();
        LaplacianMixture { components, b, d_max }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    #[inline]
    pub fn density(&self, d: usize) -> f64 {
        let d = d as f64;
        let mut p = 0.0;
        for c in &self.components {
            let lap = (-((d - c.mean).abs() - c.shift) / self.b).exp() / c.normalizer;
            p += c.weight * lap;
        }
        p
    }

    pub fn to_distribution(&self) -> DiscreteDistribution {
        DiscreteDistribution((0..self.d_max).map(|d| self.density(d)).collect())
    }
}

/// Mixture for one pixel, with `μ₁` replaced by `center_gt`.
///
/// Returns `None` when `center_gt` lies outside `[0, D − 1]`; such pixels are not supervised.
pub fn build_mixture(clusters: &ClusterSet, center_gt: f64, params: &ModelParams) -> Option<LaplacianMixture> {
    if !(center_gt >= 0.0 && center_gt <= (params.d_max - 1) as f64) {
        return None;
    }
    let weights = compute_weights(clusters, params);
    let means: Vec<f64> = clusters
        .clusters
        .iter()
        .enumerate()
        .map(|(k, c)| if k == clusters.center_index { center_gt } else { c.mean })
        .collect();
    Some(LaplacianMixture::new(&weights, &means, params.b, params.d_max))
}

/// The ground-truth distribution `p_gt` for one pixel. See [`build_mixture`].
pub fn build_gt_distribution(
    clusters: &ClusterSet,
    center_gt: f64,
    params: &ModelParams,
) -> Option<DiscreteDistribution> {
    build_mixture(clusters, center_gt, params).map(|m| m.to_distribution())
}

/// A ground-truth volume with the per-pixel bookkeeping needed downstream.
#[derive(Debug, Clone)]
pub struct GtVolume {
    pub volume: DistributionVolume,
    /// `true` where a distribution was emitted; skipped pixels have all-zero columns.
    pub modeled: Vec<bool>,
    /// Cluster count K per pixel, `0` for skipped pixels.
    pub modal_counts: Vec<usize>,
}

impl GtVolume {
    pub fn skipped_count(&self) -> usize {
        self.modeled.iter().filter(|m| !**m).count()
    }
}

/// Runs window extraction, clustering, weighting and mixture construction for every pixel.
pub fn build_gt_volume(gt: &DisparityMap, cfg: &WindowConfig, params: &ModelParams) -> GtVolume {
    let (width, height) = (gt.width(), gt.height());
    let mixtures: Vec<Option<LaplacianMixture>> = (0..width * height)
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            let (x, y) = (i % width, i / width);
            if !extract_window_into(gt, x, y, cfg, scratch) {
                return None;
            }
            let clusters = cluster_disparities(scratch, cfg);
            build_mixture(&clusters, scratch[0].disparity, params)
        })
        .collect();

    let mut volume = DistributionVolume::zeros(width, height, params.d_max);
    let n = width * height;
    if n > 0 {
        volume
            .as_mut_slice()
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(d, plane)| {
                for (p, m) in plane.iter_mut().zip(&mixtures) {
                    if let Some(m) = m {
                        *p = m.density(d) as f32;
                    }
                }
            });
    }

    let modeled = mixtures.iter().map(Option::is_some).collect();
    let modal_counts = mixtures
        .iter()
        .map(|m| m.as_ref().map_or(0, LaplacianMixture::len))
        .collect();
    GtVolume {
        volume,
        modeled,
        modal_counts,
    }
}
