//! Cross-entropy against soft targets, the smooth L1 baseline, and per-region loss reports.
//!
//! Losses are in nats. Predicted probabilities are clamped below at
//! [`LOG_CLAMP`] before taking the logarithm.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster_io::DistributionVolume;

pub const LOG_CLAMP: f64 = 1e-12;

/// `−Σ_d p_gt(d) · ln p(d)`.
pub fn cross_entropy(p_gt: &[f64], p: &[f64]) -> Result<f64> {
    if p_gt.len() != p.len() {
        return Err(Error::DimensionMismatch(format!(
            "target has {} candidates, prediction has {}",
            p_gt.len(),
            p.len()
        )));
    }
    Ok(-p_gt
        .iter()
        .zip(p)
        .map(|(&t, &q)| if t == 0.0 { 0.0 } else { t * q.max(LOG_CLAMP).ln() })
        .sum::<f64>())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Gradient of `cross_entropy(p_gt, softmax(logits))` with respect to the logits:
/// `softmax(logits) − p_gt`.
pub fn ce_gradient_wrt_logits(p_gt: &[f64], logits: &[f64]) -> Result<Vec<f64>> {
    if p_gt.len() != logits.len() {
        return Err(Error::DimensionMismatch(format!(
            "target has {} candidates, logits have {}",
            p_gt.len(),
            logits.len()
        )));
    }
    Ok(softmax(logits).into_iter().zip(p_gt).map(|(q, t)| q - t).collect())
}

/// Smooth L1: `0.5 Δ²` for `|Δ| < 1`, else `|Δ| − 0.5`.
pub fn smooth_l1(d_hat: f64, d_gt: f64) -> f64 {
    let delta = (d_hat - d_gt).abs();
    if delta < 1.0 {
        0.5 * delta * delta
    } else {
        delta - 0.5
    }
}

/// Sums with a fixed binary tree so the result does not depend on scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mean loss over supervised pixels, split into edge and non-edge regions.
///
/// Region means are `NaN` when the region holds no pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub edge_mean: f64,
    pub nonedge_mean: f64,
    pub pixel_count: usize,
    pub edge_count: usize,
    pub nonedge_count: usize,
}

impl fmt::Display for LossReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "loss.total={}", self.total)?;
        writeln!(f, "loss.edge_mean={}", self.edge_mean)?;
        writeln!(f, "loss.nonedge_mean={}", self.nonedge_mean)?;
        writeln!(f, "loss.pixel_count={}", self.pixel_count)?;
        writeln!(f, "loss.edge_count={}", self.edge_count)?;
        writeln!(f, "loss.nonedge_count={}", self.nonedge_count)
    }
}

fn check_pair(a: &DistributionVolume, b: &DistributionVolume) -> Result<()> {
    if (a.width(), a.height(), a.d_max()) != (b.width(), b.height(), b.d_max()) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.d_max(),
            a.height(),
            a.width(),
            b.d_max(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

fn check_mask(name: &str, mask: &[bool], n: usize) -> Result<()> {
    if mask.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{name} has {} entries for {n} pixels",
            mask.len()
        )));
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        pairwise_sum(values) / values.len() as f64
    }
}

/// Per-pixel cross-entropy between a target and a predicted volume, averaged over
/// pixels with `modeled[i]` set. `edge_mask` splits the average by region.
pub fn volume_loss(
    p_gt: &DistributionVolume,
    modeled: &[bool],
    p: &DistributionVolume,
    edge_mask: &[bool],
) -> Result<LossReport> {
    check_pair(p_gt, p)?;
    let n = p_gt.pixel_count();
    check_mask("modeled mask", modeled, n)?;
    check_mask("edge mask", edge_mask, n)?;

    let losses: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(t, q), i| {
                if !modeled[i] {
                    return None;
                }
                p_gt.column_into(i, t);
                p.column_into(i, q);
                Some(cross_entropy(t, q).expect("columns share D"))
            },
        )
        .collect();

    let (mut all, mut edge, mut nonedge) = (Vec::new(), Vec::new(), Vec::new());
    for (i, l) in losses.iter().enumerate() {
        if let Some(l) = *l {
            all.push(l);
            if edge_mask[i] {
                edge.push(l);
            } else {
                nonedge.push(l);
            }
        }
    }
    Ok(LossReport {
        total: mean(&all),
        edge_mean: mean(&edge),
        nonedge_mean: mean(&nonedge),
        pixel_count: all.len(),
        edge_count: edge.len(),
        nonedge_count: nonedge.len(),
    })
}

/// Mean cross-entropy of `softmax(logits)` against `p_gt` over modeled pixels,
/// and its gradient with respect to the logits.
///
/// The gradient is that of the mean, `(softmax − p_gt) / N`, with zeros at
/// unmodeled pixels. An empty selection yields loss `0` and a zero gradient.
pub fn volume_loss_and_grad(
    p_gt: &DistributionVolume,
    modeled: &[bool],
    logits: &DistributionVolume,
) -> Result<(f64, DistributionVolume)> {
    check_pair(p_gt, logits)?;
    let n = p_gt.pixel_count();
    check_mask("modeled mask", modeled, n)?;
    let count = modeled.iter().filter(|m| **m).count();

    let per_pixel: Vec<Option<(f64, Vec<f64>)>> = (0..n)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(t, l), i| {
                if !modeled[i] {
                    return None;
                }
                p_gt.column_into(i, t);
                logits.column_into(i, l);
                let q = softmax(l);
                let loss = cross_entropy(t, &q).expect("columns share D");
                let grad = q.iter().zip(t.iter()).map(|(q, t)| q - t).collect();
                Some((loss, grad))
            },
        )
        .collect();

    let losses: Vec<f64> = per_pixel.iter().flatten().map(|(l, _)| *l).collect();
    let loss = if count == 0 { 0.0 } else { pairwise_sum(&losses) / count as f64 };

    let mut grad = DistributionVolume::zeros(p_gt.width(), p_gt.height(), p_gt.d_max());
    if n > 0 {
        let scale = if count == 0 { 0.0 } else { 1.0 / count as f64 };
        grad.as_mut_slice()
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(d, plane)| {
                for (g, px) in plane.iter_mut().zip(&per_pixel) {
                    if let Some((_, pg)) = px {
                        *g = (pg[d] * scale) as f32;
                    }
                }
            });
    }
    Ok((loss, grad))
}
