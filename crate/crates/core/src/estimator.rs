//! Disparity estimators over per-pixel distributions.
//!
//! * `softargmax` — probability-weighted mean over every candidate.
//! * `sme` — the modal around the global peak, found by walking outward while
//!   probability strictly decreases, then a renormalized mean inside it.
//! * `dme` — the modal with the largest cumulative probability, then a
//!   renormalized mean inside it.
//!
//! Modal boundaries sit at strict local minima; a flat minimum is split at
//! its midpoint (the left of the two middles for even widths). A boundary
//! candidate belongs to the modal on its left. Ties go to the lower disparity.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster_io::{DisparityMap, DistributionVolume};

/// Inputs to [`soft_argmax`] whose sum is further than this from one are rejected.
pub const SOFTARGMAX_SUM_TOLERANCE: f64 = 1e-4;

/// Peak threshold used when counting modals for statistics.
pub const STATS_PEAK_THRESHOLD: f64 = 0.01;

/// One contiguous modal `[d_l, d_r]` (inclusive) of a distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalSegment {
    pub d_l: usize,
    pub d_r: usize,
    pub peak: f64,
    pub mass: f64,
    /// Mean of the distribution renormalized to `[d_l, d_r]`.
    pub mean: f64,
}

fn range_stats(p: &[f64], d_l: usize, d_r: usize) -> ModalSegment {
    let slice = &p[d_l..=d_r];
    let mass: f64 = slice.iter().sum();
    let peak = slice.iter().copied().fold(0.0, f64::max);
    ModalSegment {
        d_l,
        d_r,
        peak,
        mass,
        mean: range_mean(p, d_l, d_r),
    }
}

/// `Σ_{d ∈ [d_l, d_r]} d · p(d) / Σ_{d ∈ [d_l, d_r]} p(d)`.
fn range_mean(p: &[f64], d_l: usize, d_r: usize) -> f64 {
    let mut mass = 0.0;
    let mut moment = 0.0;
    for (d, &v) in p.iter().enumerate().take(d_r + 1).skip(d_l) {
        mass += v;
        moment += d as f64 * v;
    }
    if mass > 0.0 {
        moment / mass
    } else {
        (d_l + d_r) as f64 / 2.0
    }
}

/// `Σ_d d · p(d)`.
pub fn soft_argmax(p: &[f64]) -> Result<f64> {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SOFTARGMAX_SUM_TOLERANCE {
        return Err(Error::Unnormalized { sum });
    }
    Ok(p.iter().enumerate().map(|(d, &v)| d as f64 * v).sum())
}

/// Candidates that close a modal: the last index of each modal except the final one.
fn modal_boundaries(p: &[f64]) -> Vec<usize> {
    let n = p.len();
    let mut cuts = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if p[i] < p[i - 1] {
            // walk the plateau starting at i
            let mut j = i;
            while j + 1 < n && p[j + 1] == p[i] {
                j += 1;
            }
            if j + 1 < n && p[j + 1] > p[j] {
                cuts.push(i + (j - i) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    cuts
}

/// Splits `p` into modals and keeps those whose peak is at least `peak_threshold`.
///
/// With a zero threshold the segments partition `0..D` and their masses sum to `Σ p`.
pub fn segment_modals(p: &[f64], peak_threshold: f64) -> Vec<ModalSegment> {
    if p.is_empty() {
        return Vec::new();
    }
    let mut segments = Vec::new();
    let mut start = 0;
    for cut in modal_boundaries(p).into_iter().chain(std::iter::once(p.len() - 1)) {
        segments.push(range_stats(p, start, cut));
        start = cut + 1;
    }
    segments.retain(|s| s.peak >= peak_threshold);
    segments
}

/// Lowest index of the maximum.
fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (d, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = d;
        }
    }
    best
}

/// The range `[d_l, d_r]` SME selects: grown outward from the global peak while
/// each next candidate is strictly smaller than the current one.
pub fn sme_range(p: &[f64]) -> (usize, usize) {
    let peak = argmax(p);
    let mut d_l = peak;
    while d_l > 0 && p[d_l - 1] < p[d_l] {
        d_l -= 1;
    }
    let mut d_r = peak;
    while d_r + 1 < p.len() && p[d_r + 1] < p[d_r] {
        d_r += 1;
    }
    (d_l, d_r)
}

pub fn sme_estimate(p: &[f64]) -> f64 {
    let (d_l, d_r) = sme_range(p);
    range_mean(p, d_l, d_r)
}

/// The modal DME selects: maximum mass, lower `d_l` on ties.
pub fn dominant_modal(p: &[f64]) -> Option<ModalSegment> {
    let segments = segment_modals(p, 0.0);
    let mut best: Option<ModalSegment> = None;
    for s in segments {
        if best.is_none_or(|b| s.mass > b.mass) {
            best = Some(s);
        }
    }
    best
}

pub fn dme_estimate(p: &[f64]) -> f64 {
    dominant_modal(p).map_or(0.0, |s| s.mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    SoftArgmax,
    Sme,
    Dme,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::SoftArgmax => "softargmax",
            Method::Sme => "sme",
            Method::Dme => "dme",
        }
    }

    pub fn estimate(self, p: &[f64]) -> Result<f64> {
        match self {
            Method::SoftArgmax => soft_argmax(p),
            Method::Sme => Ok(sme_estimate(p)),
            Method::Dme => Ok(dme_estimate(p)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softargmax" => Ok(Method::SoftArgmax),
            "sme" => Ok(Method::Sme),
            "dme" => Ok(Method::Dme),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

/// Applies `method` to every pixel. All-zero (skipped) columns become invalid pixels.
pub fn estimate_volume(volume: &DistributionVolume, method: Method) -> Result<DisparityMap> {
    let n = volume.pixel_count();
    let estimates: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map_init(Vec::new, |col, i| {
            volume.column_into(i, col);
            if col.iter().all(|&v| v == 0.0) {
                return Ok(None);
            }
            method.estimate(col).map(Some)
        })
        .collect::<Result<_>>()?;
    let values = estimates.iter().map(|e| e.unwrap_or(0.0) as f32).collect();
    let mask = estimates.iter().map(Option::is_some).collect();
    DisparityMap::with_mask(volume.width(), volume.height(), values, mask)
}
