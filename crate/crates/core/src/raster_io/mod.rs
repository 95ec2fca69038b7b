//! Disparity maps, distribution volumes and their on-disk formats.
//!
//! Three formats are supported:
//!
//! * PFM (`Pf`, grayscale float32), the dense SceneFlow ground-truth format.
//! * KITTI 16-bit PNG, where `disparity = value / 256` and `0` marks a missing label.
//! * `ADLV`, a self-describing little-endian container for `D × H × W` probability volumes.

mod kitti;
mod pfm;
mod volume;

pub use kitti::{read_kitti_png, read_mask_png, write_kitti_png, write_mask_png};
pub use pfm::{mask_sidecar_path, read_pfm, write_pfm};
pub use volume::{read_volume, write_volume, LoadedVolume, VOLUME_MAGIC, VOLUME_VERSION};

use std::path::Path;

use crate::error::{Error, Result};

/// An `H × W` disparity raster with a validity mask.
///
/// Values at invalid pixels carry no meaning; every consumer must consult
/// [`DisparityMap::is_valid`] first.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
    valid: Vec<bool>,
}

impl DisparityMap {
    /// Builds a map from raw values, marking non-finite and negative entries invalid.
    pub fn from_values(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        check_len(width, height, values.len())?;
        let valid = values.iter().map(|v| v.is_finite() && *v >= 0.0).collect();
        Ok(DisparityMap {
            width,
            height,
            values,
            valid,
        })
    }

    /// Builds a map from values and an explicit mask. Pixels whose value is
    /// non-finite or negative are invalid regardless of the mask.
    pub fn with_mask(width: usize, height: usize, values: Vec<f32>, mask: Vec<bool>) -> Result<Self> {
        check_len(width, height, values.len())?;
        check_len(width, height, mask.len())?;
        let valid = values
            .iter()
            .zip(&mask)
            .map(|(v, m)| *m && v.is_finite() && *v >= 0.0)
            .collect();
        Ok(DisparityMap {
            width,
            height,
            values,
            valid,
        })
    }

    /// A map whose every pixel is invalid.
    pub fn invalid(width: usize, height: usize) -> Self {
        DisparityMap {
            width,
            height,
            values: vec![0.0; width * height],
            valid: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[self.index(x, y)]
    }

    /// The disparity at `(x, y)`, or `None` when the pixel is invalid.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        let i = self.index(x, y);
        self.valid[i].then(|| self.values[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Fraction of pixels that carry a label.
    pub fn coverage(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.valid_count() as f64 / self.len() as f64
    }

    pub fn same_shape(&self, other: &DisparityMap) -> bool {
        self.width == other.width && self.height == other.height
    }
}

fn check_len(width: usize, height: usize, len: usize) -> Result<()> {
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::DimensionMismatch(format!("{width}x{height} overflows")))?;
    if expected != len {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height} raster needs {expected} entries, got {len}"
        )));
    }
    Ok(())
}

/// Per-pixel probability distributions over `D` disparity candidates.
///
/// Storage is d-major then row-major: entry `(d, y, x)` lives at
/// `d * H * W + y * W + x`, the same layout as the `ADLV` file payload.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionVolume {
    width: usize,
    height: usize,
    d_max: usize,
    probs: Vec<f32>,
}

/// Tolerance on `Σ_d p(d) = 1` for stored `f32` volumes.
pub const VOLUME_SUM_TOLERANCE: f64 = 1e-5;

impl DistributionVolume {
    pub fn zeros(width: usize, height: usize, d_max: usize) -> Self {
        DistributionVolume {
            width,
            height,
            d_max,
            probs: vec![0.0; width * height * d_max],
        }
    }

    pub fn from_raw(width: usize, height: usize, d_max: usize, probs: Vec<f32>) -> Result<Self> {
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(d_max))
            .ok_or_else(|| Error::DimensionMismatch(format!("{d_max}x{height}x{width} overflows")))?;
        if probs.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{d_max}x{height}x{width} volume needs {expected} entries, got {}",
                probs.len()
            )));
        }
        Ok(DistributionVolume {
            width,
            height,
            d_max,
            probs,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of disparity candidates `D`.
    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.probs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.probs
    }

    pub fn into_raw(self) -> Vec<f32> {
        self.probs
    }

    /// The `H × W` plane of candidate `d`.
    pub fn plane(&self, d: usize) -> &[f32] {
        let n = self.pixel_count();
        &self.probs[d * n..(d + 1) * n]
    }

    #[inline]
    pub fn get(&self, d: usize, pixel: usize) -> f32 {
        self.probs[d * self.pixel_count() + pixel]
    }

    /// Copies the distribution at flat pixel index `pixel` into `out` as `f64`.
    pub fn column_into(&self, pixel: usize, out: &mut Vec<f64>) {
        let n = self.pixel_count();
        out.clear();
        out.extend((0..self.d_max).map(|d| f64::from(self.probs[d * n + pixel])));
    }

    pub fn column(&self, pixel: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.d_max);
        self.column_into(pixel, &mut out);
        out
    }

    /// A pixel whose column is identically zero was skipped when the volume was built.
    pub fn is_skipped(&self, pixel: usize) -> bool {
        let n = self.pixel_count();
        (0..self.d_max).all(|d| self.probs[d * n + pixel] == 0.0)
    }

    /// Number of non-skipped pixels whose column does not sum to one within
    /// [`VOLUME_SUM_TOLERANCE`] or holds entries outside `[0, 1]`.
    pub fn unnormalized_pixels(&self) -> usize {
        let n = self.pixel_count();
        let mut sums = vec![0.0f64; n];
        let mut out_of_range = vec![false; n];
        let mut nonzero = vec![false; n];
        for plane in self.probs.chunks_exact(n.max(1)).take(self.d_max) {
            for (i, &p) in plane.iter().enumerate() {
                sums[i] += f64::from(p);
                out_of_range[i] |= !(0.0..=1.0).contains(&p);
                nonzero[i] |= p != 0.0;
            }
        }
        (0..n)
            .filter(|&i| nonzero[i] && (out_of_range[i] || (sums[i] - 1.0).abs() > VOLUME_SUM_TOLERANCE))
            .count()
    }
}

/// Raster formats recognised by file extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFormat {
    Pfm,
    KittiPng,
}

impl MapFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("pfm") => Ok(MapFormat::Pfm),
            Some("png") => Ok(MapFormat::KittiPng),
            _ => Err(Error::Unsupported {
                format: "disparity map",
                reason: format!("cannot infer format of {} (expected .pfm or .png)", path.display()),
            }),
        }
    }
}

/// Reads a disparity map, choosing the decoder from the file extension.
pub fn read_map(path: &Path) -> Result<DisparityMap> {
    match MapFormat::from_path(path)? {
        MapFormat::Pfm => read_pfm(path),
        MapFormat::KittiPng => read_kitti_png(path),
    }
}

/// Writes a disparity map, choosing the encoder from the file extension.
pub fn write_map(map: &DisparityMap, path: &Path) -> Result<()> {
    match MapFormat::from_path(path)? {
        MapFormat::Pfm => write_pfm(map, path),
        MapFormat::KittiPng => write_kitti_png(map, path),
    }
}
