use std::fmt;

use rayon::prelude::*;

use crate::clustering::{cluster_at, WindowConfig};
use crate::error::{Error, Result};
use crate::estimator::{dme_estimate, segment_modals};
use crate::raster_io::{DisparityMap, DistributionVolume};

/// Edge pixels are those whose ground-truth window clusters into two or more groups.
/// Unlabeled pixels are non-edge.
pub fn classify_edges(gt: &DisparityMap, cfg: &WindowConfig) -> Vec<bool> {
    let width = gt.width();
    (0..gt.len())
        .into_par_iter()
        .map(|i| cluster_at(gt, i % width, i / width, cfg).is_some_and(|c| c.len() >= 2))
        .collect()
}

/// Modal-count buckets and outlier rate for one region, as percentages.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegionModalStats {
    /// Share of pixels with 1, 2 and ≥3 modals.
    pub modal_fractions: [f64; 3],
    /// Share of pixels whose DME estimate is more than 3 px from the label.
    pub outlier_rate: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalStats {
    pub all: RegionModalStats,
    pub edge: RegionModalStats,
    pub nonedge: RegionModalStats,
    pub peak_threshold: f64,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    buckets: [usize; 3],
    outliers: usize,
}

impl Tally {
    fn add(&mut self, modals: usize, outlier: bool) {
        self.buckets[modals.clamp(1, 3) - 1] += 1;
        self.outliers += usize::from(outlier);
    }

    fn finish(self) -> RegionModalStats {
        let n: usize = self.buckets.iter().sum();
        if n == 0 {
            return RegionModalStats::default();
        }
        let pct = |c: usize| 100.0 * c as f64 / n as f64;
        RegionModalStats {
            modal_fractions: self.buckets.map(pct),
            outlier_rate: pct(self.outliers),
            count: n,
        }
    }
}

/// Counts modals with peak at least `peak_threshold` at every pixel that has both
/// a label and a non-skipped distribution. A pixel where no modal clears the
/// threshold is counted as one-modal.
pub fn modal_statistics(
    volume: &DistributionVolume,
    gt: &DisparityMap,
    edge_mask: &[bool],
    peak_threshold: f64,
) -> Result<ModalStats> {
    if (volume.width(), volume.height()) != (gt.width(), gt.height()) {
        return Err(Error::DimensionMismatch(format!(
            "volume is {}x{}, ground truth is {}x{}",
            volume.width(),
            volume.height(),
            gt.width(),
            gt.height()
        )));
    }
    if edge_mask.len() != gt.len() {
        return Err(Error::DimensionMismatch(format!(
            "edge mask has {} entries for {} pixels",
            edge_mask.len(),
            gt.len()
        )));
    }
    let per_pixel: Vec<Option<(usize, bool)>> = (0..gt.len())
        .into_par_iter()
        .map_init(Vec::new, |col, i| {
            if !gt.mask()[i] {
                return None;
            }
            volume.column_into(i, col);
            if col.iter().all(|&v| v == 0.0) {
                return None;
            }
            let modals = segment_modals(col, peak_threshold).len();
            let outlier = (dme_estimate(col) - f64::from(gt.values()[i])).abs() > 3.0;
            Some((modals, outlier))
        })
        .collect();

    let (mut all, mut edge, mut nonedge) = (Tally::default(), Tally::default(), Tally::default());
    for (i, px) in per_pixel.iter().enumerate() {
        if let Some((modals, outlier)) = *px {
            all.add(modals, outlier);
            if edge_mask[i] {
                edge.add(modals, outlier);
            } else {
                nonedge.add(modals, outlier);
            }
        }
    }
    Ok(ModalStats {
        all: all.finish(),
        edge: edge.finish(),
        nonedge: nonedge.finish(),
        peak_threshold,
    })
}

impl ModalStats {
    fn regions(&self) -> [(&'static str, &RegionModalStats); 3] {
        [("all", &self.all), ("edge", &self.edge), ("nonedge", &self.nonedge)]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("region,count,modal1,modal2,modal3plus,outliers_gt3px\n");
        for (name, r) in self.regions() {
            out.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                r.count, r.modal_fractions[0], r.modal_fractions[1], r.modal_fractions[2], r.outlier_rate
            ));
        }
        out
    }
}

impl fmt::Display for ModalStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stats.peak_threshold={}", self.peak_threshold)?;
        for (name, r) in self.regions() {
            writeln!(f, "{name}.count={}", r.count)?;
            writeln!(f, "{name}.modal1={}", r.modal_fractions[0])?;
            writeln!(f, "{name}.modal2={}", r.modal_fractions[1])?;
            writeln!(f, "{name}.modal3plus={}", r.modal_fractions[2])?;
            writeln!(f, "{name}.outliers_gt3px={}", r.outlier_rate)?;
        }
        Ok(())
    }
}
