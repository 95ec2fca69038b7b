use std::fmt;

use crate::error::{Error, Result};
use crate::loss::pairwise_sum;
use crate::raster_io::DisparityMap;

/// Outlier thresholds (pixels) reported as `>kpx`.
pub const KPX_THRESHOLDS: [f64; 3] = [1.0, 2.0, 3.0];

/// Error statistics for one region. Rates are percentages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMetrics {
    pub epe: f64,
    /// Percentage of pixels with `|Δ| > k` for `k` in [`KPX_THRESHOLDS`].
    pub rate_gt_kpx: [f64; 3],
    /// KITTI D1: `|Δ| > 3` and `|Δ| > 0.05 · d_gt`.
    pub d1: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub all: RegionMetrics,
    pub edge: Option<RegionMetrics>,
    pub nonedge: Option<RegionMetrics>,
}

#[derive(Default)]
struct Accum {
    abs_err: Vec<f64>,
    over_k: [usize; 3],
    d1: usize,
}

impl Accum {
    fn push(&mut self, pred: f64, gt: f64) {
        let err = (pred - gt).abs();
        self.abs_err.push(err);
        for (c, k) in self.over_k.iter_mut().zip(KPX_THRESHOLDS) {
            if err > k {
                *c += 1;
            }
        }
        if err > 3.0 && err > 0.05 * gt {
            self.d1 += 1;
        }
    }

    fn finish(&self) -> Option<RegionMetrics> {
        let n = self.abs_err.len();
        if n == 0 {
            return None;
        }
        let pct = |c: usize| 100.0 * c as f64 / n as f64;
        Some(RegionMetrics {
            epe: pairwise_sum(&self.abs_err) / n as f64,
            rate_gt_kpx: self.over_k.map(pct),
            d1: pct(self.d1),
            count: n,
        })
    }
}

/// EPE, `>kpx` and D1 over pixels valid in both maps, optionally split by an edge mask.
pub fn compute_metrics(pred: &DisparityMap, gt: &DisparityMap, edge_mask: Option<&[bool]>) -> Result<MetricsReport> {
    if !pred.same_shape(gt) {
        return Err(Error::DimensionMismatch(format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    if let Some(m) = edge_mask {
        if m.len() != gt.len() {
            return Err(Error::DimensionMismatch(format!(
                "edge mask has {} entries for {} pixels",
                m.len(),
                gt.len()
            )));
        }
    }
    let (mut all, mut edge, mut nonedge) = (Accum::default(), Accum::default(), Accum::default());
    for i in 0..gt.len() {
        if !(pred.mask()[i] && gt.mask()[i]) {
            continue;
        }
        let (p, g) = (f64::from(pred.values()[i]), f64::from(gt.values()[i]));
        all.push(p, g);
        if let Some(m) = edge_mask {
            if m[i] {
                edge.push(p, g);
            } else {
                nonedge.push(p, g);
            }
        }
    }
    Ok(MetricsReport {
        all: all.finish().ok_or(Error::NoValidOverlap)?,
        edge: edge.finish(),
        nonedge: nonedge.finish(),
    })
}

impl MetricsReport {
    fn regions(&self) -> impl Iterator<Item = (&'static str, Option<&RegionMetrics>)> {
        [
            ("all", Some(&self.all)),
            ("edge", self.edge.as_ref()),
            ("nonedge", self.nonedge.as_ref()),
        ]
        .into_iter()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("region,count,epe,gt1px,gt2px,gt3px,d1\n");
        for (name, r) in self.regions() {
            if let Some(r) = r {
                out.push_str(&format!(
                    "{name},{},{},{},{},{},{}\n",
                    r.count, r.epe, r.rate_gt_kpx[0], r.rate_gt_kpx[1], r.rate_gt_kpx[2], r.d1
                ));
            }
        }
        out
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, r) in self.regions() {
            let Some(r) = r else { continue };
            writeln!(f, "{name}.count={}", r.count)?;
            writeln!(f, "{name}.epe={}", r.epe)?;
            for (k, rate) in KPX_THRESHOLDS.iter().zip(r.rate_gt_kpx) {
                writeln!(f, "{name}.gt{k}px={rate}")?;
            }
            writeln!(f, "{name}.d1={}", r.d1)?;
        }
        Ok(())
    }
}
