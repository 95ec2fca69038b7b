use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::WindowConfig;
use crate::error::{Error, Result};
use crate::estimator::{Method, STATS_PEAK_THRESHOLD};
use crate::gt_model::ModelParams;

/// Maps with at least this label coverage are treated as dense.
pub const DENSE_COVERAGE: f64 = 0.5;

/// `rows x cols`, written `MxN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSize {
    pub rows: usize,
    pub cols: usize,
}

impl FromStr for WindowSize {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (r, c) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("window `{s}` is not of the form MxN"))?;
        let rows = r.trim().parse().map_err(|_| format!("bad window rows `{r}`"))?;
        let cols = c.trim().parse().map_err(|_| format!("bad window cols `{c}`"))?;
        Ok(WindowSize { rows, cols })
    }
}

impl fmt::Display for WindowSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl Serialize for WindowSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WindowSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GtMode {
    /// Choose from label coverage.
    Auto,
    Dense,
    Sparse,
}

impl fmt::Display for GtMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GtMode::Auto => "auto",
            GtMode::Dense => "dense",
            GtMode::Sparse => "sparse",
        })
    }
}

/// Tunables as they may appear on the command line or in a TOML config file.
/// Unset fields fall through to the next source.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Tunables {
    /// Clustering window as MxN (rows x cols); both odd.
    #[arg(long, global = true, value_name = "MxN")]
    pub window: Option<WindowSize>,
    /// DBSCAN distance threshold in disparity pixels.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// DBSCAN density threshold.
    #[arg(long = "min-pts", global = true)]
    #[serde(rename = "min-pts", alias = "min_pts")]
    pub min_pts: Option<usize>,
    /// Centre-cluster weight fraction.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Laplacian scale.
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Number of disparity candidates.
    #[arg(long, global = true)]
    pub dmax: Option<usize>,
    /// Disparity estimator: softargmax, sme or dme.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Minimum modal peak counted by `stats`.
    #[arg(long = "peak-threshold", global = true)]
    #[serde(rename = "peak-threshold", alias = "peak_threshold")]
    pub peak_threshold: Option<f64>,
    /// Fraction of labels kept by `sparsify`.
    #[arg(long, global = true)]
    pub keep: Option<f64>,
    /// Seed for `sparsify`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Dense/sparse ground-truth handling; decides the default window.
    #[arg(long = "gt-mode", global = true)]
    #[serde(rename = "gt-mode", alias = "gt_mode")]
    pub gt_mode: Option<GtMode>,
}

impl Tunables {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Fields set in `self` win over `fallback`.
    pub fn or(self, fallback: Tunables) -> Tunables {
        Tunables {
            window: self.window.or(fallback.window),
            eps: self.eps.or(fallback.eps),
            min_pts: self.min_pts.or(fallback.min_pts),
            alpha: self.alpha.or(fallback.alpha),
            b: self.b.or(fallback.b),
            dmax: self.dmax.or(fallback.dmax),
            method: self.method.or(fallback.method),
            peak_threshold: self.peak_threshold.or(fallback.peak_threshold),
            keep: self.keep.or(fallback.keep),
            seed: self.seed.or(fallback.seed),
            threads: self.threads.or(fallback.threads),
            gt_mode: self.gt_mode.or(fallback.gt_mode),
        }
    }

    /// Fills every unset field with its default. The window depends on whether
    /// the ground truth is dense, which only the caller knows.
    pub fn resolve(&self, dense: bool) -> Result<RunConfig> {
        let default_window = if dense { WindowConfig::DENSE } else { WindowConfig::SPARSE };
        let window = self.window.unwrap_or(WindowSize {
            rows: default_window.rows(),
            cols: default_window.cols(),
        });
        let defaults = ModelParams::default();
        let method: Method = self.method.as_deref().unwrap_or("dme").parse()?;
        let peak_threshold = self.peak_threshold.unwrap_or(STATS_PEAK_THRESHOLD);
        if !(0.0..=1.0).contains(&peak_threshold) {
            return Err(Error::InvalidConfig(format!(
                "peak threshold must lie in [0, 1], got {peak_threshold}"
            )));
        }
        let threads = self.threads.unwrap_or(8);
        if threads == 0 {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        Ok(RunConfig {
            window: WindowConfig::new(
                window.rows,
                window.cols,
                self.eps.unwrap_or(default_window.eps()),
                self.min_pts.unwrap_or(default_window.min_pts()),
            )?,
            model: ModelParams::new(
                self.alpha.unwrap_or(defaults.alpha()),
                self.b.unwrap_or(defaults.b()),
                self.dmax.unwrap_or(defaults.d_max()),
            )?,
            method,
            peak_threshold,
            keep: self.keep.unwrap_or(1.0),
            seed: self.seed.unwrap_or(0),
            threads,
            dense,
        })
    }
}

/// The fully resolved configuration a command runs with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub window: WindowConfig,
    pub model: ModelParams,
    pub method: Method,
    pub peak_threshold: f64,
    pub keep: f64,
    pub seed: u64,
    pub threads: usize,
    pub dense: bool,
}

impl RunConfig {
    /// `key=value` lines, prefixed with `prefix`, describing every effective setting.
    pub fn header(&self, prefix: &str) -> String {
        let w = &self.window;
        let m = &self.model;
        let pairs: [(&str, String); 12] = [
            ("gt-mode", if self.dense { "dense" } else { "sparse" }.to_string()),
            ("window", format!("{}x{}", w.rows(), w.cols())),
            ("eps", w.eps().to_string()),
            ("min-pts", w.min_pts().to_string()),
            ("alpha", m.alpha().to_string()),
            ("b", m.b().to_string()),
            ("dmax", m.d_max().to_string()),
            ("method", self.method.to_string()),
            ("peak-threshold", self.peak_threshold.to_string()),
            ("keep", self.keep.to_string()),
            ("seed", self.seed.to_string()),
            ("threads", self.threads.to_string()),
        ];
        pairs
            .iter()
            .map(|(k, v)| format!("{prefix}config.{k}={v}\n"))
            .collect()
    }
}
