//! Adaptive multi-modal ground-truth modeling for cross-entropy stereo training,
//! dominant-modal disparity estimation, and the evaluation tooling around them.
//!
//! The pipeline, bottom-up:
//!
//! 1. [`raster_io`] reads ground truth (PFM or KITTI PNG) and reads/writes `ADLV` volumes.
//! 2. [`clustering`] partitions each pixel's window disparities with 1D DBSCAN.
//! 3. [`gt_model`] turns the clusters into a mixture of discretized Laplacians.
//! 4. [`loss`] scores predicted volumes against those targets.
//! 5. [`estimator`] reduces distributions to disparities (soft-argmax, SME, DME).
//! 6. [`analysis`] computes metrics, modal statistics, sparsified labels and point clouds.

pub mod analysis;
pub mod cli;
pub mod clustering;
pub mod error;
pub mod estimator;
pub mod gt_model;
pub mod loss;
pub mod raster_io;

pub use clustering::{cluster_disparities, extract_window, ClusterSet, WindowConfig};
pub use error::{Error, Result};
pub use estimator::{dme_estimate, estimate_volume, sme_estimate, soft_argmax, Method};
pub use gt_model::{build_gt_distribution, build_gt_volume, compute_weights, DiscreteDistribution, ModelParams};
pub use raster_io::{DisparityMap, DistributionVolume};
