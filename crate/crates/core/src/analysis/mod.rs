//! Evaluation metrics, modal statistics, ground-truth sparsification and point clouds.

mod cloud;
mod metrics;
mod sparsify;
mod stats;

pub use cloud::{disparity_to_pointcloud, write_ply, write_ply_to, Intrinsics, Point3};
pub use metrics::{compute_metrics, MetricsReport, RegionMetrics, KPX_THRESHOLDS};
pub use sparsify::downsample_gt;
pub use stats::{classify_edges, modal_statistics, ModalStats, RegionModalStats};
