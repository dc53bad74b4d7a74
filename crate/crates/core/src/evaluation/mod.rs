//! Reconstruction metrics, Hausdorff distances and voxel surface export.

pub mod metrics;
pub mod report;
pub mod surface;

pub use metrics::{ce_metric, ce_values, hausdorff, iou, iou_values, nearest_distances, per_point_distance_field, DEFAULT_THRESHOLD};
pub use report::{MetricReport, SampleMetrics};
pub use surface::{extract_surface, extract_surface_indexed};
