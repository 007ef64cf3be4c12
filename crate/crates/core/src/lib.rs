//! Receptive-field label assignment for tiny-object detection.
//!
//! Boxes and feature-point receptive fields are modeled as 2-D Gaussians
//! ([`geometry`]), compared with a Gaussian distance ([`distance`]) and fed
//! to a point-prior-plus-supplement assigner ([`assigner`]). [`loss`] turns
//! an assignment into a detection loss, [`ingest`] reads COCO annotations and
//! reports per-scale statistics, and [`pipeline`] runs assigners over whole
//! datasets in parallel.
//!
//! ```
//! use rfassign::{assign, AssignerConfig, BBox, FpnLevelSpec, LocationGrid};
//!
//! let fpn = vec![FpnLevelSpec::new("P3", 8, 35.0).unwrap()];
//! let grid = LocationGrid::new(64, 64, &fpn).unwrap();
//! let gts = [BBox::new(10.0, 10.0, 13.0, 13.0).unwrap()];
//! let m = assign(&grid, &gts, &AssignerConfig::default()).unwrap();
//! assert_eq!(m.n_gts(), 1);
//! ```
//!
//! The `examples/` directory has one runnable program per capability.

pub mod assigner;
pub mod cli;
pub mod distance;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod loss;
pub mod pipeline;
pub mod synthetic;

pub use assigner::{
    assign, assign_fcos_baseline, assign_rfla_baseline, combine_masks, point_prior_mask, rfd_matrix,
    supplement_mask, AssignerConfig, AssignerKind, AssignmentMatrix, Location, LocationGrid, Mask,
};
pub use cli::EngineConfig;
pub use distance::{distance, kld, nwd, rfd, similarity, wd_squared, MetricKind, RfdScore};
pub use error::{Error, Result};
pub use geometry::{
    compute_trf, default_fpn_levels, gt_to_gaussian, rf_to_gaussian, BBox, ConvLayerSpec, FpnLevelSpec,
    Gaussian2D,
};
pub use ingest::{load_coco, report, AssignReport, DatasetSlice, GTObject, ScaleBucket};
pub use loss::{detection_loss, FocalParams, LossBreakdown, Prediction, SampleWeights};
