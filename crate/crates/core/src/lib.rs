//! Weak change-detection supervision from single-date semantic masks.
//!
//! The crate turns single-date semantic masks plus bi-temporal image
//! manifests into change-detection training signal, and evaluates change
//! predictions:
//!
//! - [`raster`]: mask types, class merging, nearest-neighbour resampling, validation.
//! - [`manifest`]: line-delimited dataset manifests.
//! - [`components`]: connected-component labeling and object statistics.
//! - [`changemap`]: object-level (sIoU) change maps and XOR / OR / post-classification baselines.
//! - [`sampling`]: balanced real/fake batch plans and their weak targets.
//! - [`refinement`]: changed-fraction filtering between training rounds.
//! - [`metrics`]: F1 / IoU / FPR, binary median filtering, object reports.
//! - [`tiling`]: overlapping tile grids and mosaic stitching.
//! - [`synthgen`]: deterministic synthetic fixtures.

pub mod changemap;
pub mod components;
pub mod error;
pub mod io;
pub mod manifest;
pub mod metrics;
pub mod raster;
pub mod refinement;
pub mod sampling;
pub mod synthgen;
pub mod tiling;

pub use changemap::{
    or_changemap, postclass_changemap, siou_changemap, siou_of_component, xor_changemap, ChangeMethod, SIoUParams,
};
pub use components::{component_stats, label_components, Component, ComponentSet, ComponentStats, Connectivity};
pub use error::{Error, Result};
pub use manifest::{parse_manifest, write_manifest, DatasetManifest, PairRecord, Split};
pub use metrics::{median_filter_5x5, object_report, ConfusionCounts};
pub use raster::{merge_classes, nn_resample, validate, ChangeMask, ClassSet, SemanticMask};
pub use refinement::{changed_fraction, filter_manifest, RefinementReport};
pub use sampling::{plan_batch, synthesize_targets, BatchPlan, Slot};
pub use tiling::{extract_tiles, plan_grid, stitch, TileGrid};
