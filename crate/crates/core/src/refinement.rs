//! Dataset cleaning between training rounds.
//!
//! After a round, the trained model's change predictions on the training
//! pairs are scored by their changed-pixel fraction; pairs above the threshold
//! are presumed to contain real change and dropped from the next round.

use std::collections::HashMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifest::{DatasetManifest, Split};
use crate::raster::ChangeMask;

pub const DEFAULT_THRESHOLD: f64 = 0.02;

/// Share of changed pixels; 0 for an empty raster.
pub fn changed_fraction(mask: &ChangeMask) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    mask.count_changed() as f64 / mask.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilteredRecord {
    pub id: String,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementReport {
    /// Ids surviving the filter, in manifest order. Includes untouched val/test records.
    pub kept: Vec<String>,
    pub filtered: Vec<FilteredRecord>,
    pub threshold: f64,
    /// Iteration of the output manifest.
    pub iteration: u32,
}

/// Drops training records whose predicted changed fraction is strictly above `threshold`.
///
/// Val and test records pass through. The output manifest's iteration is one
/// more than the input's and its parent is `parent`.
pub fn filter_manifest(
    manifest: &DatasetManifest,
    predictions: &HashMap<String, ChangeMask>,
    threshold: f64,
    parent: Option<PathBuf>,
) -> Result<(DatasetManifest, RefinementReport)> {
    let fractions = manifest
        .records
        .iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| {
            predictions
                .get(&r.id)
                .map(|m| (r.id.clone(), changed_fraction(m)))
                .ok_or_else(|| Error::MissingPrediction(r.id.clone()))
        })
        .collect::<Result<HashMap<_, _>>>()?;
    filter_by_fractions(manifest, &fractions, threshold, parent)
}

/// As [`filter_manifest`], with the changed fractions already computed.
pub fn filter_by_fractions(
    manifest: &DatasetManifest,
    fractions: &HashMap<String, f64>,
    threshold: f64,
    parent: Option<PathBuf>,
) -> Result<(DatasetManifest, RefinementReport)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::arg(format!("threshold must lie in [0, 1], got {threshold}")));
    }
    let mut records = Vec::with_capacity(manifest.len());
    let mut kept = Vec::with_capacity(manifest.len());
    let mut filtered = Vec::new();
    for record in &manifest.records {
        if record.split == Split::Train {
            let fraction = *fractions
                .get(&record.id)
                .ok_or_else(|| Error::MissingPrediction(record.id.clone()))?;
            if fraction > threshold {
                filtered.push(FilteredRecord {
                    id: record.id.clone(),
                    fraction,
                });
                continue;
            }
        }
        kept.push(record.id.clone());
        records.push(record.clone());
    }
    let iteration = manifest.iteration + 1;
    let out = DatasetManifest {
        records,
        iteration,
        parent,
    };
    let report = RefinementReport {
        kept,
        filtered,
        threshold,
        iteration,
    };
    Ok((out, report))
}
