use std::path::{Path, PathBuf};

use anyhow::bail;
use rayon::prelude::*;
use serde::Serialize;
use tempweak_core::io::{read_gray, read_mask, write_mask};
use tempweak_core::manifest::{manifest_dir, resolve};
use tempweak_core::raster::Finding;
use tempweak_core::{merge_classes, nn_resample, parse_manifest, validate as validate_mask, SemanticMask};

use super::{class_set, emit, json_line};
use crate::args::{ClassTable, MergeClassesArgs, ResampleArgs, ValidateArgs};

pub fn merge(a: &MergeClassesArgs) -> anyhow::Result<()> {
    let mask = read_mask(&a.input, a.table.num_classes, a.table.background, None)?;
    write_mask(&a.out, &merge_classes(&mask, &class_set(&a.classes))?)?;
    Ok(())
}

pub fn resample(a: &ResampleArgs) -> anyhow::Result<()> {
    let mask = read_mask(&a.input, a.table.num_classes, a.table.background, None)?;
    write_mask(&a.out, &nn_resample(&mask, a.factor)?)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Invalid {
    path: PathBuf,
    findings: Vec<Finding>,
}

#[derive(Debug, Serialize)]
struct ValidationSummary {
    checked: usize,
    invalid: Vec<Invalid>,
}

/// Reads a PNG without enforcing the class table, then lists every violation.
fn check(path: &Path, shown: &Path, table: &ClassTable, resolution: Option<f64>) -> anyhow::Result<Option<Invalid>> {
    let (w, h, data) = read_gray(path)?;
    let mask = SemanticMask::from_raw_parts(w, h, data, table.num_classes, table.background, resolution);
    let report = validate_mask(&mask);
    Ok((!report.is_valid()).then(|| Invalid {
        path: shown.to_path_buf(),
        findings: report.findings,
    }))
}

pub fn validate(a: &ValidateArgs) -> anyhow::Result<()> {
    // (absolute path to read, path shown in the report, resolution)
    let targets: Vec<(PathBuf, PathBuf, Option<f64>)> = match (&a.manifest, &a.mask) {
        (_, Some(mask)) => vec![(mask.clone(), mask.clone(), a.resolution)],
        (Some(m), None) => {
            let manifest = parse_manifest(m)?;
            let dir = manifest_dir(m);
            manifest
                .records
                .iter()
                .flat_map(|r| {
                    std::iter::once(&r.mask_t)
                        .chain(r.mask_t2.as_ref())
                        .map(|p| (resolve(dir, p), p.clone(), Some(r.resolution)))
                })
                .collect()
        }
        (None, None) => bail!("pass --manifest or --mask"),
    };
    let invalid: Vec<Invalid> = targets
        .par_iter()
        .map(|(path, shown, res)| check(path, shown, &a.table, *res))
        .collect::<anyhow::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let n_invalid = invalid.len();
    emit(None, &json_line(&ValidationSummary { checked: targets.len(), invalid }))?;
    if n_invalid > 0 {
        bail!("{n_invalid} of {} masks violate the class table", targets.len());
    }
    Ok(())
}
