use std::path::Path;

use anyhow::{bail, ensure};
use rayon::prelude::*;
use tempweak_core::io::{read_mask, write_change};
use tempweak_core::manifest::{manifest_dir, resolve};
use tempweak_core::sampling::{parse_plan_text, ManifestMasks};
use tempweak_core::{parse_manifest, synthesize_targets, ChangeMethod, DatasetManifest, SIoUParams};

use super::{change_path, class_set, read_text};
use crate::args::{ChangemapArgs, Mode};

pub fn run(a: &ChangemapArgs) -> anyhow::Result<()> {
    let manifest = parse_manifest(&a.manifest)?;
    let dir = manifest_dir(&a.manifest);
    let params = SIoUParams::new(a.tau, class_set(&a.classes)).with_connectivity(a.connectivity.into());
    match &a.plan {
        Some(plan) => plan_targets(a, &manifest, dir, plan, &params),
        None => record_maps(a, &manifest, dir, &params),
    }
}

fn record_maps(a: &ChangemapArgs, manifest: &DatasetManifest, dir: &Path, params: &SIoUParams) -> anyhow::Result<()> {
    let method = ChangeMethod::from(a.mode);
    if let Some(r) = manifest.records.iter().find(|r| r.mask_t2.is_none()) {
        bail!("record `{}` has no mask_t2; pass --plan to build weak targets from date-t masks only", r.id);
    }
    manifest.records.par_iter().try_for_each(|r| -> anyhow::Result<()> {
        let mask_t2 = r.mask_t2.as_deref().expect("checked above");
        let s1 = read_mask(&resolve(dir, &r.mask_t), a.table.num_classes, a.table.background, Some(r.resolution))?;
        let s2 = read_mask(&resolve(dir, mask_t2), a.table.num_classes, a.table.background, Some(r.resolution))?;
        let change = method.compute(&s1, &s2, params)?;
        write_change(&change_path(&a.out, &r.id), &change)?;
        Ok(())
    })?;
    log::info!("wrote {} change maps to {}", manifest.len(), a.out.display());
    Ok(())
}

fn plan_targets(
    a: &ChangemapArgs,
    manifest: &DatasetManifest,
    dir: &Path,
    plan: &Path,
    params: &SIoUParams,
) -> anyhow::Result<()> {
    ensure!(matches!(a.mode, Mode::Siou), "--plan builds sIoU targets; --mode must be siou");
    let slots = parse_plan_text(&read_text(plan)?)?;
    let masks = ManifestMasks::new(manifest, dir, a.table.num_classes, a.table.background);
    slots.par_iter().try_for_each(|s| -> anyhow::Result<()> {
        let targets = synthesize_targets(&s.slot, &masks, params)?;
        let name = format!("b{:05}_s{:04}", s.batch_index, s.slot_index);
        write_change(&change_path(&a.out, &name), &targets.change)?;
        Ok(())
    })?;
    log::info!("wrote {} weak change targets to {}", slots.len(), a.out.display());
    Ok(())
}
