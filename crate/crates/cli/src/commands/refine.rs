use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use tempweak_core::io::read_change;
use tempweak_core::manifest::manifest_dir;
use tempweak_core::refinement::filter_by_fractions;
use tempweak_core::{changed_fraction, parse_manifest, write_manifest, RefinementReport, Split};

use super::{change_path, emit, json_line};
use crate::args::RefineArgs;

pub fn run(a: &RefineArgs) -> anyhow::Result<()> {
    let manifest = parse_manifest(&a.manifest)?;
    let fractions = manifest
        .records
        .par_iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| -> anyhow::Result<(String, f64)> {
            let pred = read_change(&change_path(&a.pred_dir, &r.id))?;
            Ok((r.id.clone(), changed_fraction(&pred)))
        })
        .collect::<anyhow::Result<HashMap<_, _>>>()?;

    let in_dir = manifest_dir(&a.manifest);
    let out_dir = manifest_dir(&a.out);
    if !out_dir.as_os_str().is_empty() {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    }
    let parent = relative_to(&a.manifest, out_dir)?;
    let (mut next, report) = filter_by_fractions(&manifest, &fractions, a.threshold, Some(parent))?;
    next.rebase(in_dir, out_dir)?;
    write_manifest(&next, &a.out)?;
    log::info!("kept {}, filtered {}", report.kept.len(), report.filtered.len());

    let text = if a.pretty { pretty(&report) } else { json_line(&report) };
    emit(a.report.as_deref(), &text)
}

/// `path` expressed relative to directory `dir`.
fn relative_to(path: &Path, dir: &Path) -> anyhow::Result<PathBuf> {
    let abs = |p: &Path| {
        let p = if p.as_os_str().is_empty() { Path::new(".") } else { p };
        p.canonicalize().with_context(|| format!("resolving {}", p.display()))
    };
    let (path, dir) = (abs(path)?, abs(dir)?);
    Ok(pathdiff::diff_paths(&path, &dir).unwrap_or(path))
}

fn pretty(report: &RefinementReport) -> String {
    let mut s = format!(
        "iteration {}  threshold {:.2}%  kept {}  filtered {}\n",
        report.iteration,
        report.threshold * 100.0,
        report.kept.len(),
        report.filtered.len()
    );
    for f in &report.filtered {
        writeln!(s, "  filtered {:<24} {:>7.3}%", f.id, f.fraction * 100.0).unwrap();
    }
    s
}
