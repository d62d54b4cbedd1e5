use std::fmt::Write as _;
use std::fs;

use anyhow::{ensure, Context};
use rayon::prelude::*;
use serde::Serialize;
use tempweak_core::io::read_change;
use tempweak_core::metrics::{median_filter, Scores};
use tempweak_core::{object_report, ChangeMask, ConfusionCounts};

use super::{change_path, emit, json_line};
use crate::args::EvaluateArgs;

const SUFFIX: &str = "_change.png";

#[derive(Debug, Serialize)]
struct Objects {
    count: usize,
    mean_area_px: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_area_m2: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PairReport {
    id: String,
    #[serde(flatten)]
    scores: Scores,
    counts: ConfusionCounts,
    objects: Objects,
    #[serde(skip_serializing_if = "Option::is_none")]
    objects_filtered: Option<Objects>,
}

#[derive(Debug, Serialize)]
struct GlobalObjects {
    objects_per_pair: f64,
    mean_area_px: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_area_m2: Option<f64>,
}

#[derive(Debug, Serialize)]
struct GlobalReport {
    pairs: usize,
    #[serde(flatten)]
    scores: Scores,
    counts: ConfusionCounts,
    objects: GlobalObjects,
    #[serde(skip_serializing_if = "Option::is_none")]
    objects_filtered: Option<GlobalObjects>,
}

#[derive(Debug, Serialize)]
struct Report {
    median_filter: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<usize>,
    global: GlobalReport,
    pairs: Vec<PairReport>,
}

/// Per-pair intermediate kept for the global aggregation.
struct Scored {
    report: PairReport,
    changed: usize,
    changed_filtered: Option<usize>,
}

pub fn run(a: &EvaluateArgs) -> anyhow::Result<()> {
    if let Some(r) = a.resolution {
        ensure!(r.is_finite() && r > 0.0, "resolution must be positive, got {r}");
    }
    let ids = list_ids(a)?;
    ensure!(!ids.is_empty(), "no *{SUFFIX} maps in {}", a.reference.display());

    let scored = ids.par_iter().map(|id| score_pair(a, id)).collect::<anyhow::Result<Vec<_>>>()?;
    let report = Report {
        median_filter: a.median_filter,
        window: a.median_filter.then_some(a.window),
        global: aggregate(a, &scored),
        pairs: scored.into_iter().map(|s| s.report).collect(),
    };
    let text = if a.pretty { pretty(&report) } else { json_line(&report) };
    emit(a.out.as_deref(), &text)
}

fn list_ids(a: &EvaluateArgs) -> anyhow::Result<Vec<String>> {
    let entries = fs::read_dir(&a.reference).with_context(|| format!("listing {}", a.reference.display()))?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.with_context(|| format!("listing {}", a.reference.display()))?;
        let name = entry.file_name();
        if let Some(id) = name.to_str().and_then(|n| n.strip_suffix(SUFFIX)) {
            if entry.path().is_file() {
                ids.push(id.to_owned());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

fn objects(pred: &ChangeMask, resolution: Option<f64>) -> anyhow::Result<Objects> {
    let stats = object_report(pred, resolution.unwrap_or(1.0))?;
    Ok(Objects {
        count: stats.count,
        mean_area_px: stats.mean_area_px,
        mean_area_m2: resolution.map(|_| stats.mean_area_m2),
    })
}

fn score_pair(a: &EvaluateArgs, id: &str) -> anyhow::Result<Scored> {
    let reference = read_change(&change_path(&a.reference, id))?;
    let raw = read_change(&change_path(&a.pred, id))?;
    let filtered = if a.median_filter { Some(median_filter(&raw, a.window)?) } else { None };
    let scored = filtered.as_ref().unwrap_or(&raw);
    let counts = ConfusionCounts::from_pair(scored, &reference).with_context(|| format!("pair `{id}`"))?;
    Ok(Scored {
        report: PairReport {
            id: id.to_owned(),
            scores: counts.scores().percent(),
            counts,
            objects: objects(&raw, a.resolution)?,
            objects_filtered: filtered.as_ref().map(|f| objects(f, a.resolution)).transpose()?,
        },
        changed: raw.count_changed(),
        changed_filtered: filtered.as_ref().map(ChangeMask::count_changed),
    })
}

/// Objects per pair and mean object area over the whole set.
fn global_objects(pairs: usize, count: usize, area: usize, resolution: Option<f64>) -> GlobalObjects {
    let mean_area_px = if count == 0 { 0.0 } else { area as f64 / count as f64 };
    GlobalObjects {
        objects_per_pair: count as f64 / pairs as f64,
        mean_area_px,
        mean_area_m2: resolution.map(|r| mean_area_px * r * r),
    }
}

fn aggregate(a: &EvaluateArgs, scored: &[Scored]) -> GlobalReport {
    let counts: ConfusionCounts = scored.iter().map(|s| s.report.counts).sum();
    let n = scored.len();
    let raw_count = scored.iter().map(|s| s.report.objects.count).sum();
    let raw_area = scored.iter().map(|s| s.changed).sum();
    let objects_filtered = a.median_filter.then(|| {
        let count = scored.iter().filter_map(|s| s.report.objects_filtered.as_ref()).map(|o| o.count).sum();
        let area = scored.iter().filter_map(|s| s.changed_filtered).sum();
        global_objects(n, count, area, a.resolution)
    });
    GlobalReport {
        pairs: n,
        scores: counts.scores().percent(),
        counts,
        objects: global_objects(n, raw_count, raw_area, a.resolution),
        objects_filtered,
    }
}

fn pretty(report: &Report) -> String {
    let mut s = String::new();
    writeln!(s, "{:<24} {:>6} {:>6} {:>6} {:>8}", "pair", "F1", "IoU", "FPR", "objects").unwrap();
    for p in &report.pairs {
        writeln!(
            s,
            "{:<24} {:>6.1} {:>6.1} {:>6.1} {:>8}",
            p.id, p.scores.f1, p.scores.iou, p.scores.fpr, p.objects.count
        )
        .unwrap();
    }
    let g = &report.global;
    writeln!(
        s,
        "{:<24} {:>6.1} {:>6.1} {:>6.1} {:>8.2}",
        format!("all ({} pairs)", g.pairs),
        g.scores.f1,
        g.scores.iou,
        g.scores.fpr,
        g.objects.objects_per_pair
    )
    .unwrap();
    let line = |label: &str, o: &GlobalObjects| {
        let m2 = o.mean_area_m2.map(|v| format!(", {v:.1} m2")).unwrap_or_default();
        format!("{label}: {:.2} objects/pair, mean {:.1} px{m2}\n", o.objects_per_pair, o.mean_area_px)
    };
    s.push_str(&line("objects", &g.objects));
    if let Some(f) = &g.objects_filtered {
        s.push_str(&line(&format!("objects after {0}x{0} median", report.window.unwrap_or_default()), f));
    }
    s
}
