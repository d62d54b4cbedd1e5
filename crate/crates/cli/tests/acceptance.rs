//! Acceptance suite: one PASS/FAIL line per criterion on stdout.
//!
//! Runs without the libtest harness so the lines are never captured.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tempweak_core::components::component_stats;
use tempweak_core::metrics::median_filter;
use tempweak_core::refinement::filter_by_fractions;
use tempweak_core::sampling::plans_to_text;
use tempweak_core::synthgen::{generate_pair, manifests, SynthSpec};
use tempweak_core::{
    changed_fraction, extract_tiles, filter_manifest, label_components, median_filter_5x5, object_report, or_changemap,
    plan_batch, plan_grid, siou_changemap, siou_of_component, stitch, xor_changemap, BatchPlan, ChangeMask, ClassSet,
    ConfusionCounts, Connectivity, DatasetManifest, Error, PairRecord, SIoUParams, SemanticMask, Slot,
};

const CORPUS_PAIRS: usize = 1000;
const CORPUS_SIZE: usize = 32;
const CORPUS_MAX_COMPONENTS: usize = 6;
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(10);
const TAU_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const TRANSLATION_TAU: f64 = 0.25;
const BATCH_RANGE: std::ops::RangeInclusive<usize> = 2..=512;
/// p_real values as exact fractions (numerator, denominator).
const P_REAL_GRID: [(usize, usize); 6] = [(0, 1), (1, 10), (1, 4), (7, 20), (1, 2), (1, 1)];
const REFINE_THRESHOLD: f64 = 0.02;
const IDENTITY_TOL: f64 = 1e-12;
const IDENTITY_SAMPLES: usize = 100_000;
const MEDIAN_MAPS: usize = 200;
const TILING_BOUND: usize = 64;
const STITCH_RASTERS: usize = 100;
const OBJECT_MAPS: usize = 500;
const E2E_TIME_LIMIT: Duration = Duration::from_secs(60);

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn siou_params(tau: f64) -> SIoUParams {
    SIoUParams::new(tau, ClassSet::single(1))
}

fn fg() -> ClassSet {
    ClassSet::single(1)
}

fn corpus() -> Vec<(SemanticMask, SemanticMask)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5109);
    (0..CORPUS_PAIRS)
        .map(|_| {
            let a = common::random_rect_mask(&mut rng, CORPUS_SIZE, CORPUS_MAX_COMPONENTS, 10);
            let b = common::random_rect_mask(&mut rng, CORPUS_SIZE, CORPUS_MAX_COMPONENTS, 10);
            (a, b)
        })
        .collect()
}

fn siou_oracle(corpus: &[(SemanticMask, SemanticMask)]) -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut components = 0;
    for (s1, s2) in corpus {
        let cs1 = label_components(s1, &fg(), Connectivity::Eight).unwrap();
        let cs2 = label_components(s2, &fg(), Connectivity::Eight).unwrap();
        let r1 = common::flood_fill(s1, &fg(), Connectivity::Eight);
        let r2 = common::flood_fill(s2, &fg(), Connectivity::Eight);
        for (same, other, rs, ro) in [(&cs1, &cs2, &r1, &r2), (&cs2, &cs1, &r2, &r1)] {
            for (i, c) in same.components().iter().enumerate() {
                components += 1;
                let got = siou_of_component(c, same, other).unwrap();
                if got != common::naive_siou(i, rs, ro) {
                    mismatches += 1;
                }
            }
        }
        for tau in TAU_GRID {
            let got = siou_changemap(s1, s2, &siou_params(tau)).unwrap();
            if got != common::naive_changemap(s1, s2, tau, &fg(), Connectivity::Eight) {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < ORACLE_TIME_LIMIT,
        format!(
            "{} pairs, {components} component scores and {} maps, {mismatches} mismatches, {:.2} s (limit {} s)",
            corpus.len(),
            corpus.len() * TAU_GRID.len(),
            elapsed.as_secs_f64(),
            ORACLE_TIME_LIMIT.as_secs()
        ),
    )
}

fn threshold_laws(corpus: &[(SemanticMask, SemanticMask)]) -> Outcome {
    let mut violations = 0;
    for (s1, s2) in corpus {
        let or = or_changemap(s1, s2, &fg()).unwrap();
        let maps: Vec<ChangeMask> = TAU_GRID.iter().map(|&t| siou_changemap(s1, s2, &siou_params(t)).unwrap()).collect();
        violations += maps.windows(2).filter(|w| !w[0].is_subset_of(&w[1])).count();
        violations += maps.iter().filter(|m| !m.is_subset_of(&or)).count();
        for s in [s1, s2] {
            violations += TAU_GRID
                .iter()
                .filter(|&&t| !siou_changemap(s, s, &siou_params(t)).unwrap().is_all_zero())
                .count();
        }
        // strip s1's pixels from s2 to get a pair with no cross overlap
        let disjoint = SemanticMask::from_fn(CORPUS_SIZE, CORPUS_SIZE, 2, |r, c| u8::from(s2.get(r, c) == 1 && s1.get(r, c) == 0)).unwrap();
        let at_one = siou_changemap(s1, &disjoint, &siou_params(1.0)).unwrap();
        if at_one != or_changemap(s1, &disjoint, &fg()).unwrap() {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations over {} pairs", corpus.len()))
}

fn translation_contrast() -> Outcome {
    let a = common::rect_mask(32, &[(10, 10, 6, 6)]);
    let b = common::rect_mask(32, &[(10, 11, 6, 6)]);
    let siou = siou_changemap(&a, &b, &siou_params(TRANSLATION_TAU)).unwrap();
    let xor = xor_changemap(&a, &b, &fg()).unwrap();
    outcome(
        siou.is_all_zero() && xor.count_changed() > 0,
        format!("sIoU changed px {}, XOR changed px {}", siou.count_changed(), xor.count_changed()),
    )
}

fn plan_manifest(n: usize) -> DatasetManifest {
    DatasetManifest::new((0..n).map(|i| PairRecord::new(format!("r{i:03}"), "t.png", "t2.png", "m.png", 0.2)).collect())
}

fn fake_pairing_ok(plan: &BatchPlan) -> bool {
    let mut t = Vec::new();
    let mut t2 = Vec::new();
    for s in &plan.slots {
        if let Slot::Fake { id_t, id_t2 } = s {
            if id_t == id_t2 {
                return false;
            }
            t.push(id_t.as_str());
            t2.push(id_t2.as_str());
        }
    }
    t.sort_unstable();
    t2.sort_unstable();
    t == t2
}

fn plans_in_pool(manifest: &DatasetManifest, threads: usize) -> String {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let cases: Vec<(usize, usize, usize)> = BATCH_RANGE
        .flat_map(|b| P_REAL_GRID.iter().map(move |&(n, d)| (b, n, d)))
        .collect();
    let plans: Vec<BatchPlan> = pool.install(|| {
        cases
            .par_iter()
            .enumerate()
            .filter_map(|(k, &(b, n, d))| plan_batch(manifest, b, n as f64 / d as f64, 77, k as u64).ok())
            .collect()
    });
    plans_to_text(&plans).unwrap()
}

fn batch_split() -> Outcome {
    let manifest = plan_manifest(*BATCH_RANGE.end());
    let mut bad_counts = 0;
    let mut bad_pairings = 0;
    let mut infeasible = Vec::new();
    let mut plans = 0;
    for b in BATCH_RANGE {
        for &(num, den) in &P_REAL_GRID {
            let p = num as f64 / den as f64;
            let n_real = b * num / den;
            let n_fake = b - n_real;
            match plan_batch(&manifest, b, p, 1234, b as u64) {
                Ok(plan) => {
                    plans += 1;
                    if plan.real_count() != n_real || plan.fake_count() != n_fake || !plan.slots[..n_real].iter().all(Slot::is_real) {
                        bad_counts += 1;
                    }
                    if !fake_pairing_ok(&plan) {
                        bad_pairings += 1;
                    }
                }
                Err(Error::InfeasibleDerangement { .. }) if n_fake == 1 => infeasible.push(format!("B={b} p={p}")),
                Err(_) => bad_counts += 1,
            }
        }
    }
    let single = plans_in_pool(&manifest, 1);
    let eight = plans_in_pool(&manifest, 8);

    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tempweak_core::write_manifest(&manifest, &d.join("m.jsonl")).unwrap();
    let cli_plan = |threads: &str| {
        run_cli(d, &["--threads", threads, "batch-plan", "--manifest", "m.jsonl", "--batch-size", "64", "--seed", "9", "--batches", "200"]).stdout
    };
    let cli_same = cli_plan("1") == cli_plan("8");

    outcome(
        bad_counts == 0 && bad_pairings == 0 && single == eight && cli_same,
        format!(
            "{plans} plans, {bad_counts} count errors, {bad_pairings} bad pairings, single-fake-slot cases rejected: [{}], 1 vs 8 threads identical: library {}, cli {}",
            infeasible.join(", "),
            single == eight,
            cli_same
        ),
    )
}

fn map_with_changed(width: usize, height: usize, changed: usize) -> ChangeMask {
    let mut k = 0;
    ChangeMask::from_fn(width, height, |_, _| {
        k += 1;
        k <= changed
    })
}

fn refinement_boundary() -> Outcome {
    // 50 of 2500 pixels is exactly 2%
    let manifest = plan_manifest(2);
    let preds: HashMap<String, ChangeMask> = [
        ("r000".to_string(), map_with_changed(50, 50, 50)),
        ("r001".to_string(), map_with_changed(50, 50, 51)),
    ]
    .into_iter()
    .collect();
    let (_, report) = filter_manifest(&manifest, &preds, REFINE_THRESHOLD, None).unwrap();
    let boundary_ok = report.kept == ["r000"] && report.filtered.len() == 1 && report.filtered[0].id == "r001";

    let spec = SynthSpec { seed: 64, pair_count: 64, change_rate: 0.5, ..SynthSpec::default() };
    let (train, _) = manifests(&spec);
    let fractions: HashMap<String, f64> = (0..spec.pair_count)
        .map(|i| {
            let p = generate_pair(&spec, i).unwrap();
            (p.id, changed_fraction(&p.true_change))
        })
        .collect();
    let (once, first) = filter_by_fractions(&train, &fractions, REFINE_THRESHOLD, None).unwrap();
    let (twice, second) = filter_by_fractions(&once, &fractions, REFINE_THRESHOLD, None).unwrap();
    let idempotent = second.filtered.is_empty() && once.records == twice.records;
    let counts: Vec<usize> = (0..=40)
        .map(|k| filter_by_fractions(&train, &fractions, k as f64 * 0.001, None).unwrap().1.filtered.len())
        .collect();
    let monotone = counts.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        boundary_ok && idempotent && monotone && !first.filtered.is_empty(),
        format!(
            "2.000% kept, 2.040% filtered: {boundary_ok}; 64 pairs: {} kept, {} filtered, idempotent {idempotent}, monotone over 41 thresholds {monotone}",
            first.kept.len(),
            first.filtered.len()
        ),
    )
}

fn metric_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..IDENTITY_SAMPLES {
        let c = ConfusionCounts::new(
            rng.random_range(0..1u64 << 32),
            rng.random_range(0..1u64 << 32),
            rng.random_range(0..1u64 << 32),
            rng.random_range(0..1u64 << 32),
        );
        let iou = c.iou();
        worst = worst.max((c.f1() - 2.0 * iou / (1.0 + iou)).abs());
    }
    let rows = |rows: [&str; 4]| ChangeMask::from_fn(4, 4, |r, c| rows[r].as_bytes()[c] == b'1');
    let pred = rows(["1100", "1000", "0000", "0000"]);
    let reference = rows(["1100", "0010", "0000", "0000"]);
    let c = ConfusionCounts::from_pair(&pred, &reference).unwrap();
    let rational = c.f1_fraction() == (4, 6) && c.iou_fraction() == (2, 4) && c.fpr_fraction() == (1, 13);
    let decimals = (c.f1() - 0.667).abs() < 5e-4 && c.iou() == 0.5 && (c.fpr() - 0.0769).abs() < 5e-5;
    outcome(
        worst <= IDENTITY_TOL && rational && decimals,
        format!(
            "max |F1 - 2IoU/(1+IoU)| = {worst:.1e} over {IDENTITY_SAMPLES} draws; 4x4 example F1 {}/{} IoU {}/{} FPR {}/{}",
            c.f1_fraction().0,
            c.f1_fraction().1,
            c.iou_fraction().0,
            c.iou_fraction().1,
            c.fpr_fraction().0,
            c.fpr_fraction().1
        ),
    )
}

fn median() -> Outcome {
    let mut isolated = ChangeMask::zeros(32, 32);
    for (r, c) in [(0, 0), (0, 31), (16, 16), (31, 5)] {
        isolated.set(r, c, true);
    }
    let removes = median_filter_5x5(&isolated).is_all_zero();
    let fixed = [ChangeMask::zeros(32, 32), ChangeMask::ones(32, 32), ChangeMask::ones(7, 3)]
        .iter()
        .all(|m| &median_filter_5x5(m) == m);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mismatches = (0..MEDIAN_MAPS)
        .filter(|_| {
            let p = rng.random_range(0.05..0.95);
            let m = common::random_change(&mut rng, 32, 32, p);
            median_filter(&m, 5).unwrap() != common::sort_median(&m, 5)
        })
        .count();
    outcome(
        removes && fixed && mismatches == 0,
        format!("isolated removed {removes}, constants fixed {fixed}, {mismatches}/{MEDIAN_MAPS} oracle mismatches"),
    )
}

fn tiling() -> Outcome {
    let big = plan_grid(2500, 2500, 256, 6).unwrap();
    let hundred = big.len() == 100;

    let mut grids = 0u64;
    let mut uncovered = 0u64;
    for tile in 1..=TILING_BOUND {
        for overlap in 0..tile {
            for w in tile..=TILING_BOUND {
                for h in tile..=TILING_BOUND {
                    let g = plan_grid(w, h, tile, overlap).unwrap();
                    grids += 1;
                    let mut rows = vec![false; h];
                    let mut cols = vec![false; w];
                    let mut inside = true;
                    for (r, c) in g.origins() {
                        inside &= r + tile <= h && c + tile <= w;
                        rows[r..(r + tile).min(h)].iter_mut().for_each(|x| *x = true);
                        cols[c..(c + tile).min(w)].iter_mut().for_each(|x| *x = true);
                    }
                    if !inside || !rows.iter().all(|&x| x) || !cols.iter().all(|&x| x) {
                        uncovered += 1;
                    }
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let round_trip_failures = (0..STITCH_RASTERS)
        .filter(|_| {
            let (w, h) = (rng.random_range(1..=160), rng.random_range(1..=160));
            let tile = rng.random_range(1..=w.min(h));
            let overlap = rng.random_range(0..tile);
            let m = common::random_change(&mut rng, w, h, 0.4);
            let g = plan_grid(w, h, tile, overlap).unwrap();
            stitch(&extract_tiles(&m, &g).unwrap(), &g).unwrap() != m
        })
        .count();
    outcome(
        hundred && uncovered == 0 && round_trip_failures == 0,
        format!(
            "2500x2500/256/6 gives {} tiles; {uncovered} of {grids} grids with W,H,P,overlap <= {TILING_BOUND} leave gaps; {round_trip_failures}/{STITCH_RASTERS} stitch(extract) mismatches",
            big.len()
        ),
    )
}

fn object_statistics() -> Outcome {
    // three 2x5 blobs, 10 px each
    let blobs = ChangeMask::from_fn(30, 10, |r, c| r < 2 && c % 10 < 5);
    let s = object_report(&blobs, 0.2).unwrap();
    let example = s.count == 3 && s.mean_area_px == 10.0 && (s.mean_area_m2 - 0.4).abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mismatches = (0..OBJECT_MAPS)
        .filter(|_| {
            let p = rng.random_range(0.05..0.6);
            let m = common::random_change(&mut rng, 32, 32, p);
            let oracle = common::flood_fill(&m.to_semantic(), &fg(), Connectivity::Eight);
            let stats = object_report(&m, 0.2).unwrap();
            let set = label_components(&m.to_semantic(), &fg(), Connectivity::Eight).unwrap();
            stats.count != oracle.len() || component_stats(&set, 0.2).unwrap().count != oracle.len()
        })
        .count();
    outcome(
        example && mismatches == 0,
        format!(
            "three blobs -> ({}, {} px, {:.1} m2); {mismatches}/{OBJECT_MAPS} count mismatches; published dataset averages are format references only",
            s.count, s.mean_area_px, s.mean_area_m2
        ),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_tempweak"))
        .args(args)
        .current_dir(dir)
        .env_remove("TEMPWEAK_THREADS")
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn pipeline(dir: &Path, threads: &str) -> Duration {
    let start = Instant::now();
    let t = ["--threads", threads];
    let steps: [&[&str]; 6] = [
        &["synth", "--seed", "2024", "--pairs", "64", "--size", "64", "--out", "data"],
        &["changemap", "--manifest", "data/truth.jsonl", "--out", "changemaps"],
        &["batch-plan", "--manifest", "data/manifest.jsonl", "--batch-size", "32", "--seed", "2024", "--batches", "16", "--out", "plan.txt"],
        &["changemap", "--manifest", "data/manifest.jsonl", "--plan", "plan.txt", "--out", "targets"],
        &["refine", "--manifest", "data/manifest.jsonl", "--pred-dir", "data/truth/change", "--out", "round1/manifest.jsonl", "--report", "round1/report.json"],
        &["evaluate", "--pred", "changemaps", "--ref", "data/truth/change", "--median-filter", "--resolution", "0.2", "--out", "evaluation.json"],
    ];
    for step in steps {
        let args: Vec<&str> = t.iter().chain(step).copied().collect();
        run_cli(dir, &args);
    }
    start.elapsed()
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn end_to_end() -> Outcome {
    let runs: Vec<(tempfile::TempDir, &str)> = ["1", "8", "1"].into_iter().map(|t| (tempfile::tempdir().unwrap(), t)).collect();
    let times: Vec<Duration> = runs.iter().map(|(dir, t)| pipeline(dir.path(), t)).collect();
    let trees: Vec<_> = runs.iter().map(|(dir, _)| tree(dir.path())).collect();
    let identical = trees.windows(2).all(|w| w[0] == w[1]);
    let slowest = times.iter().max().unwrap();
    outcome(
        identical && *slowest < E2E_TIME_LIMIT,
        format!(
            "{} files, byte-identical across runs at 1, 8, 1 threads: {identical}; slowest run {:.2} s (limit {} s)",
            trees[0].len(),
            slowest.as_secs_f64(),
            E2E_TIME_LIMIT.as_secs()
        ),
    )
}

fn main() {
    let corpus = corpus();
    let criteria: Vec<Criterion> = vec![
        ("sIoU oracle equivalence", Box::new(|| siou_oracle(&corpus))),
        ("threshold laws", Box::new(|| threshold_laws(&corpus))),
        ("one-pixel translation: sIoU vs XOR", Box::new(translation_contrast)),
        ("real/fake batch split exactness", Box::new(batch_split)),
        ("refinement boundary", Box::new(refinement_boundary)),
        ("metric identities", Box::new(metric_identities)),
        ("median filter", Box::new(median)),
        ("tiling", Box::new(tiling)),
        ("object statistics", Box::new(object_statistics)),
        ("end-to-end determinism", Box::new(end_to_end)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("[{:>2}] {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
