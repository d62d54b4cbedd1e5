//! Deterministic synthetic datasets of building blobs.
//!
//! Each pair places a few rectangular buildings (some with a notched corner)
//! on a background. The date-t' mask carries the same buildings, each shifted
//! by up to `jitter` pixels to mimic viewpoint differences. A fixed share of
//! pairs additionally gets one real change: a building is added (construction)
//! or removed (demolition) at date t'.
//!
//! Pair `i` draws all of its randomness from ChaCha8 stream `i` of `seed`, so
//! pairs can be generated in any order.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io;
use crate::manifest::{write_manifest, DatasetManifest, PairRecord, Split};
use crate::raster::{ChangeMask, SemanticMask};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub pair_count: usize,
    /// Side length of the square rasters.
    pub size: usize,
    /// Inclusive `(min, max)` number of buildings per pair.
    pub blob_count: (usize, usize),
    /// Inclusive `(min, max)` building side length.
    pub blob_size: (usize, usize),
    pub change_rate: f64,
    pub jitter: usize,
    pub resolution: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            pair_count: 64,
            size: 64,
            blob_count: (2, 5),
            blob_size: (4, 12),
            change_rate: 0.1,
            jitter: 1,
            resolution: 0.2,
        }
    }
}

impl SynthSpec {
    pub fn check(&self) -> Result<()> {
        if self.size < 16 {
            return Err(Error::arg(format!("size must be at least 16, got {}", self.size)));
        }
        let (bmin, bmax) = self.blob_count;
        if bmin == 0 || bmin > bmax {
            return Err(Error::arg(format!("blob count range {bmin}..={bmax} must be non-empty and start at 1 or more")));
        }
        let (smin, smax) = self.blob_size;
        if smin == 0 || smin > smax || smax > self.size / 2 {
            return Err(Error::arg(format!(
                "blob size range {smin}..={smax} must be non-empty, positive and at most size/2"
            )));
        }
        if !(0.0..=1.0).contains(&self.change_rate) {
            return Err(Error::arg(format!("change rate must lie in [0, 1], got {}", self.change_rate)));
        }
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::arg("resolution must be positive"));
        }
        Ok(())
    }

    /// Whether pair `index` receives a real change. Exactly `floor(n * rate)`
    /// of the first `n` pairs do, spread evenly.
    pub fn is_changed(&self, index: usize) -> bool {
        let count = |n: usize| (n as f64 * self.change_rate + 1e-9).floor() as usize;
        count(index + 1) > count(index)
    }

    pub fn pair_id(&self, index: usize) -> String {
        format!("p{index:05}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Construction,
    Demolition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Blob {
    row: isize,
    col: isize,
    height: usize,
    width: usize,
    /// Corner index (0..4) and notch extent, if notched.
    notch: Option<(u8, usize, usize)>,
}

impl Blob {
    fn contains(&self, r: isize, c: isize) -> bool {
        let (dr, dc) = (r - self.row, c - self.col);
        if dr < 0 || dc < 0 || dr >= self.height as isize || dc >= self.width as isize {
            return false;
        }
        match self.notch {
            None => true,
            Some((corner, nh, nw)) => {
                let (dr, dc) = (dr as usize, dc as usize);
                let in_rows = if corner & 1 == 0 { dr < nh } else { dr >= self.height - nh };
                let in_cols = if corner & 2 == 0 { dc < nw } else { dc >= self.width - nw };
                !(in_rows && in_cols)
            }
        }
    }

    fn shifted(&self, dr: isize, dc: isize) -> Blob {
        Blob {
            row: self.row + dr,
            col: self.col + dc,
            ..*self
        }
    }

    /// True when the two bounding boxes are closer than `gap` pixels.
    fn near(&self, other: &Blob, gap: isize) -> bool {
        let sep_rows = other.row >= self.row + self.height as isize + gap || self.row >= other.row + other.height as isize + gap;
        let sep_cols = other.col >= self.col + self.width as isize + gap || self.col >= other.col + other.width as isize + gap;
        !(sep_rows || sep_cols)
    }
}

fn rasterize(size: usize, blobs: &[Blob]) -> Vec<u8> {
    let mut data = vec![0u8; size * size];
    for blob in blobs {
        let r0 = blob.row.max(0) as usize;
        let c0 = blob.col.max(0) as usize;
        let r1 = (blob.row + blob.height as isize).clamp(0, size as isize) as usize;
        let c1 = (blob.col + blob.width as isize).clamp(0, size as isize) as usize;
        for r in r0..r1 {
            for c in c0..c1 {
                if blob.contains(r as isize, c as isize) {
                    data[r * size + c] = 1;
                }
            }
        }
    }
    data
}

/// One generated location.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthPair {
    pub id: String,
    pub mask_t: SemanticMask,
    pub mask_t2: SemanticMask,
    pub change: Option<ChangeKind>,
    /// Footprint of the added or removed building; empty for unchanged pairs.
    pub true_change: ChangeMask,
    /// RGB, row-major.
    pub image_t: Vec<u8>,
    pub image_t2: Vec<u8>,
}

const PLACEMENT_TRIES: usize = 200;

fn random_blob(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Blob {
    let (smin, smax) = spec.blob_size;
    let height = rng.random_range(smin..=smax);
    let width = rng.random_range(smin..=smax);
    let margin = spec.jitter;
    let max_row = spec.size.saturating_sub(height + margin).max(margin);
    let max_col = spec.size.saturating_sub(width + margin).max(margin);
    let notch = if height >= 3 && width >= 3 && rng.random_bool(0.3) {
        Some((rng.random_range(0..4u8), rng.random_range(1..=height / 2), rng.random_range(1..=width / 2)))
    } else {
        None
    };
    Blob {
        row: rng.random_range(margin..=max_row) as isize,
        col: rng.random_range(margin..=max_col) as isize,
        height,
        width,
        notch,
    }
}

/// Places a blob clear of every blob in `existing` (jittered copies included), if possible.
fn place(spec: &SynthSpec, rng: &mut ChaCha8Rng, existing: &[Blob]) -> Option<Blob> {
    let gap = 2 * spec.jitter as isize + 2;
    (0..PLACEMENT_TRIES)
        .map(|_| random_blob(spec, rng))
        .find(|b| existing.iter().all(|e| !b.near(e, gap)))
}

fn pair_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn render(size: usize, mask: &[u8], rng: &mut ChaCha8Rng, brightness: i16) -> Vec<u8> {
    let mut rgb = Vec::with_capacity(size * size * 3);
    for &v in mask {
        let noise = rng.random_range(-12i16..=12);
        let base: [i16; 3] = if v == 1 { [170, 120, 110] } else { [85, 120, 70] };
        rgb.extend(base.iter().map(|&b| (b + noise + brightness).clamp(0, 255) as u8));
    }
    rgb
}

pub fn generate_pair(spec: &SynthSpec, index: usize) -> Result<SynthPair> {
    spec.check()?;
    let size = spec.size;
    let mut rng = pair_rng(spec.seed, index);

    let n_blobs = rng.random_range(spec.blob_count.0..=spec.blob_count.1);
    let mut blobs: Vec<Blob> = Vec::with_capacity(n_blobs);
    for _ in 0..n_blobs {
        if let Some(b) = place(spec, &mut rng, &blobs) {
            blobs.push(b);
        }
    }
    if blobs.is_empty() {
        blobs.push(random_blob(spec, &mut rng));
    }

    let j = spec.jitter as i64;
    let mut blobs_t2: Vec<Blob> = blobs
        .iter()
        .map(|b| b.shifted(rng.random_range(-j..=j) as isize, rng.random_range(-j..=j) as isize))
        .collect();

    let mut change = None;
    let mut true_change = ChangeMask::zeros(size, size);
    if spec.is_changed(index) {
        let kind = if rng.random_bool(0.5) {
            ChangeKind::Construction
        } else {
            ChangeKind::Demolition
        };
        let added = match kind {
            ChangeKind::Construction => {
                let existing: Vec<Blob> = blobs.iter().chain(&blobs_t2).copied().collect();
                place(spec, &mut rng, &existing)
            }
            ChangeKind::Demolition => None,
        };
        let footprint = match added {
            Some(blob) => {
                blobs_t2.push(blob);
                change = Some(ChangeKind::Construction);
                blob
            }
            None => {
                let k = rng.random_range(0..blobs.len());
                blobs_t2.remove(k);
                change = Some(ChangeKind::Demolition);
                blobs[k]
            }
        };
        let data = rasterize(size, &[footprint]);
        true_change = ChangeMask::new(size, size, data)?;
    }

    let mask_t = SemanticMask::binary(size, size, rasterize(size, &blobs))?.with_resolution(spec.resolution)?;
    let mask_t2 = SemanticMask::binary(size, size, rasterize(size, &blobs_t2))?.with_resolution(spec.resolution)?;
    let image_t = render(size, mask_t.data(), &mut rng, 0);
    let shift = rng.random_range(-20i16..=20);
    let image_t2 = render(size, mask_t2.data(), &mut rng, shift);

    Ok(SynthPair {
        id: spec.pair_id(index),
        mask_t,
        mask_t2,
        change,
        true_change,
        image_t,
        image_t2,
    })
}

/// Relative paths of the files written for one pair.
pub struct PairPaths {
    pub image_t: PathBuf,
    pub image_t2: PathBuf,
    pub mask_t: PathBuf,
    pub mask_t2: PathBuf,
    pub true_change: PathBuf,
}

impl PairPaths {
    pub fn for_id(id: &str) -> Self {
        Self {
            image_t: format!("images/{id}_t.png").into(),
            image_t2: format!("images/{id}_t2.png").into(),
            mask_t: format!("masks/{id}_t.png").into(),
            mask_t2: format!("truth/masks_t2/{id}_t2.png").into(),
            true_change: format!("truth/change/{id}_change.png").into(),
        }
    }
}

pub const TRAIN_MANIFEST: &str = "manifest.jsonl";
pub const TRUTH_MANIFEST: &str = "truth.jsonl";

/// Writes one pair's rasters below `out_dir`.
pub fn write_pair(out_dir: &Path, pair: &SynthPair) -> Result<()> {
    let paths = PairPaths::for_id(&pair.id);
    let size = pair.mask_t.width();
    io::write_rgb(&out_dir.join(&paths.image_t), size, size, pair.image_t.clone())?;
    io::write_rgb(&out_dir.join(&paths.image_t2), size, size, pair.image_t2.clone())?;
    io::write_mask(&out_dir.join(&paths.mask_t), &pair.mask_t)?;
    io::write_mask(&out_dir.join(&paths.mask_t2), &pair.mask_t2)?;
    io::write_change(&out_dir.join(&paths.true_change), &pair.true_change)
}

/// The training manifest (no date-t' masks) and the fully annotated truth manifest.
pub fn manifests(spec: &SynthSpec) -> (DatasetManifest, DatasetManifest) {
    let train: Vec<PairRecord> = (0..spec.pair_count)
        .map(|i| {
            let id = spec.pair_id(i);
            let paths = PairPaths::for_id(&id);
            PairRecord::new(id, paths.image_t, paths.image_t2, paths.mask_t, spec.resolution)
        })
        .collect();
    let truth = train
        .iter()
        .map(|r| PairRecord {
            mask_t2: Some(PairPaths::for_id(&r.id).mask_t2),
            split: Split::Test,
            ..r.clone()
        })
        .collect();
    (DatasetManifest::new(train), DatasetManifest::new(truth))
}

/// Generates the whole dataset into `out_dir` and returns the training manifest.
pub fn generate(spec: &SynthSpec, out_dir: &Path) -> Result<DatasetManifest> {
    spec.check()?;
    for i in 0..spec.pair_count {
        write_pair(out_dir, &generate_pair(spec, i)?)?;
    }
    let (train, truth) = manifests(spec);
    write_manifest(&train, &out_dir.join(TRAIN_MANIFEST))?;
    write_manifest(&truth, &out_dir.join(TRUTH_MANIFEST))?;
    Ok(train)
}
