//! Balanced real/fake batch planning and weak target synthesis.
//!
//! A batch of `B` records is split into `floor(B * p_real)` real slots, which
//! keep their own bi-temporal pair, and the remaining fake slots, whose date-t'
//! images are permuted without fixed points so every fake slot pairs two
//! different locations.
//!
//! Every plan is a pure function of `(manifest, B, p_real, seed, batch_index)`.
//! Randomness comes from a ChaCha8 stream: the key is derived from `seed` and
//! the stream number is `batch_index`, so batches can be planned in any order
//! or in parallel.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::changemap::{siou_changemap, SIoUParams};
use crate::error::{Error, Result};
use crate::io;
use crate::manifest::{resolve, DatasetManifest};
use crate::raster::{ChangeMask, SemanticMask};

pub const DEFAULT_P_REAL: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Slot {
    /// A record's own image pair.
    Real { id: String },
    /// Image t of `id_t` paired with image t' of `id_t2`.
    Fake { id_t: String, id_t2: String },
}

impl Slot {
    pub fn is_real(&self) -> bool {
        matches!(self, Slot::Real { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub p_real: f64,
    pub seed: u64,
    pub batch_index: u64,
    /// Real slots first, then fake slots.
    pub slots: Vec<Slot>,
}

impl BatchPlan {
    pub fn real_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_real()).count()
    }

    pub fn fake_count(&self) -> usize {
        self.slots.len() - self.real_count()
    }
}

/// `(N_real, N_fake)` for a batch of `batch_size` with real proportion `p_real`.
///
/// `B * p_real` products that land within floating-point noise of an integer
/// are snapped to it, so e.g. `20 * 0.35` counts as exactly 7.
pub fn split_counts(batch_size: usize, p_real: f64) -> Result<(usize, usize)> {
    if batch_size == 0 {
        return Err(Error::arg("batch size must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p_real) {
        return Err(Error::arg(format!("p_real must lie in [0, 1], got {p_real}")));
    }
    let product = batch_size as f64 * p_real;
    let nearest = product.round();
    let real = if (product - nearest).abs() <= 1e-9 * product.max(1.0) {
        nearest
    } else {
        product.floor()
    } as usize;
    Ok((real, batch_size - real))
}

/// Random stream for one batch.
pub fn batch_rng(seed: u64, batch_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch_index);
    rng
}

/// Uniformly random permutation of `0..n` without fixed points, by rejection.
pub fn random_derangement(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if n == 1 {
        return Err(Error::arg("a single element has no derangement"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        perm.shuffle(rng);
        if perm.iter().enumerate().all(|(i, &p)| i != p) {
            return Ok(perm);
        }
    }
}

/// Plans batch `batch_index`: samples `batch_size` distinct training
/// records, keeps the first `N_real` as real slots and deranges the rest.
pub fn plan_batch(
    manifest: &DatasetManifest,
    batch_size: usize,
    p_real: f64,
    seed: u64,
    batch_index: u64,
) -> Result<BatchPlan> {
    let (n_real, n_fake) = split_counts(batch_size, p_real)?;
    if n_fake == 1 {
        return Err(Error::InfeasibleDerangement { batch_size, p_real });
    }
    let eligible: Vec<&str> = manifest.train_records().map(|r| r.id.as_str()).collect();
    if eligible.len() < batch_size {
        return Err(Error::InsufficientData {
            needed: batch_size,
            available: eligible.len(),
        });
    }

    let mut rng = batch_rng(seed, batch_index);
    let chosen = index::sample(&mut rng, eligible.len(), batch_size).into_vec();
    let (real, fake) = chosen.split_at(n_real);
    let perm = random_derangement(n_fake, &mut rng)?;

    let mut slots = Vec::with_capacity(batch_size);
    slots.extend(real.iter().map(|&i| Slot::Real {
        id: eligible[i].to_owned(),
    }));
    slots.extend(fake.iter().zip(&perm).map(|(&i, &p)| Slot::Fake {
        id_t: eligible[i].to_owned(),
        id_t2: eligible[fake[p]].to_owned(),
    }));

    Ok(BatchPlan {
        batch_size,
        p_real,
        seed,
        batch_index,
        slots,
    })
}

/// One line of a serialized plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannedSlot {
    pub batch_index: u64,
    pub slot_index: usize,
    pub slot: Slot,
}

/// Serializes plans as `batch_index slot_index kind id_i [id_j]` lines.
pub fn plans_to_text(plans: &[BatchPlan]) -> Result<String> {
    let mut out = String::new();
    for plan in plans {
        for (k, slot) in plan.slots.iter().enumerate() {
            let (kind, ids): (&str, Vec<&str>) = match slot {
                Slot::Real { id } => ("real", vec![id]),
                Slot::Fake { id_t, id_t2 } => ("fake", vec![id_t, id_t2]),
            };
            if let Some(bad) = ids.iter().find(|id| id.chars().any(char::is_whitespace)) {
                return Err(Error::arg(format!("record id `{bad}` contains whitespace")));
            }
            writeln!(out, "{} {} {} {}", plan.batch_index, k, kind, ids.join(" ")).unwrap();
        }
    }
    Ok(out)
}

pub fn parse_plan_text(text: &str) -> Result<Vec<PlannedSlot>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: &str| Error::Parse {
            line: i + 1,
            message: message.to_owned(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let batch_index = fields
            .first()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| err("bad batch index"))?;
        let slot_index = fields
            .get(1)
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| err("bad slot index"))?;
        let slot = match (fields.get(2).copied(), &fields[3.min(fields.len())..]) {
            (Some("real"), [id]) => Slot::Real { id: (*id).to_owned() },
            (Some("fake"), [a, b]) if a != b => Slot::Fake {
                id_t: (*a).to_owned(),
                id_t2: (*b).to_owned(),
            },
            (Some("fake"), [_, _]) => return Err(err("fake slot pairs a record with itself")),
            _ => return Err(err("expected `real ID` or `fake ID ID`")),
        };
        out.push(PlannedSlot {
            batch_index,
            slot_index,
            slot,
        });
    }
    Ok(out)
}

/// Supplies the date-t semantic mask of a record.
pub trait MaskSource {
    fn mask(&self, id: &str) -> Result<SemanticMask>;
}

impl MaskSource for HashMap<String, SemanticMask> {
    fn mask(&self, id: &str) -> Result<SemanticMask> {
        self.get(id).cloned().ok_or_else(|| Error::MissingMask {
            id: id.to_owned(),
            detail: "not loaded".into(),
        })
    }
}

/// Reads `mask_t` PNGs referenced by a manifest.
pub struct ManifestMasks<'a> {
    pub manifest: &'a DatasetManifest,
    pub manifest_dir: PathBuf,
    pub class_count: u16,
    pub background: u8,
}

impl<'a> ManifestMasks<'a> {
    pub fn new(manifest: &'a DatasetManifest, manifest_dir: &Path, class_count: u16, background: u8) -> Self {
        Self {
            manifest,
            manifest_dir: manifest_dir.to_path_buf(),
            class_count,
            background,
        }
    }
}

impl MaskSource for ManifestMasks<'_> {
    fn mask(&self, id: &str) -> Result<SemanticMask> {
        let record = self.manifest.get(id).ok_or_else(|| Error::MissingMask {
            id: id.to_owned(),
            detail: "record not in manifest".into(),
        })?;
        let path = resolve(&self.manifest_dir, &record.mask_t);
        io::read_mask(&path, self.class_count, self.background, Some(record.resolution)).map_err(|e| match e {
            Error::Io { ref source, .. } => Error::MissingMask {
                id: id.to_owned(),
                detail: format!("{e}: {source}"),
            },
            Error::Image { .. } => Error::MissingMask {
                id: id.to_owned(),
                detail: e.to_string(),
            },
            other => other,
        })
    }
}

/// Supervision for one slot: semantic targets for both dates and the change target.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakTargets {
    pub semantic_t: SemanticMask,
    pub semantic_t2: SemanticMask,
    pub change: ChangeMask,
}

/// Real slots are assumed unchanged (both targets = the date-t mask, empty
/// change map). Fake slots use the partner's date-t mask as its date-t' mask
/// and the sIoU change map between the two.
pub fn synthesize_targets(slot: &Slot, masks: &impl MaskSource, params: &SIoUParams) -> Result<WeakTargets> {
    match slot {
        Slot::Real { id } => {
            let mask = masks.mask(id)?;
            let change = ChangeMask::zeros(mask.width(), mask.height());
            Ok(WeakTargets {
                semantic_t2: mask.clone(),
                semantic_t: mask,
                change,
            })
        }
        Slot::Fake { id_t, id_t2 } => {
            let s1 = masks.mask(id_t)?;
            let s2 = masks.mask(id_t2)?;
            let change = siou_changemap(&s1, &s2, params)?;
            Ok(WeakTargets {
                semantic_t: s1,
                semantic_t2: s2,
                change,
            })
        }
    }
}
