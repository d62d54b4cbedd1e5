//! Dataset manifests.
//!
//! A manifest is a UTF-8 text file with one JSON object per line. The first
//! line is a header carrying the refinement `iteration` and an optional
//! `parent` manifest path; each following line is one [`PairRecord`]. Paths
//! inside a manifest are relative to the directory containing it.
//!
//! ```text
//! {"iteration":1,"parent":"round0.jsonl"}
//! {"id":"p0","image_t":"img/p0_t.png","image_t2":"img/p0_t2.png","mask_t":"mask/p0.png","split":"train","resolution":0.2}
//! ```

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// One bi-temporal location: two images, the date-t mask, and optional extras.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub id: String,
    pub image_t: PathBuf,
    pub image_t2: PathBuf,
    pub mask_t: PathBuf,
    /// Present only on fully annotated evaluation records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_t2: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_change: Option<PathBuf>,
    pub split: Split,
    /// Metres per pixel.
    pub resolution: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_t: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_t2: Option<NaiveDate>,
}

impl PairRecord {
    /// Minimal training record.
    pub fn new(
        id: impl Into<String>,
        image_t: impl Into<PathBuf>,
        image_t2: impl Into<PathBuf>,
        mask_t: impl Into<PathBuf>,
        resolution: f64,
    ) -> Self {
        Self {
            id: id.into(),
            image_t: image_t.into(),
            image_t2: image_t2.into(),
            mask_t: mask_t.into(),
            mask_t2: None,
            pred_change: None,
            split: Split::Train,
            resolution,
            date_t: None,
            date_t2: None,
        }
    }

    pub fn is_train(&self) -> bool {
        self.split == Split::Train
    }

    fn paths_mut(&mut self) -> impl Iterator<Item = &mut PathBuf> {
        [&mut self.image_t, &mut self.image_t2, &mut self.mask_t]
            .into_iter()
            .chain(self.mask_t2.as_mut())
            .chain(self.pred_change.as_mut())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    iteration: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetManifest {
    pub records: Vec<PairRecord>,
    pub iteration: u32,
    pub parent: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn new(records: Vec<PairRecord>) -> Self {
        Self {
            records,
            iteration: 0,
            parent: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&PairRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Training records in manifest order.
    pub fn train_records(&self) -> impl Iterator<Item = &PairRecord> {
        self.records.iter().filter(|r| r.is_train())
    }

    /// Checks id uniqueness and positive resolutions.
    pub fn check(&self) -> Result<()> {
        let mut seen = HashMap::with_capacity(self.records.len());
        for (i, record) in self.records.iter().enumerate() {
            check_record(record).map_err(|message| Error::Parse { line: i + 2, message })?;
            if let Some(first) = seen.insert(record.id.as_str(), i) {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("duplicate id `{}` (first on line {})", record.id, first + 2),
                });
            }
        }
        Ok(())
    }

    /// Parses manifest text. Reported line numbers are 1-based.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut manifest = DatasetManifest::default();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            if !header_seen {
                header_seen = true;
                let value: serde_json::Value =
                    serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
                if value.get("id").is_none() {
                    let header: Header =
                        serde_json::from_value(value).map_err(|e| parse_err(format!("header: {e}")))?;
                    manifest.iteration = header.iteration;
                    manifest.parent = header.parent;
                    continue;
                }
            }
            let record: PairRecord =
                serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            check_record(&record).map_err(parse_err)?;
            if let Some(first) = seen.insert(record.id.clone(), line_no) {
                return Err(parse_err(format!(
                    "duplicate id `{}` (first on line {first})",
                    record.id
                )));
            }
            manifest.records.push(record);
        }
        Ok(manifest)
    }

    /// Serialized text: header line then one line per record, LF-terminated.
    pub fn to_text(&self) -> String {
        let header = Header {
            iteration: self.iteration,
            parent: self.parent.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Re-expresses every relative path so that it stays valid when the
    /// manifest moves from directory `from` to directory `to`.
    pub fn rebase(&mut self, from: &Path, to: &Path) -> Result<()> {
        let from = absolute(from)?;
        let to = absolute(to)?;
        if from == to {
            return Ok(());
        }
        let rebase_one = |p: &mut PathBuf| {
            if p.is_relative() {
                let target = from.join(&*p);
                *p = pathdiff::diff_paths(&target, &to).unwrap_or(target);
            }
        };
        for record in &mut self.records {
            record.paths_mut().for_each(rebase_one);
        }
        Ok(())
    }
}

fn absolute(dir: &Path) -> Result<PathBuf> {
    let dir = if dir.as_os_str().is_empty() { Path::new(".") } else { dir };
    dir.canonicalize().map_err(|e| Error::io(dir, e))
}

fn check_record(record: &PairRecord) -> std::result::Result<(), String> {
    if record.id.is_empty() {
        return Err("empty id".into());
    }
    if !(record.resolution.is_finite() && record.resolution > 0.0) {
        return Err(format!(
            "record `{}`: resolution must be positive, got {}",
            record.id, record.resolution
        ));
    }
    Ok(())
}

/// Resolves a manifest-relative path against the manifest's directory.
pub fn resolve(manifest_dir: &Path, path: &Path) -> PathBuf {
    manifest_dir.join(path)
}

/// Directory that relative paths inside the manifest at `path` refer to.
pub fn manifest_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new(""))
}

pub fn parse_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DatasetManifest::parse_str(&text)
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    manifest.check()?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, manifest.to_text()).map_err(|e| Error::io(path, e))
}
