//! In-memory raster types shared by every stage of the toolkit.
//!
//! A [`SemanticMask`] holds one class index per pixel (row-major, `u8`), a
//! class count `K` and a background class. A [`ChangeMask`] is a binary raster
//! with values in `{0, 1}`. Both are immutable values once built: operations
//! return new rasters instead of mutating their inputs.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest class count representable with 8-bit pixels.
pub const MAX_CLASSES: u16 = 256;

/// A set of class indices, stored as a 256-bit membership table.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ClassSet {
    bits: [u64; 4],
}

impl ClassSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(class: u8) -> Self {
        let mut set = Self::new();
        set.insert(class);
        set
    }

    pub fn insert(&mut self, class: u8) {
        self.bits[(class >> 6) as usize] |= 1 << (class & 63);
    }

    #[inline]
    pub fn contains(&self, class: u8) -> bool {
        self.bits[(class >> 6) as usize] & (1 << (class & 63)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Classes in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=255u8).filter(move |&c| self.contains(c))
    }

    /// Largest member, if any.
    pub fn max(&self) -> Option<u8> {
        self.iter().last()
    }

    /// Fails with [`Error::InvalidClass`] if any member is `>= class_count`.
    pub fn check_against(&self, class_count: u16) -> Result<()> {
        match self.iter().find(|&c| u16::from(c) >= class_count) {
            Some(class) => Err(Error::InvalidClass {
                class: class.into(),
                class_count,
            }),
            None => Ok(()),
        }
    }
}

impl FromIterator<u8> for ClassSet {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        let mut set = Self::new();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

impl fmt::Debug for ClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Per-pixel class raster.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
    class_count: u16,
    background: u8,
    resolution: Option<f64>,
}

impl SemanticMask {
    /// Builds a mask with background class 0 and no resolution, checking every invariant.
    pub fn new(width: usize, height: usize, data: Vec<u8>, class_count: u16) -> Result<Self> {
        if class_count == 0 || class_count > MAX_CLASSES {
            return Err(Error::arg(format!(
                "class count must be in 1..={MAX_CLASSES}, got {class_count}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Shape {
                expected: (height, width),
                found: (data.len(), 1),
            });
        }
        if let Some(&class) = data.iter().find(|&&v| u16::from(v) >= class_count) {
            return Err(Error::InvalidClass {
                class: class.into(),
                class_count,
            });
        }
        Ok(Self {
            width,
            height,
            data,
            class_count,
            background: 0,
            resolution: None,
        })
    }

    /// Binary building/background mask (`K = 2`).
    pub fn binary(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, data, 2)
    }

    pub fn filled(width: usize, height: usize, class: u8, class_count: u16) -> Result<Self> {
        Self::new(width, height, vec![class; width * height], class_count)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        class_count: u16,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self::new(width, height, data, class_count)
    }

    /// Assembles a mask without checking any invariant. Pair with [`validate`].
    pub fn from_raw_parts(
        width: usize,
        height: usize,
        data: Vec<u8>,
        class_count: u16,
        background: u8,
        resolution: Option<f64>,
    ) -> Self {
        Self {
            width,
            height,
            data,
            class_count,
            background,
            resolution,
        }
    }

    pub fn with_background(mut self, background: u8) -> Result<Self> {
        if u16::from(background) >= self.class_count {
            return Err(Error::InvalidClass {
                class: background.into(),
                class_count: self.class_count,
            });
        }
        self.background = background;
        Ok(self)
    }

    pub fn with_resolution(mut self, resolution: f64) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::arg(format!("resolution must be positive, got {resolution}")));
        }
        self.resolution = Some(resolution);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(height, width)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn class_count(&self) -> u16 {
        self.class_count
    }

    pub fn background(&self) -> u8 {
        self.background
    }

    pub fn resolution(&self) -> Option<f64> {
        self.resolution
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    /// Number of pixels whose class is in `classes`.
    pub fn count_in(&self, classes: &ClassSet) -> usize {
        self.data.iter().filter(|&&v| classes.contains(v)).count()
    }

    /// Sub-raster with top-left corner `(row, col)`; metadata is carried over.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Self> {
        let data = crop_rows(&self.data, self.dims(), row, col, height, width)?;
        Ok(Self {
            width,
            height,
            data,
            ..self.clone()
        })
    }
}

/// Binary change raster, values in `{0, 1}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ChangeMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ChangeMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape {
                expected: (height, width),
                found: (data.len(), 1),
            });
        }
        if let Some(&v) = data.iter().find(|&&v| v > 1) {
            return Err(Error::arg(format!("change mask values must be 0 or 1, found {v}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn ones(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![1; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(u8::from(f(row, col)));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(height, width)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col] != 0
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = u8::from(value);
    }

    pub(crate) fn set_index(&mut self, index: usize) {
        self.data[index] = 1;
    }

    pub fn count_changed(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_all_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// True when every changed pixel of `self` is also changed in `other`.
    pub fn is_subset_of(&self, other: &ChangeMask) -> bool {
        self.dims() == other.dims()
            && self.data.iter().zip(&other.data).all(|(&a, &b)| a <= b)
    }

    /// Views the map as a binary semantic mask (class 1 = changed).
    pub fn to_semantic(&self) -> SemanticMask {
        SemanticMask::from_raw_parts(self.width, self.height, self.data.clone(), 2, 0, None)
    }

    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Self> {
        let data = crop_rows(&self.data, self.dims(), row, col, height, width)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }
}

impl fmt::Debug for ChangeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ChangeMask {}x{}", self.width, self.height)?;
        for row in self.data.chunks(self.width.max(1)) {
            let line: String = row.iter().map(|&v| if v != 0 { '#' } else { '.' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

fn crop_rows(
    data: &[u8],
    (src_h, src_w): (usize, usize),
    row: usize,
    col: usize,
    height: usize,
    width: usize,
) -> Result<Vec<u8>> {
    if row + height > src_h || col + width > src_w {
        return Err(Error::Shape {
            expected: (src_h, src_w),
            found: (row + height, col + width),
        });
    }
    let mut out = Vec::with_capacity(height * width);
    for r in row..row + height {
        out.extend_from_slice(&data[r * src_w + col..r * src_w + col + width]);
    }
    Ok(out)
}

/// Maps every class in `foreground` to 1 and everything else to 0.
///
/// The result has two classes, background 0, and keeps dimensions and resolution.
pub fn merge_classes(mask: &SemanticMask, foreground: &ClassSet) -> Result<SemanticMask> {
    if foreground.is_empty() {
        return Err(Error::arg("foreground class set is empty"));
    }
    foreground.check_against(mask.class_count)?;
    if foreground.contains(mask.background) {
        return Err(Error::arg(format!(
            "background class {} cannot be foreground",
            mask.background
        )));
    }
    let data = mask
        .data
        .iter()
        .map(|&v| u8::from(foreground.contains(v)))
        .collect();
    Ok(SemanticMask {
        width: mask.width,
        height: mask.height,
        data,
        class_count: 2,
        background: 0,
        resolution: mask.resolution,
    })
}

/// Nearest-neighbour downsampling by an integer factor.
///
/// Each output pixel samples the centre of its `factor x factor` input cell,
/// at offset `factor / 2` (integer division) in both axes.
pub fn nn_resample(mask: &SemanticMask, factor: usize) -> Result<SemanticMask> {
    if factor == 0 {
        return Err(Error::arg("resample factor must be positive"));
    }
    if !mask.width.is_multiple_of(factor) || !mask.height.is_multiple_of(factor) {
        return Err(Error::Shape {
            expected: (
                mask.height / factor * factor,
                mask.width / factor * factor,
            ),
            found: mask.dims(),
        });
    }
    let (out_w, out_h) = (mask.width / factor, mask.height / factor);
    let offset = factor / 2;
    let mut data = Vec::with_capacity(out_w * out_h);
    for row in 0..out_h {
        let src_row = row * factor + offset;
        for col in 0..out_w {
            data.push(mask.get(src_row, col * factor + offset));
        }
    }
    Ok(SemanticMask {
        width: out_w,
        height: out_h,
        data,
        class_count: mask.class_count,
        background: mask.background,
        resolution: mask.resolution.map(|r| r * factor as f64),
    })
}

/// One violated invariant found by [`validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    OutOfRange { row: usize, col: usize, value: u8 },
    DimensionMismatch { expected: usize, found: usize },
    ClassCount { class_count: u16 },
    BackgroundOutOfRange { background: u8 },
    Resolution { resolution: f64 },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::OutOfRange { row, col, value } => {
                write!(f, "pixel ({row}, {col}) has out-of-range class {value}")
            }
            Finding::DimensionMismatch { expected, found } => {
                write!(f, "data holds {found} pixels, dimensions require {expected}")
            }
            Finding::ClassCount { class_count } => {
                write!(f, "class count {class_count} outside 1..={MAX_CLASSES}")
            }
            Finding::BackgroundOutOfRange { background } => {
                write!(f, "background class {background} is not below the class count")
            }
            Finding::Resolution { resolution } => {
                write!(f, "resolution {resolution} is not positive")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Lists every invariant the mask violates; an empty report means the mask is well formed.
pub fn validate(mask: &SemanticMask) -> ValidationReport {
    let mut findings = Vec::new();
    let expected = mask.width * mask.height;
    if mask.data.len() != expected {
        findings.push(Finding::DimensionMismatch {
            expected,
            found: mask.data.len(),
        });
    }
    if mask.class_count == 0 || mask.class_count > MAX_CLASSES {
        findings.push(Finding::ClassCount {
            class_count: mask.class_count,
        });
    }
    if u16::from(mask.background) >= mask.class_count {
        findings.push(Finding::BackgroundOutOfRange {
            background: mask.background,
        });
    }
    if let Some(resolution) = mask.resolution {
        if !(resolution.is_finite() && resolution > 0.0) {
            findings.push(Finding::Resolution { resolution });
        }
    }
    let width = mask.width.max(1);
    for (i, &value) in mask.data.iter().enumerate() {
        if u16::from(value) >= mask.class_count {
            findings.push(Finding::OutOfRange {
                row: i / width,
                col: i % width,
                value,
            });
        }
    }
    ValidationReport { findings }
}
