//! Pixel and object metrics for binary change maps.

use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::Serialize;

use crate::components::{component_stats, label_components, ComponentStats, Connectivity};
use crate::error::{Error, Result};
use crate::raster::{ChangeMask, ClassSet};

pub const DEFAULT_MEDIAN_WINDOW: usize = 5;

/// Micro-averaged confusion counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    /// Counts for a single prediction/reference pair.
    pub fn from_pair(pred: &ChangeMask, reference: &ChangeMask) -> Result<Self> {
        Self::default().accumulate(pred, reference)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Returns `self` plus the counts of one more pair.
    pub fn accumulate(mut self, pred: &ChangeMask, reference: &ChangeMask) -> Result<Self> {
        if pred.dims() != reference.dims() {
            return Err(Error::Shape {
                expected: reference.dims(),
                found: pred.dims(),
            });
        }
        let mut cells = [0u64; 4];
        for (&p, &r) in pred.data().iter().zip(reference.data()) {
            cells[usize::from(p << 1 | r)] += 1;
        }
        self.tn += cells[0b00];
        self.fn_ += cells[0b01];
        self.fp += cells[0b10];
        self.tp += cells[0b11];
        Ok(self)
    }

    /// `(2tp, 2tp + fp + fn)`.
    pub fn f1_fraction(&self) -> (u64, u64) {
        (2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    /// `(tp, tp + fp + fn)`.
    pub fn iou_fraction(&self) -> (u64, u64) {
        (self.tp, self.tp + self.fp + self.fn_)
    }

    /// `(fp, fp + tn)`.
    pub fn fpr_fraction(&self) -> (u64, u64) {
        (self.fp, self.fp + self.tn)
    }

    pub fn f1(&self) -> f64 {
        ratio(self.f1_fraction())
    }

    pub fn iou(&self) -> f64 {
        ratio(self.iou_fraction())
    }

    pub fn fpr(&self) -> f64 {
        ratio(self.fpr_fraction())
    }

    pub fn scores(&self) -> Scores {
        Scores {
            f1: self.f1(),
            iou: self.iou(),
            fpr: self.fpr(),
        }
    }
}

fn ratio((num, den): (u64, u64)) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            tp: self.tp + rhs.tp,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
            tn: self.tn + rhs.tn,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Scores in `[0, 1]`; zero whenever the denominator is zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Scores {
    pub f1: f64,
    pub iou: f64,
    pub fpr: f64,
}

impl Scores {
    /// Percentages rounded to one decimal.
    pub fn percent(&self) -> Scores {
        let p = |v: f64| (v * 1000.0).round() / 10.0;
        Scores {
            f1: p(self.f1),
            iou: p(self.iou),
            fpr: p(self.fpr),
        }
    }
}

pub fn f1(counts: &ConfusionCounts) -> f64 {
    counts.f1()
}

pub fn iou(counts: &ConfusionCounts) -> f64 {
    counts.iou()
}

pub fn fpr(counts: &ConfusionCounts) -> f64 {
    counts.fpr()
}

/// Binary median over a `window x window` neighbourhood clipped to the image.
///
/// On `{0, 1}` data the median is the majority vote over the valid pixels of
/// the window; an exact tie (possible only where the clipped window holds an
/// even number of pixels) resolves to 0. Window sums come from a summed-area
/// table.
pub fn median_filter(mask: &ChangeMask, window: usize) -> Result<ChangeMask> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::arg(format!("median window must be odd, got {window}")));
    }
    let (h, w) = mask.dims();
    let radius = window / 2;
    // sat[(r)*(w+1) + c] = ones in rows < r, cols < c
    let stride = w + 1;
    let mut sat = vec![0u32; (h + 1) * stride];
    for r in 0..h {
        let mut row_sum = 0u32;
        for c in 0..w {
            row_sum += u32::from(mask.data()[r * w + c]);
            sat[(r + 1) * stride + c + 1] = sat[r * stride + c + 1] + row_sum;
        }
    }
    Ok(ChangeMask::from_fn(w, h, |r, c| {
        let (r0, r1) = (r.saturating_sub(radius), (r + radius + 1).min(h));
        let (c0, c1) = (c.saturating_sub(radius), (c + radius + 1).min(w));
        let ones = sat[r1 * stride + c1] + sat[r0 * stride + c0] - sat[r0 * stride + c1] - sat[r1 * stride + c0];
        let valid = ((r1 - r0) * (c1 - c0)) as u32;
        2 * ones > valid
    }))
}

pub fn median_filter_5x5(mask: &ChangeMask) -> ChangeMask {
    median_filter(mask, DEFAULT_MEDIAN_WINDOW).expect("5 is a valid window")
}

/// Number and mean size of the 8-connected change objects in a map.
pub fn object_report(pred: &ChangeMask, resolution: f64) -> Result<ComponentStats> {
    let set = label_components(&pred.to_semantic(), &ClassSet::single(1), Connectivity::Eight)?;
    component_stats(&set, resolution)
}
