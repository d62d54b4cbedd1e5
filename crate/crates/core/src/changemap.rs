//! Weak change maps from pairs of semantic masks.
//!
//! The object-level method scores every connected component of one mask
//! against the same-class components of the other mask it overlaps, using a
//! segment-wise IoU (sIoU) whose denominator ignores pixels that belong to
//! sibling components of the first mask. A component whose score falls below
//! `tau` is marked changed in full. Both directions are evaluated and their
//! marks are combined.
//!
//! Pixel-level XOR and OR maps are provided as baselines, and the
//! post-classification map compares two predicted masks with the XOR rule.

use std::str::FromStr;

use crate::components::{label_components, Component, ComponentSet, Connectivity};
use crate::error::{Error, Result};
use crate::raster::{ChangeMask, ClassSet, SemanticMask};

pub const DEFAULT_TAU: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SIoUParams {
    pub tau: f64,
    pub connectivity: Connectivity,
    pub classes: ClassSet,
}

impl Default for SIoUParams {
    /// Building-only maps (`class 1`) with `tau = 0.25` and 8-connectivity.
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            connectivity: Connectivity::Eight,
            classes: ClassSet::single(1),
        }
    }
}

impl SIoUParams {
    pub fn new(tau: f64, classes: ClassSet) -> Self {
        Self {
            tau,
            classes,
            ..Self::default()
        }
    }

    pub fn with_connectivity(mut self, connectivity: Connectivity) -> Self {
        self.connectivity = connectivity;
        self
    }

    /// Checks the parameters against a mask's class table.
    pub fn check(&self, mask: &SemanticMask) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::arg(format!("tau must lie in [0, 1], got {}", self.tau)));
        }
        check_classes(&self.classes, mask)
    }
}

fn check_classes(classes: &ClassSet, mask: &SemanticMask) -> Result<()> {
    if classes.is_empty() {
        return Err(Error::arg("classes of interest are empty"));
    }
    classes.check_against(mask.class_count())?;
    if classes.contains(mask.background()) {
        return Err(Error::arg(format!(
            "background class {} cannot be a class of interest",
            mask.background()
        )));
    }
    Ok(())
}

fn check_pair(s1: &SemanticMask, s2: &SemanticMask) -> Result<()> {
    if s1.dims() != s2.dims() {
        return Err(Error::Shape {
            expected: s1.dims(),
            found: s2.dims(),
        });
    }
    if s1.class_count() != s2.class_count() {
        return Err(Error::ClassCount {
            left: s1.class_count(),
            right: s2.class_count(),
        });
    }
    Ok(())
}

/// sIoU of component `c` (taken from `same`) with respect to `other`.
///
/// Returns 0 when no same-class component of `other` overlaps `c`.
pub fn siou_of_component(c: &Component, same: &ComponentSet, other: &ComponentSet) -> Result<f64> {
    if same.dims() != other.dims() {
        return Err(Error::Shape {
            expected: same.dims(),
            found: other.dims(),
        });
    }
    Ok(siou_unchecked(c, same, other))
}

fn siou_unchecked(c: &Component, same: &ComponentSet, other: &ComponentSet) -> f64 {
    let class = c.class_id();
    let width = same.width();
    let others = other.components();

    let mut matched: Vec<usize> = Vec::new();
    let mut intersection = 0usize;
    for &(row, col) in c.pixels() {
        if let Some(j) = other.component_at_index(row * width + col) {
            if others[j].class_id() == class {
                intersection += 1;
                matched.push(j);
            }
        }
    }
    if intersection == 0 {
        return 0.0;
    }
    matched.sort_unstable();
    matched.dedup();

    // (c ∪ C(c)) \ A(c) = c plus the matched pixels not covered by any
    // same-class component of `same` (c itself or one of its siblings).
    let siblings = same.components();
    let mut denominator = c.area_px();
    for &j in &matched {
        for &(row, col) in others[j].pixels() {
            let covered = same
                .component_at_index(row * width + col)
                .is_some_and(|i| siblings[i].class_id() == class);
            if !covered {
                denominator += 1;
            }
        }
    }
    intersection as f64 / denominator as f64
}

/// sIoU of every component of `same` with respect to `other`, in component order.
pub fn siou_scores(same: &ComponentSet, other: &ComponentSet) -> Result<Vec<f64>> {
    same.components()
        .iter()
        .map(|c| siou_of_component(c, same, other))
        .collect()
}

/// Object-level change map: every component scoring below `tau` in either direction.
pub fn siou_changemap(s1: &SemanticMask, s2: &SemanticMask, params: &SIoUParams) -> Result<ChangeMask> {
    check_pair(s1, s2)?;
    params.check(s1)?;
    let cs1 = label_components(s1, &params.classes, params.connectivity)?;
    let cs2 = label_components(s2, &params.classes, params.connectivity)?;
    Ok(siou_changemap_from_components(&cs1, &cs2, params.tau))
}

/// As [`siou_changemap`], reusing already-labeled component sets.
pub fn siou_changemap_from_components(cs1: &ComponentSet, cs2: &ComponentSet, tau: f64) -> ChangeMask {
    let mut out = ChangeMask::zeros(cs1.width(), cs1.height());
    for (same, other) in [(cs1, cs2), (cs2, cs1)] {
        for c in same.components() {
            if siou_unchecked(c, same, other) < tau {
                for &(row, col) in c.pixels() {
                    out.set_index(row * same.width() + col);
                }
            }
        }
    }
    out
}

fn pixelwise(
    s1: &SemanticMask,
    s2: &SemanticMask,
    classes: &ClassSet,
    op: impl Fn(bool, bool) -> bool,
) -> Result<ChangeMask> {
    if s1.dims() != s2.dims() {
        return Err(Error::Shape {
            expected: s1.dims(),
            found: s2.dims(),
        });
    }
    if classes.is_empty() {
        return Err(Error::arg("classes of interest are empty"));
    }
    classes.check_against(s1.class_count())?;
    classes.check_against(s2.class_count())?;
    let data = s1
        .data()
        .iter()
        .zip(s2.data())
        .map(|(&a, &b)| u8::from(op(classes.contains(a), classes.contains(b))))
        .collect();
    ChangeMask::new(s1.width(), s1.height(), data)
}

/// Pixels whose class-of-interest membership differs between the two masks.
pub fn xor_changemap(s1: &SemanticMask, s2: &SemanticMask, classes: &ClassSet) -> Result<ChangeMask> {
    pixelwise(s1, s2, classes, |a, b| a != b)
}

/// Union of the class-of-interest footprints of both masks.
pub fn or_changemap(s1: &SemanticMask, s2: &SemanticMask, classes: &ClassSet) -> Result<ChangeMask> {
    pixelwise(s1, s2, classes, |a, b| a || b)
}

/// Post-classification comparison of two predicted semantic masks.
pub fn postclass_changemap(
    pred1: &SemanticMask,
    pred2: &SemanticMask,
    classes: &ClassSet,
) -> Result<ChangeMask> {
    xor_changemap(pred1, pred2, classes)
}

/// Change-map generation rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChangeMethod {
    Siou,
    Xor,
    Or,
}

impl ChangeMethod {
    pub fn compute(self, s1: &SemanticMask, s2: &SemanticMask, params: &SIoUParams) -> Result<ChangeMask> {
        match self {
            ChangeMethod::Siou => siou_changemap(s1, s2, params),
            ChangeMethod::Xor => xor_changemap(s1, s2, &params.classes),
            ChangeMethod::Or => or_changemap(s1, s2, &params.classes),
        }
    }
}

impl FromStr for ChangeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "siou" => Ok(ChangeMethod::Siou),
            "xor" => Ok(ChangeMethod::Xor),
            "or" => Ok(ChangeMethod::Or),
            other => Err(Error::arg(format!("unknown change method `{other}`"))),
        }
    }
}
