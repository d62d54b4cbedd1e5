//! Connected-component labeling of semantic masks.
//!
//! Labeling is a classic two-pass scan with a union-find table over
//! provisional labels. Components are enumerated in row-major order of their
//! first pixel, so identical inputs always produce identical component lists.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{ClassSet, SemanticMask};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(Error::arg(format!("connectivity must be 4 or 8, got {other}"))),
        }
    }
}

/// Inclusive pixel bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundingBox {
    pub min_row: usize,
    pub min_col: usize,
    pub max_row: usize,
    pub max_col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    class_id: u8,
    /// `(row, col)` pairs in row-major order.
    pixels: Vec<(usize, usize)>,
    bbox: BoundingBox,
}

impl Component {
    pub fn class_id(&self) -> u8 {
        self.class_id
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn area_px(&self) -> usize {
        self.pixels.len()
    }
}

/// All components found in one mask, plus a per-pixel label raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentSet {
    width: usize,
    height: usize,
    components: Vec<Component>,
    /// 0 = not part of any component, otherwise component index + 1.
    labels: Vec<u32>,
}

impl ComponentSet {
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

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Index of the component covering the pixel at linear position `index`.
    #[inline]
    pub fn component_at_index(&self, index: usize) -> Option<usize> {
        match self.labels[index] {
            0 => None,
            label => Some(label as usize - 1),
        }
    }

    pub fn component_at(&self, row: usize, col: usize) -> Option<usize> {
        self.component_at_index(row * self.width + col)
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        // slot 0 is the "no label" sentinel
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Labels the maximal connected components of every class in `classes`.
///
/// Pixels of other classes are ignored. Two pixels are adjacent only if they
/// share a class.
pub fn label_components(
    mask: &SemanticMask,
    classes: &ClassSet,
    connectivity: Connectivity,
) -> Result<ComponentSet> {
    classes.check_against(mask.class_count())?;
    let (height, width) = mask.dims();
    let data = mask.data();
    let mut provisional = vec![0u32; width * height];
    let mut uf = UnionFind::new();

    for row in 0..height {
        for col in 0..width {
            let idx = row * width + col;
            let class = data[idx];
            if !classes.contains(class) {
                continue;
            }
            let mut label = 0u32;
            let mut visit = |nidx: usize, uf: &mut UnionFind| {
                if data[nidx] == class && provisional[nidx] != 0 {
                    let other = provisional[nidx];
                    label = if label == 0 { uf.find(other) } else { uf.union(label, other) };
                }
            };
            if col > 0 {
                visit(idx - 1, &mut uf);
            }
            if row > 0 {
                visit(idx - width, &mut uf);
                if connectivity == Connectivity::Eight {
                    if col > 0 {
                        visit(idx - width - 1, &mut uf);
                    }
                    if col + 1 < width {
                        visit(idx - width + 1, &mut uf);
                    }
                }
            }
            provisional[idx] = if label == 0 { uf.make() } else { label };
        }
    }

    // Resolve roots; number final components by first appearance.
    let mut final_of_root = vec![0u32; uf.parent.len()];
    let mut components: Vec<Component> = Vec::new();
    let mut labels = vec![0u32; width * height];
    for row in 0..height {
        for col in 0..width {
            let idx = row * width + col;
            if provisional[idx] == 0 {
                continue;
            }
            let root = uf.find(provisional[idx]) as usize;
            if final_of_root[root] == 0 {
                components.push(Component {
                    class_id: data[idx],
                    pixels: Vec::new(),
                    bbox: BoundingBox {
                        min_row: row,
                        min_col: col,
                        max_row: row,
                        max_col: col,
                    },
                });
                final_of_root[root] = components.len() as u32;
            }
            let label = final_of_root[root];
            labels[idx] = label;
            let comp = &mut components[label as usize - 1];
            comp.pixels.push((row, col));
            let bbox = &mut comp.bbox;
            bbox.min_col = bbox.min_col.min(col);
            bbox.max_col = bbox.max_col.max(col);
            bbox.max_row = row;
        }
    }

    Ok(ComponentSet {
        width,
        height,
        components,
        labels,
    })
}

/// Object-count summary of a component set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ComponentStats {
    pub count: usize,
    pub mean_area_px: f64,
    pub mean_area_m2: f64,
}

/// Count and mean area (pixels and square metres) of the components.
pub fn component_stats(set: &ComponentSet, resolution: f64) -> Result<ComponentStats> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::arg(format!("resolution must be positive, got {resolution}")));
    }
    let count = set.len();
    if count == 0 {
        return Ok(ComponentStats::default());
    }
    let total: usize = set.components.iter().map(Component::area_px).sum();
    let mean_area_px = total as f64 / count as f64;
    Ok(ComponentStats {
        count,
        mean_area_px,
        mean_area_m2: mean_area_px * resolution * resolution,
    })
}
