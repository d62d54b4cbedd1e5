//! Reference implementations used as test oracles.
//!
//! Everything here works on explicit pixel sets and plain loops, independent
//! of the library's label rasters and summed-area tables.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tempweak_core::{ChangeMask, ClassSet, Connectivity, SemanticMask};

pub type PixelSet = BTreeSet<(usize, usize)>;

/// A component as `(class, pixels)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefComponent {
    pub class: u8,
    pub pixels: PixelSet,
}

fn neighbours(conn: Connectivity) -> &'static [(isize, isize)] {
    const FOUR: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
    const EIGHT: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
    match conn {
        Connectivity::Four => &FOUR,
        Connectivity::Eight => &EIGHT,
    }
}

/// Depth-first flood fill from every unvisited pixel, row-major seed order.
pub fn flood_fill(mask: &SemanticMask, classes: &ClassSet, conn: Connectivity) -> Vec<RefComponent> {
    let (h, w) = mask.dims();
    let mut seen = vec![vec![false; w]; h];
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let class = mask.get(r, c);
            if seen[r][c] || !classes.contains(class) {
                continue;
            }
            let mut pixels = PixelSet::new();
            let mut stack = vec![(r, c)];
            seen[r][c] = true;
            while let Some((y, x)) = stack.pop() {
                pixels.insert((y, x));
                for &(dy, dx) in neighbours(conn) {
                    let (ny, nx) = (y as isize + dy, x as isize + dx);
                    if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                        continue;
                    }
                    let (ny, nx) = (ny as usize, nx as usize);
                    if !seen[ny][nx] && mask.get(ny, nx) == class {
                        seen[ny][nx] = true;
                        stack.push((ny, nx));
                    }
                }
            }
            out.push(RefComponent { class, pixels });
        }
    }
    out
}

/// sIoU with every set materialized literally:
/// |c ∩ C(c)| / |(c ∪ C(c)) \ A(c)|.
pub fn naive_siou(c_index: usize, same: &[RefComponent], other: &[RefComponent]) -> f64 {
    let c = &same[c_index];
    let matched: PixelSet = other
        .iter()
        .filter(|o| o.class == c.class && !o.pixels.is_disjoint(&c.pixels))
        .flat_map(|o| o.pixels.iter().copied())
        .collect();
    let siblings: PixelSet = same
        .iter()
        .enumerate()
        .filter(|(i, s)| *i != c_index && s.class == c.class)
        .flat_map(|(_, s)| s.pixels.iter().copied())
        .collect();
    let inter = c.pixels.intersection(&matched).count();
    let union: PixelSet = c.pixels.union(&matched).copied().collect();
    let denom = union.difference(&siblings).count();
    inter as f64 / denom as f64
}

pub fn naive_changemap(
    s1: &SemanticMask,
    s2: &SemanticMask,
    tau: f64,
    classes: &ClassSet,
    conn: Connectivity,
) -> ChangeMask {
    let c1 = flood_fill(s1, classes, conn);
    let c2 = flood_fill(s2, classes, conn);
    let mut marked = PixelSet::new();
    for (same, other) in [(&c1, &c2), (&c2, &c1)] {
        for i in 0..same.len() {
            if naive_siou(i, same, other) < tau {
                marked.extend(same[i].pixels.iter().copied());
            }
        }
    }
    ChangeMask::from_fn(s1.width(), s1.height(), |r, c| marked.contains(&(r, c)))
}

/// Median of the clipped window by sorting; for an even count the lower
/// middle element is taken, which sends exact ties to 0.
pub fn sort_median(mask: &ChangeMask, window: usize) -> ChangeMask {
    let (h, w) = mask.dims();
    let radius = (window / 2) as isize;
    ChangeMask::from_fn(w, h, |r, c| {
        let mut values = Vec::new();
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let (y, x) = (r as isize + dy, c as isize + dx);
                if y >= 0 && x >= 0 && y < h as isize && x < w as isize {
                    values.push(mask.get(y as usize, x as usize) as u8);
                }
            }
        }
        values.sort_unstable();
        values[(values.len() - 1) / 2] == 1
    })
}

/// Binary mask made of up to `max_rects` random rectangles (so at most that many components).
pub fn random_rect_mask(rng: &mut ChaCha8Rng, size: usize, max_rects: usize, max_side: usize) -> SemanticMask {
    let n = rng.random_range(0..=max_rects);
    let rects: Vec<(usize, usize, usize, usize)> = (0..n)
        .map(|_| {
            let h = rng.random_range(1..=max_side);
            let w = rng.random_range(1..=max_side);
            (rng.random_range(0..=size - h), rng.random_range(0..=size - w), h, w)
        })
        .collect();
    rect_mask(size, &rects)
}

/// `(row, col, height, width)` rectangles painted as class 1.
pub fn rect_mask(size: usize, rects: &[(usize, usize, usize, usize)]) -> SemanticMask {
    SemanticMask::from_fn(size, size, 2, |r, c| {
        u8::from(rects.iter().any(|&(r0, c0, h, w)| r >= r0 && r < r0 + h && c >= c0 && c < c0 + w))
    })
    .unwrap()
}

/// Independent Bernoulli pixels.
pub fn random_binary(rng: &mut ChaCha8Rng, width: usize, height: usize, p: f64) -> SemanticMask {
    SemanticMask::from_fn(width, height, 2, |_, _| u8::from(rng.random_bool(p))).unwrap()
}

pub fn random_change(rng: &mut ChaCha8Rng, width: usize, height: usize, p: f64) -> ChangeMask {
    ChangeMask::from_fn(width, height, |_, _| rng.random_bool(p))
}
