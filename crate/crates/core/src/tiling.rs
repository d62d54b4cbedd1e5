//! Overlapping tile grids over large rasters, and mosaicking of per-tile
//! change predictions.
//!
//! Tile origins advance by `stride = tile - overlap` along each axis; the last
//! origin is clamped to `dim - tile` so every tile lies inside the image.
//! When stitching, each output pixel is taken from the tile whose centre is
//! nearest (ties go to the lower tile index), which partitions the mosaic into
//! disjoint regions and makes stitching the exact inverse of extraction.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::raster::{ChangeMask, SemanticMask};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileGrid {
    pub width: usize,
    pub height: usize,
    pub tile: usize,
    pub overlap: usize,
    row_origins: Vec<usize>,
    col_origins: Vec<usize>,
}

/// Origins along one axis of length `dim`.
pub fn axis_origins(dim: usize, tile: usize, overlap: usize) -> Result<Vec<usize>> {
    if tile == 0 || tile > dim {
        return Err(Error::arg(format!("tile size {tile} must lie in 1..={dim}")));
    }
    if overlap >= tile {
        return Err(Error::arg(format!("overlap {overlap} must be below tile size {tile}")));
    }
    let stride = tile - overlap;
    let last = dim - tile;
    let mut origins: Vec<usize> = (0..).map(|k| k * stride).take_while(|&o| o < last).collect();
    origins.push(last);
    Ok(origins)
}

pub fn plan_grid(width: usize, height: usize, tile: usize, overlap: usize) -> Result<TileGrid> {
    Ok(TileGrid {
        width,
        height,
        tile,
        overlap,
        row_origins: axis_origins(height, tile, overlap)?,
        col_origins: axis_origins(width, tile, overlap)?,
    })
}

impl TileGrid {
    pub fn len(&self) -> usize {
        self.row_origins.len() * self.col_origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row_origins(&self) -> &[usize] {
        &self.row_origins
    }

    pub fn col_origins(&self) -> &[usize] {
        &self.col_origins
    }

    /// `(row, col)` top-left corners, row-major.
    pub fn origins(&self) -> Vec<(usize, usize)> {
        self.row_origins
            .iter()
            .flat_map(|&r| self.col_origins.iter().map(move |&c| (r, c)))
            .collect()
    }

    /// Text form: `grid W H P OVERLAP` header then one `row col` line per tile.
    pub fn to_text(&self) -> String {
        let mut out = format!("grid {} {} {} {}\n", self.width, self.height, self.tile, self.overlap);
        for (r, c) in self.origins() {
            writeln!(out, "{r} {c}").unwrap();
        }
        out
    }

    /// Parses [`TileGrid::to_text`] output; the origins must match the header's grid.
    pub fn parse(text: &str) -> Result<TileGrid> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty grid file".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let nums: Option<Vec<usize>> = fields.iter().skip(1).map(|f| f.parse().ok()).collect();
        let grid = match (fields.first(), nums.as_deref()) {
            (Some(&"grid"), Some(&[w, h, p, o])) => {
                plan_grid(w, h, p, o).map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
            }
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected `grid W H P OVERLAP`".into(),
                })
            }
        };
        let expected = grid.origins();
        let mut count = 0;
        for (i, line) in lines {
            let parsed: Option<Vec<usize>> = line.split_whitespace().map(|f| f.parse().ok()).collect();
            let origin = match parsed.as_deref() {
                Some(&[r, c]) => (r, c),
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "expected `row col`".into(),
                    })
                }
            };
            if expected.get(count) != Some(&origin) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("origin {origin:?} does not match the planned grid"),
                });
            }
            count += 1;
        }
        if count != expected.len() {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: format!("grid lists {count} origins, expected {}", expected.len()),
            });
        }
        Ok(grid)
    }

    /// For each coordinate along an axis, the index of the tile whose centre is nearest.
    fn nearest_along(origins: &[usize], tile: usize, dim: usize) -> Vec<usize> {
        // doubled coordinates keep centres integral
        let centres: Vec<i64> = origins.iter().map(|&o| (2 * o + tile) as i64 - 1).collect();
        let mut owner = Vec::with_capacity(dim);
        let mut k = 0;
        for x in 0..dim as i64 {
            let p = 2 * x;
            while k + 1 < centres.len() && (centres[k + 1] - p).abs() < (centres[k] - p).abs() {
                k += 1;
            }
            owner.push(k);
        }
        owner
    }

    /// Tile index owning each pixel in the stitched mosaic, row-major.
    pub fn owners(&self) -> Vec<usize> {
        let rows = Self::nearest_along(&self.row_origins, self.tile, self.height);
        let cols = Self::nearest_along(&self.col_origins, self.tile, self.width);
        let n_cols = self.col_origins.len();
        rows.iter()
            .flat_map(|&r| cols.iter().map(move |&c| r * n_cols + c))
            .collect()
    }
}

/// Rasters that can be cut into tiles.
pub trait Tileable: Sized {
    fn dims(&self) -> (usize, usize);
    fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Self>;
}

impl Tileable for ChangeMask {
    fn dims(&self) -> (usize, usize) {
        ChangeMask::dims(self)
    }

    fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Self> {
        ChangeMask::crop(self, row, col, height, width)
    }
}

impl Tileable for SemanticMask {
    fn dims(&self) -> (usize, usize) {
        SemanticMask::dims(self)
    }

    fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Self> {
        SemanticMask::crop(self, row, col, height, width)
    }
}

/// Cuts `raster` into the grid's tiles, in origin order.
pub fn extract_tiles<T: Tileable>(raster: &T, grid: &TileGrid) -> Result<Vec<T>> {
    if raster.dims() != (grid.height, grid.width) {
        return Err(Error::Shape {
            expected: (grid.height, grid.width),
            found: raster.dims(),
        });
    }
    grid.origins()
        .into_iter()
        .map(|(r, c)| raster.crop(r, c, grid.tile, grid.tile))
        .collect()
}

/// Reassembles per-tile change maps into a mosaic using the nearest-centre rule.
pub fn stitch(tiles: &[ChangeMask], grid: &TileGrid) -> Result<ChangeMask> {
    if tiles.len() != grid.len() {
        return Err(Error::arg(format!("expected {} tiles, got {}", grid.len(), tiles.len())));
    }
    if let Some(bad) = tiles.iter().find(|t| t.dims() != (grid.tile, grid.tile)) {
        return Err(Error::Shape {
            expected: (grid.tile, grid.tile),
            found: bad.dims(),
        });
    }
    let origins = grid.origins();
    let owners = grid.owners();
    let mut i = 0;
    Ok(ChangeMask::from_fn(grid.width, grid.height, |r, c| {
        let k = owners[i];
        i += 1;
        let (r0, c0) = origins[k];
        tiles[k].get(r - r0, c - c0)
    }))
}
