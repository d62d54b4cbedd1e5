use std::path::Path;

use rayon::prelude::*;
use tempweak_core::io::{read_change, read_gray, write_change, write_gray};
use tempweak_core::raster::MAX_CLASSES;
use tempweak_core::{extract_tiles, plan_grid, stitch as stitch_tiles, SemanticMask, TileGrid};

use super::{read_text, write_file};
use crate::args::{StitchArgs, TileArgs};

pub const GRID_FILE: &str = "grid.txt";

fn tile_path(dir: &Path, k: usize) -> std::path::PathBuf {
    dir.join(format!("tile_{k:05}.png"))
}

pub fn tile(a: &TileArgs) -> anyhow::Result<()> {
    let (w, h, data) = read_gray(&a.input)?;
    // any 8-bit raster: class masks and 0/255 change maps alike
    let raster = SemanticMask::new(w, h, data, MAX_CLASSES)?;
    let grid = plan_grid(w, h, a.size, a.overlap)?;
    let tiles = extract_tiles(&raster, &grid)?;
    tiles.into_par_iter().enumerate().try_for_each(|(k, t)| {
        write_gray(&tile_path(&a.out, k), t.width(), t.height(), t.into_data())
    })?;
    write_file(&a.out.join(GRID_FILE), grid.to_text().as_bytes())?;
    log::info!("wrote {} tiles to {}", grid.len(), a.out.display());
    Ok(())
}

pub fn stitch(a: &StitchArgs) -> anyhow::Result<()> {
    let grid = TileGrid::parse(&read_text(&a.grid)?)?;
    let dir = a.tiles.as_deref().unwrap_or_else(|| a.grid.parent().unwrap_or(Path::new("")));
    let tiles = (0..grid.len())
        .into_par_iter()
        .map(|k| read_change(&tile_path(dir, k)))
        .collect::<Result<Vec<_>, _>>()?;
    write_change(&a.out, &stitch_tiles(&tiles, &grid)?)?;
    Ok(())
}
