//! PNG encoding of masks.
//!
//! Semantic masks are single-channel 8-bit PNGs whose pixel value is the class
//! index. Change masks are single-channel 8-bit PNGs with 0 = unchanged and
//! 255 = changed.

use std::fs;
use std::path::Path;

use image::{GrayImage, ImageReader, RgbImage};

use crate::error::{Error, Result};
use crate::raster::{ChangeMask, SemanticMask};

pub const CHANGED: u8 = 255;

fn image_error(path: &Path, err: image::ImageError) -> Error {
    match err {
        image::ImageError::IoError(source) => Error::io(path, source),
        other => Error::Image {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// Reads a single-channel 8-bit PNG as raw bytes, returning `(width, height, data)`.
pub fn read_gray(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|e| image_error(path, e))?;
    if img.color() != image::ColorType::L8 {
        return Err(Error::InvalidRaster {
            path: path.to_path_buf(),
            message: format!("expected single-channel 8-bit image, found {:?}", img.color()),
        });
    }
    let gray = img.into_luma8();
    let (w, h) = gray.dimensions();
    Ok((w as usize, h as usize, gray.into_raw()))
}

pub fn write_gray(path: &Path, width: usize, height: usize, data: Vec<u8>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let img = GrayImage::from_raw(width as u32, height as u32, data).ok_or_else(|| {
        Error::InvalidRaster {
            path: path.to_path_buf(),
            message: "buffer does not match dimensions".into(),
        }
    })?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| image_error(path, e))
}

/// Reads a class-index PNG and checks it against `class_count`.
pub fn read_mask(
    path: &Path,
    class_count: u16,
    background: u8,
    resolution: Option<f64>,
) -> Result<SemanticMask> {
    let (w, h, data) = read_gray(path)?;
    let mut mask = SemanticMask::new(w, h, data, class_count)
        .and_then(|m| m.with_background(background))
        .map_err(|e| Error::InvalidRaster {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    if let Some(res) = resolution {
        mask = mask.with_resolution(res)?;
    }
    Ok(mask)
}

pub fn write_mask(path: &Path, mask: &SemanticMask) -> Result<()> {
    write_gray(path, mask.width(), mask.height(), mask.data().to_vec())
}

/// Reads a 0/255 change PNG; any other value is rejected.
pub fn read_change(path: &Path) -> Result<ChangeMask> {
    let (w, h, data) = read_gray(path)?;
    let mut bits = Vec::with_capacity(data.len());
    for (i, v) in data.into_iter().enumerate() {
        match v {
            0 => bits.push(0),
            CHANGED => bits.push(1),
            other => {
                return Err(Error::InvalidRaster {
                    path: path.to_path_buf(),
                    message: format!(
                        "pixel ({}, {}) has value {other}, expected 0 or 255",
                        i / w.max(1),
                        i % w.max(1)
                    ),
                })
            }
        }
    }
    ChangeMask::new(w, h, bits)
}

pub fn write_change(path: &Path, mask: &ChangeMask) -> Result<()> {
    let data = mask.data().iter().map(|&v| v * CHANGED).collect();
    write_gray(path, mask.width(), mask.height(), data)
}

pub fn write_rgb(path: &Path, width: usize, height: usize, data: Vec<u8>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let img = RgbImage::from_raw(width as u32, height as u32, data).ok_or_else(|| {
        Error::InvalidRaster {
            path: path.to_path_buf(),
            message: "buffer does not match dimensions".into(),
        }
    })?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| image_error(path, e))
}
