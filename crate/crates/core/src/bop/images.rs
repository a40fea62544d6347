use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use png::{BitDepth, ColorType, Compression, Decoder, Encoder};

use super::writer::write_atomic;
use super::BopError;
use crate::geometry::{BinaryMask, DepthImage};

/// Depth PNG units per millimeter: stored values are tenths of a millimeter.
pub const DEPTH_SCALE_MM: f64 = 0.1;

fn encode(width: usize, height: usize, depth: BitDepth, data: &[u8]) -> Result<Vec<u8>, png::EncodingError> {
    let mut out = Vec::new();
    {
        let mut enc = Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(ColorType::Grayscale);
        enc.set_depth(depth);
        enc.set_compression(Compression::Fast);
        enc.write_header()?.write_image_data(data)?;
    }
    Ok(out)
}

fn png_error(path: &Path, e: impl std::fmt::Display) -> BopError {
    BopError::format(path, e.to_string())
}

/// Writes a 16-bit grayscale PNG with depth in units of [`DEPTH_SCALE_MM`].
pub fn write_depth_png(path: &Path, depth: &DepthImage) -> Result<(), BopError> {
    let w = depth.width();
    let mut data = Vec::with_capacity(depth.values().len() * 2);
    for (i, z) in depth.values().iter().enumerate() {
        let units = (z * 1000.0 / DEPTH_SCALE_MM).round();
        if units > u16::MAX as f64 {
            return Err(BopError::DepthOutOfRange {
                value: *z,
                u: i % w,
                v: i / w,
            });
        }
        data.extend_from_slice(&(units as u16).to_be_bytes());
    }
    let bytes = encode(w, depth.height(), BitDepth::Sixteen, &data).map_err(|e| png_error(path, e))?;
    write_atomic(path, &bytes)
}

/// Writes an 8-bit mask PNG with 255 for set pixels.
pub fn write_mask_png(path: &Path, mask: &BinaryMask) -> Result<(), BopError> {
    let data: Vec<u8> = mask.values().iter().map(|b| if *b { 255 } else { 0 }).collect();
    let bytes = encode(mask.width(), mask.height(), BitDepth::Eight, &data).map_err(|e| png_error(path, e))?;
    write_atomic(path, &bytes)
}

fn read_gray(path: &Path) -> Result<(usize, usize, BitDepth, Vec<u8>), BopError> {
    let file = File::open(path).map_err(|e| BopError::io(path, e))?;
    let mut reader = Decoder::new(BufReader::new(file)).read_info().map_err(|e| png_error(path, e))?;
    let info = reader.info();
    let (w, h, depth, color) = (info.width as usize, info.height as usize, info.bit_depth, info.color_type);
    if color != ColorType::Grayscale {
        return Err(BopError::format(path, format!("expected a grayscale PNG, found {color:?}")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| BopError::format(path, "image too large"))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| png_error(path, e))?;
    buf.truncate(frame.buffer_size());
    Ok((w, h, depth, buf))
}

/// Reads a depth PNG written by [`write_depth_png`], returning meters.
pub fn read_depth_png(path: &Path) -> Result<DepthImage, BopError> {
    let (w, h, depth, buf) = read_gray(path)?;
    if depth != BitDepth::Sixteen {
        return Err(BopError::format(path, format!("expected 16-bit depth, found {depth:?}")));
    }
    let values = buf
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 * DEPTH_SCALE_MM / 1000.0)
        .collect();
    Ok(DepthImage::new(w, h, values)?)
}

/// Reads an 8-bit mask PNG; any non-zero pixel is set.
pub fn read_mask_png(path: &Path) -> Result<BinaryMask, BopError> {
    let (w, h, depth, buf) = read_gray(path)?;
    if depth != BitDepth::Eight {
        return Err(BopError::format(path, format!("expected an 8-bit mask, found {depth:?}")));
    }
    Ok(BinaryMask::new(w, h, buf.iter().map(|v| *v != 0).collect())?)
}
