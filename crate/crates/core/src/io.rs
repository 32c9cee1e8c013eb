//! 8-bit PNG and binary PGM/PPM I/O.
//!
//! Samples are dequantized as `v/255` on read and quantized as
//! `round(v·255)` on write. Nothing inside the toolkit quantizes otherwise.

use std::path::Path;

use image::{imageops::FilterType, DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::image::Image;

pub const SUPPORTED_EXTENSIONS: [&str; 3] = ["png", "pgm", "ppm"];

pub fn is_supported(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| SUPPORTED_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

pub fn read_image(path: &Path) -> Result<Image> {
    let dynamic = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(from_dynamic(&dynamic))
}

/// Reads, center-crops to the target aspect ratio and resamples to exactly
/// `width × height` (triangle filter, applied on the 8-bit source).
pub fn read_image_resized(path: &Path, width: usize, height: usize) -> Result<Image> {
    let dynamic = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let (w, h) = (dynamic.width() as u64, dynamic.height() as u64);
    let (tw, th) = (width as u64, height as u64);
    // largest window with aspect tw:th
    let (cw, ch) = if w * th > h * tw {
        ((h * tw / th).max(1), h)
    } else {
        (w, (w * th / tw).max(1))
    };
    let cropped = dynamic.crop_imm(((w - cw) / 2) as u32, ((h - ch) / 2) as u32, cw as u32, ch as u32);
    let resized = if cw == tw && ch == th {
        cropped
    } else {
        cropped.resize_exact(width as u32, height as u32, FilterType::Triangle)
    };
    Ok(from_dynamic(&resized))
}

fn from_dynamic(dynamic: &DynamicImage) -> Image {
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    if dynamic.color().has_color() {
        let rgb = dynamic.to_rgb8();
        let mut data = vec![0.0; w * h * 3];
        for (i, px) in rgb.pixels().enumerate() {
            for c in 0..3 {
                data[c * w * h + i] = px.0[c] as f64 / 255.0;
            }
        }
        Image::from_raw(w, h, 3, data)
    } else {
        let gray = dynamic.to_luma8();
        Image::from_raw(w, h, 1, gray.pixels().map(|p| p.0[0] as f64 / 255.0).collect())
    }
}

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes PNG, PGM or PPM depending on the extension.
pub fn write_image(img: &Image, path: &Path) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let format = match ext.as_str() {
        "png" => ImageFormat::Png,
        "pgm" | "ppm" => ImageFormat::Pnm,
        other => return Err(Error::param(format!("unsupported output extension '{other}'"))),
    };
    let (w, h) = (img.width() as u32, img.height() as u32);
    let n = img.len();
    let dynamic = if img.channels() == 1 && ext != "ppm" {
        let buf: Vec<u8> = img.plane(0).iter().map(|&v| quantize(v)).collect();
        DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, buf).expect("buffer sized"))
    } else {
        let mut buf = Vec::with_capacity(n * 3);
        for i in 0..n {
            for c in 0..3 {
                let p = if img.channels() == 1 { 0 } else { c };
                buf.push(quantize(img.plane(p)[i]));
            }
        }
        DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, buf).expect("buffer sized"))
    };
    dynamic.save_with_format(path, format).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::Io(io),
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })
}

/// Rounds every sample to the nearest 8-bit level, as a write/read cycle would.
pub fn quantize_8bit(img: &Image) -> Image {
    img.map(|v| quantize(v) as f64 / 255.0)
}
