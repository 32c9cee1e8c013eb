//! Baseline-JPEG quantization cycle on luma.
//!
//! Luma is scaled to `[0, 255]`, level-shifted by 128, transformed in 8×8
//! blocks, quantized with the IJG-scaled standard luminance table,
//! dequantized and inverted. Entropy coding is lossless and skipped. Chroma
//! passes through.

use crate::dct::dct8x8_blocks;
use crate::error::{Error, Result};
use crate::image::Image;

/// ITU T.81 Annex K luminance table, row-major (`v*8 + u`).
#[rustfmt::skip]
pub const STANDARD_LUMA_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JpegParams {
    quality: u8,
}

impl JpegParams {
    pub fn new(quality: u32) -> Result<Self> {
        if !(1..=100).contains(&quality) {
            return Err(Error::param(format!("JPEG quality {quality} outside 1..=100")));
        }
        Ok(JpegParams {
            quality: quality as u8,
        })
    }

    pub fn quality(&self) -> u32 {
        self.quality as u32
    }
}

pub fn quantization_table(p: &JpegParams) -> [u16; 64] {
    let q = p.quality as u32;
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut out = [0u16; 64];
    for (o, &base) in out.iter_mut().zip(&STANDARD_LUMA_TABLE) {
        *o = ((base as u32 * scale + 50) / 100).clamp(1, 255) as u16;
    }
    out
}

pub fn jpeg_cycle(img: &Image, p: &JpegParams) -> Image {
    let table = quantization_table(p);
    let luma = img.luma();
    let shifted = luma.map(|v| v * 255.0 - 128.0);
    let mut coeffs = dct8x8_blocks(&shifted);
    for block in coeffs.blocks_mut() {
        for (c, &q) in block.iter_mut().zip(&table) {
            let q = q as f64;
            *c = (*c / q).round() * q;
        }
    }
    let decoded = coeffs.inverse().map(|v| (v + 128.0) / 255.0);
    img.with_luma(&decoded)
        .expect("luma geometry preserved")
        .clamped()
}
