//! Orthonormal 8×8 type-II DCT over image blocks.
//!
//! Used by the JPEG quantization cycle and the spread-spectrum codec. Planes
//! whose sides are not multiples of eight are mirror-padded first; the
//! original size is kept so [`BlockCoefficients::inverse`] strips the padding.

use std::sync::OnceLock;

use crate::image::Image;

pub const BLOCK: usize = 8;

/// `C[u][x] = c(u)·cos((2x+1)uπ/16)`, with `c(0) = √(1/8)` and `c(u) = ½` otherwise.
pub fn dct_matrix() -> &'static [[f64; BLOCK]; BLOCK] {
    static MATRIX: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    MATRIX.get_or_init(|| {
        let mut m = [[0.0; BLOCK]; BLOCK];
        for (u, row) in m.iter_mut().enumerate() {
            let cu = if u == 0 { (1.0 / 8.0f64).sqrt() } else { 0.5 };
            for (x, v) in row.iter_mut().enumerate() {
                *v = cu * (((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI) / 16.0).cos();
            }
        }
        m
    })
}

/// Forward 2-D DCT of one block stored row-major (`block[y*8 + x]`).
/// Output index is `v*8 + u` with `v` the vertical and `u` the horizontal frequency.
pub fn forward_block(block: &[f64; 64]) -> [f64; 64] {
    let c = dct_matrix();
    let mut tmp = [0.0; 64];
    // rows: tmp[y][u] = Σ_x C[u][x]·b[y][x]
    for y in 0..BLOCK {
        for u in 0..BLOCK {
            let mut acc = 0.0;
            for x in 0..BLOCK {
                acc += c[u][x] * block[y * BLOCK + x];
            }
            tmp[y * BLOCK + u] = acc;
        }
    }
    let mut out = [0.0; 64];
    for v in 0..BLOCK {
        for u in 0..BLOCK {
            let mut acc = 0.0;
            for y in 0..BLOCK {
                acc += c[v][y] * tmp[y * BLOCK + u];
            }
            out[v * BLOCK + u] = acc;
        }
    }
    out
}

pub fn inverse_block(coeffs: &[f64; 64]) -> [f64; 64] {
    let c = dct_matrix();
    let mut tmp = [0.0; 64];
    for v in 0..BLOCK {
        for x in 0..BLOCK {
            let mut acc = 0.0;
            for u in 0..BLOCK {
                acc += c[u][x] * coeffs[v * BLOCK + u];
            }
            tmp[v * BLOCK + x] = acc;
        }
    }
    let mut out = [0.0; 64];
    for y in 0..BLOCK {
        for x in 0..BLOCK {
            let mut acc = 0.0;
            for v in 0..BLOCK {
                acc += c[v][y] * tmp[v * BLOCK + x];
            }
            out[y * BLOCK + x] = acc;
        }
    }
    out
}

/// Block DCT of a single plane.
#[derive(Clone, Debug)]
pub struct BlockCoefficients {
    width: usize,
    height: usize,
    blocks_x: usize,
    blocks_y: usize,
    blocks: Vec<[f64; 64]>,
}

impl BlockCoefficients {
    /// Original (unpadded) width and height.
    pub fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn block_grid(&self) -> (usize, usize) {
        (self.blocks_x, self.blocks_y)
    }

    pub fn blocks(&self) -> &[[f64; 64]] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [[f64; 64]] {
        &mut self.blocks
    }

    pub fn inverse(&self) -> Image {
        let pw = self.blocks_x * BLOCK;
        let ph = self.blocks_y * BLOCK;
        let mut data = vec![0.0; pw * ph];
        for by in 0..self.blocks_y {
            for bx in 0..self.blocks_x {
                let pixels = inverse_block(&self.blocks[by * self.blocks_x + bx]);
                for y in 0..BLOCK {
                    let row = (by * BLOCK + y) * pw + bx * BLOCK;
                    data[row..row + BLOCK].copy_from_slice(&pixels[y * BLOCK..(y + 1) * BLOCK]);
                }
            }
        }
        Image::from_raw(pw, ph, 1, data).crop(self.width, self.height)
    }
}

/// Block DCT of channel 0 of `plane` (callers pass luma for color images).
pub fn dct8x8_blocks(plane: &Image) -> BlockCoefficients {
    let padded = plane.channel(0).mirror_pad_to_multiple(BLOCK);
    let pw = padded.width();
    let blocks_x = pw / BLOCK;
    let blocks_y = padded.height() / BLOCK;
    let src = padded.plane(0);
    let mut blocks = Vec::with_capacity(blocks_x * blocks_y);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let mut b = [0.0; 64];
            for y in 0..BLOCK {
                let row = (by * BLOCK + y) * pw + bx * BLOCK;
                b[y * BLOCK..(y + 1) * BLOCK].copy_from_slice(&src[row..row + BLOCK]);
            }
            blocks.push(forward_block(&b));
        }
    }
    BlockCoefficients {
        width: plane.width(),
        height: plane.height(),
        blocks_x,
        blocks_y,
        blocks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_block(seed: u64) -> [f64; 64] {
        let mut r = rng::seeded(seed);
        let mut b = [0.0; 64];
        for v in &mut b {
            *v = r.random::<f64>();
        }
        b
    }

    #[test]
    fn constant_block_is_dc_only() {
        let out = forward_block(&[0.3; 64]);
        assert!((out[0] - 8.0 * 0.3).abs() < 1e-12);
        assert!(out[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn round_trip_block() {
        let b = random_block(5);
        let back = inverse_block(&forward_block(&b));
        for (a, e) in back.iter().zip(&b) {
            assert!((a - e).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_explicit_kronecker_matrix() {
        // Oracle: coefficient (v,u) = Σ_{y,x} C[v][y]·C[u][x]·b[y][x] as one 64×64 product.
        let c = dct_matrix();
        let mut big = vec![[0.0; 64]; 64];
        for v in 0..8 {
            for u in 0..8 {
                for y in 0..8 {
                    for x in 0..8 {
                        big[v * 8 + u][y * 8 + x] = c[v][y] * c[u][x];
                    }
                }
            }
        }
        let b = random_block(9);
        let fast = forward_block(&b);
        for i in 0..64 {
            let slow: f64 = (0..64).map(|j| big[i][j] * b[j]).sum();
            assert!((fast[i] - slow).abs() < 1e-12);
        }
    }

    #[test]
    fn padded_plane_round_trip() {
        let mut r = rng::seeded(2);
        let img = Image::from_fn(13, 10, |_, _| r.random::<f64>());
        let coeffs = dct8x8_blocks(&img);
        assert_eq!(coeffs.block_grid(), (2, 2));
        let back = coeffs.inverse();
        assert_eq!((back.width(), back.height()), (13, 10));
        for (a, e) in back.data().iter().zip(img.data()) {
            assert!((a - e).abs() < 1e-10);
        }
    }
}
