//! Real-valued raster images.
//!
//! Samples live on the `[0, 1]` scale and are stored planar: each channel is
//! a contiguous row-major `width × height` plane. Color images carry three
//! channels (RGB); spectral analysis and the codecs act on BT.601 luma and
//! move all three channels by the same luma delta, which leaves chroma
//! untouched.

use crate::error::{Error, Result};

pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!("image size {width}x{height} is empty")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::param(format!("{channels} channels; expected 1 or 3")));
        }
        if data.len() != width * height * channels {
            return Err(Error::param(format!(
                "{} samples for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("sample {i} is not finite")));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds a single-channel image without validation. Callers guarantee
    /// the length and finiteness invariants.
    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Image {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        assert!(channels == 1 || channels == 3);
        Image::from_raw(width, height, channels, vec![value; width * height * channels])
    }

    /// Single-channel image from a function of `(x, y)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Image::from_raw(width, height, 1, data)
    }

    pub fn from_channels(planes: &[Image]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::param("no channels given"))?;
        let mut data = Vec::with_capacity(first.len() * planes.len());
        for p in planes {
            if p.channels != 1 || p.width != first.width || p.height != first.height {
                return Err(Error::DimensionMismatch {
                    left: first.shape_string(),
                    right: p.shape_string(),
                });
            }
            data.extend_from_slice(&p.data);
        }
        Image::new(first.width, first.height, planes.len(), data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Pixels per channel.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[c * self.len() + y * self.width + x]
    }

    pub fn channel(&self, c: usize) -> Image {
        Image::from_raw(self.width, self.height, 1, self.plane(c).to_vec())
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn ensure_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.shape_string(),
                right: other.shape_string(),
            })
        }
    }

    pub fn ensure_same_size(&self, other: &Image) -> Result<()> {
        if self.width == other.width && self.height == other.height {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: format!("{}x{}", self.width, self.height),
                right: format!("{}x{}", other.width, other.height),
            })
        }
    }

    /// BT.601 luma as a single-channel image. A grayscale image is its own luma.
    pub fn luma(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let n = self.len();
        let (r, g, b) = (self.plane(0), self.plane(1), self.plane(2));
        let data = (0..n)
            .map(|i| LUMA_WEIGHTS[0] * r[i] + LUMA_WEIGHTS[1] * g[i] + LUMA_WEIGHTS[2] * b[i])
            .collect();
        Image::from_raw(self.width, self.height, 1, data)
    }

    /// Replaces the luma of `self` by `luma`, shifting every channel by the
    /// same per-pixel delta. No clamping.
    pub fn with_luma(&self, luma: &Image) -> Result<Image> {
        self.ensure_same_size(luma)?;
        if luma.channels != 1 {
            return Err(Error::param("luma must be single-channel"));
        }
        if self.channels == 1 {
            return Ok(luma.clone());
        }
        let old = self.luma();
        let mut out = self.clone();
        for c in 0..out.channels {
            for (i, v) in out.plane_mut(c).iter_mut().enumerate() {
                *v += luma.data[i] - old.data[i];
            }
        }
        Ok(out)
    }

    /// Applies `f` to each channel plane independently.
    pub fn map_channels(&self, mut f: impl FnMut(&Image) -> Result<Image>) -> Result<Image> {
        if self.channels == 1 {
            return f(self);
        }
        let planes = (0..self.channels)
            .map(|c| f(&self.channel(c)))
            .collect::<Result<Vec<_>>>()?;
        Image::from_channels(&planes)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_raw(
            self.width,
            self.height,
            self.channels,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Clamps every sample into `[0, 1]`, returning how many samples moved.
    pub fn clamp_in_place(&mut self) -> usize {
        let mut moved = 0;
        for v in &mut self.data {
            if *v < 0.0 {
                *v = 0.0;
                moved += 1;
            } else if *v > 1.0 {
                *v = 1.0;
                moved += 1;
            }
        }
        moved
    }

    pub fn clamped(mut self) -> Image {
        self.clamp_in_place();
        self
    }

    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
        self.ensure_same_shape(other)?;
        Ok(Image::from_raw(
            self.width,
            self.height,
            self.channels,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Image) -> Result<Image> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Samples at integer offsets with half-sample symmetric reflection at the
    /// borders (`x[-1] = x[0]`), folded with period `2·size` so any offset is valid.
    pub fn get_mirrored(&self, x: isize, y: isize, c: usize) -> f64 {
        let xi = mirror_index(x, self.width);
        let yi = mirror_index(y, self.height);
        self.get(xi, yi, c)
    }

    /// Extends each channel by symmetric reflection so that both sides become
    /// multiples of `multiple`.
    pub fn mirror_pad_to_multiple(&self, multiple: usize) -> Image {
        let pw = self.width.div_ceil(multiple) * multiple;
        let ph = self.height.div_ceil(multiple) * multiple;
        self.mirror_pad(pw, ph)
    }

    /// Extends to `width × height` (each ≥ the current size) by symmetric reflection.
    pub fn mirror_pad(&self, width: usize, height: usize) -> Image {
        assert!(width >= self.width && height >= self.height);
        if width == self.width && height == self.height {
            return self.clone();
        }
        let mut data = Vec::with_capacity(width * height * self.channels);
        for c in 0..self.channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(self.get_mirrored(x as isize, y as isize, c));
                }
            }
        }
        Image::from_raw(width, height, self.channels, data)
    }

    /// Top-left `width × height` window.
    pub fn crop(&self, width: usize, height: usize) -> Image {
        assert!(width <= self.width && height <= self.height);
        if width == self.width && height == self.height {
            return self.clone();
        }
        let mut data = Vec::with_capacity(width * height * self.channels);
        for c in 0..self.channels {
            let p = self.plane(c);
            for y in 0..height {
                data.extend_from_slice(&p[y * self.width..y * self.width + width]);
            }
        }
        Image::from_raw(width, height, self.channels, data)
    }
}

pub(crate) fn mirror_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}
