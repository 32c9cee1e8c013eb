//! Linear autoencoder: `E(x) = Vᵀ(x − μ)`, `D(z) = μ + Vz`.
//!
//! `V` holds the top-`d` principal directions of a corpus of flattened luma
//! planes. Its columns are orthonormal, so the decoder Jacobian is `V` and
//! `Tr(J_D J_Dᵀ) = d`; latent noise `ε ~ N(0, σ²I_d)` therefore perturbs the
//! decoded image by exactly `σ²·d` in expected squared norm.
//!
//! Binary layout written by [`write_codec`], all little-endian:
//!
//! ```text
//! b"WMLC"  u32 version=1  u32 width  u32 height  u32 d
//! f64 × (width·height)        mean
//! f64 × (width·height·d)      basis, column-major
//! ```
//!
//! A `<path>.txt` sidecar records how the codec was fitted.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng;

const MAGIC: &[u8; 4] = b"WMLC";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct LatentCodec {
    width: usize,
    height: usize,
    dim: usize,
    mean: Vec<f64>,
    /// `width·height × dim`, column-major.
    basis: Vec<f64>,
    provenance: String,
}

impl LatentCodec {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis_column(&self, j: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.basis[j * n..(j + 1) * n]
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn encode_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.mean.len());
        (0..self.dim)
            .map(|j| {
                self.basis_column(j)
                    .iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(v, (a, m))| v * (a - m))
                    .sum()
            })
            .collect()
    }

    pub fn decode_vec(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim);
        let mut out = self.mean.clone();
        for (j, &zj) in z.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.basis_column(j)) {
                *o += zj * v;
            }
        }
        out
    }

    fn check_geometry(&self, img: &Image) -> Result<()> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::DimensionMismatch {
                left: format!("codec {}x{}", self.width, self.height),
                right: format!("image {}x{}", img.width(), img.height()),
            });
        }
        Ok(())
    }

    /// Latent code of the image luma.
    pub fn encode(&self, img: &Image) -> Result<Vec<f64>> {
        self.check_geometry(img)?;
        Ok(self.encode_vec(img.luma().plane(0)))
    }

    /// Decoded luma plane, unclamped.
    pub fn decode(&self, z: &[f64]) -> Image {
        Image::from_raw(self.width, self.height, 1, self.decode_vec(z))
    }

    /// `D(E(x))`, unclamped luma.
    pub fn reconstruct(&self, img: &Image) -> Result<Image> {
        Ok(self.decode(&self.encode(img)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatentNoiseParams {
    /// Standard deviation of each latent coordinate.
    pub sigma: f64,
    pub seed: u64,
}

/// Fits a codec to the luma planes of `corpus` (uniform size, at least `d` images).
pub fn fit_latent_codec(corpus: &[Image], d: usize) -> Result<LatentCodec> {
    let first = corpus.first().ok_or(Error::InsufficientCorpus { got: 0, needed: d.max(1) })?;
    let (w, h) = (first.width(), first.height());
    for img in corpus {
        first.ensure_same_size(img)?;
    }
    let vectors: Vec<Vec<f64>> = corpus.iter().map(|img| img.luma().into_data()).collect();
    let mut codec = fit_vectors(&vectors, w, h, d)?;
    codec.provenance = format!(
        "source = image corpus\nimages = {}\n{}",
        corpus.len(),
        codec.provenance
    );
    Ok(codec)
}

/// Fits a `patch × patch` codec to overlapping tiles (stride `patch/2`) of
/// one image's mirror-padded luma.
pub fn fit_patch_codec(img: &Image, patch: usize, d: usize) -> Result<LatentCodec> {
    if patch == 0 {
        return Err(Error::param("patch size must be >= 1"));
    }
    let luma = img.luma().mirror_pad_to_multiple(patch);
    let stride = (patch / 2).max(1);
    let (w, h) = (luma.width(), luma.height());
    let mut vectors = Vec::new();
    let mut y = 0;
    while y + patch <= h {
        let mut x = 0;
        while x + patch <= w {
            let mut v = Vec::with_capacity(patch * patch);
            for j in 0..patch {
                v.extend_from_slice(&luma.plane(0)[(y + j) * w + x..(y + j) * w + x + patch]);
            }
            vectors.push(v);
            x += stride;
        }
        y += stride;
    }
    let mut codec = fit_vectors(&vectors, patch, patch, d)?;
    codec.provenance = format!(
        "source = patches of {}x{} image\npatch = {patch}\nstride = {stride}\npatches = {}\n{}",
        img.width(),
        img.height(),
        vectors.len(),
        codec.provenance
    );
    Ok(codec)
}

fn fit_vectors(vectors: &[Vec<f64>], width: usize, height: usize, d: usize) -> Result<LatentCodec> {
    let n = vectors.len();
    let dims = width * height;
    if d == 0 {
        return Err(Error::param("latent dimension must be >= 1"));
    }
    if n < d {
        return Err(Error::InsufficientCorpus { got: n, needed: d });
    }
    if d > dims {
        return Err(Error::param(format!("latent dimension {d} exceeds data dimension {dims}")));
    }
    let mut mean = vec![0.0; dims];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    // rows = samples
    let centered = DMatrix::from_fn(n, dims, |i, j| vectors[i][j] - mean[j]);

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut eigenvalues: Vec<f64> = Vec::with_capacity(d);
    if n >= dims {
        let cov = centered.transpose() * &centered;
        let eig = SymmetricEigen::new(cov);
        for idx in descending(eig.eigenvalues.as_slice()).into_iter().take(d) {
            eigenvalues.push(eig.eigenvalues[idx]);
            columns.push(eig.eigenvectors.column(idx).iter().copied().collect());
        }
    } else {
        // Gram trick: principal directions are Xᵀu/√λ for eigenpairs of XXᵀ.
        let gram = &centered * centered.transpose();
        let eig = SymmetricEigen::new(gram);
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        for idx in descending(eig.eigenvalues.as_slice()).into_iter().take(d) {
            let lambda = eig.eigenvalues[idx];
            eigenvalues.push(lambda.max(0.0));
            if lambda > 1e-12 * lmax.max(f64::MIN_POSITIVE) {
                let v = centered.transpose() * eig.eigenvectors.column(idx);
                let s = lambda.sqrt();
                columns.push(v.iter().map(|x| x / s).collect());
            } else {
                columns.push(vec![0.0; dims]);
            }
        }
    }
    let total_variance: f64 = centered.iter().map(|x| x * x).sum();
    orthonormalize(&mut columns, dims);
    for col in &mut columns {
        // sign convention: largest-magnitude entry positive
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let retained: f64 = eigenvalues.iter().sum();
    let provenance = format!(
        "geometry = {width}x{height}\nd = {d}\nsamples = {n}\nretained_variance_fraction = {:.6}\n",
        if total_variance > 0.0 { retained / total_variance } else { 1.0 }
    );
    Ok(LatentCodec {
        width,
        height,
        dim: d,
        mean,
        basis: columns.into_iter().flatten().collect(),
        provenance,
    })
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Modified Gram–Schmidt, run twice. Degenerate columns are replaced by the
/// first standard basis vector that is not already spanned.
fn orthonormalize(columns: &mut [Vec<f64>], dims: usize) {
    let mut next_unit = 0;
    for j in 0..columns.len() {
        for _pass in 0..2 {
            for i in 0..j {
                let dot: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
                let (head, tail) = columns.split_at_mut(j);
                for (t, h) in tail[0].iter_mut().zip(&head[i]) {
                    *t -= dot * h;
                }
            }
        }
        let mut norm = columns[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        while norm < 1e-8 {
            assert!(next_unit < dims, "cannot complete an orthonormal basis");
            let mut e = vec![0.0; dims];
            e[next_unit] = 1.0;
            next_unit += 1;
            for _pass in 0..2 {
                for col in &columns[..j] {
                    let dot: f64 = col.iter().zip(&e).map(|(a, b)| a * b).sum();
                    for (t, h) in e.iter_mut().zip(col) {
                        *t -= dot * h;
                    }
                }
            }
            norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            columns[j] = e;
        }
        columns[j].iter_mut().for_each(|v| *v /= norm);
    }
}

/// `I' = D(E(I) + ε)` with `ε ~ N(0, σ²I_d)`, clamped. The codec must match
/// the image size; chroma follows the luma delta.
pub fn add_latent_noise(img: &Image, codec: &LatentCodec, p: &LatentNoiseParams) -> Result<Image> {
    let z = codec.encode(img)?;
    let mut r = rng::seeded(p.seed);
    let noisy: Vec<f64> = z
        .iter()
        .map(|v| v + p.sigma * rng::standard_normal(&mut r))
        .collect();
    let luma = codec.decode(&noisy);
    Ok(img.with_luma(&luma)?.clamped())
}

/// Applies the codec independently to each non-overlapping tile of the
/// mirror-padded luma, drawing tile noise in raster order from one stream.
pub fn add_latent_noise_tiled(img: &Image, codec: &LatentCodec, p: &LatentNoiseParams) -> Result<Image> {
    let (tw, th) = (codec.width, codec.height);
    let luma = img.luma();
    let pw = img.width().div_ceil(tw) * tw;
    let ph = img.height().div_ceil(th) * th;
    let padded = luma.mirror_pad(pw, ph);
    let src = padded.plane(0);
    let mut out = vec![0.0; pw * ph];
    let mut r = rng::seeded(p.seed);
    let mut tile = vec![0.0; tw * th];
    for by in 0..ph / th {
        for bx in 0..pw / tw {
            for j in 0..th {
                let row = (by * th + j) * pw + bx * tw;
                tile[j * tw..(j + 1) * tw].copy_from_slice(&src[row..row + tw]);
            }
            let mut z = codec.encode_vec(&tile);
            for v in &mut z {
                *v += p.sigma * rng::standard_normal(&mut r);
            }
            let dec = codec.decode_vec(&z);
            for j in 0..th {
                let row = (by * th + j) * pw + bx * tw;
                out[row..row + tw].copy_from_slice(&dec[j * tw..(j + 1) * tw]);
            }
        }
    }
    let decoded = Image::from_raw(pw, ph, 1, out).crop(img.width(), img.height());
    Ok(img.with_luma(&decoded)?.clamped())
}

pub fn write_codec(codec: &LatentCodec, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(20 + 8 * (codec.mean.len() + codec.basis.len()));
    buf.extend_from_slice(MAGIC);
    for v in [VERSION, codec.width as u32, codec.height as u32, codec.dim as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in codec.mean.iter().chain(&codec.basis) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf)?;
    fs::write(sidecar_path(path), &codec.provenance)?;
    Ok(())
}

pub fn read_codec(path: &Path) -> Result<LatentCodec> {
    let buf = fs::read(path)?;
    if buf.len() < 20 || &buf[..4] != MAGIC {
        return Err(Error::Parse(format!("{} is not a latent codec file", path.display())));
    }
    let word = |i: usize| u32::from_le_bytes(buf[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    if word(0) != VERSION as usize {
        return Err(Error::Parse(format!("unsupported codec version {}", word(0))));
    }
    let (width, height, dim) = (word(1), word(2), word(3));
    let n = width * height;
    let expected = 20 + 8 * (n + n * dim);
    if buf.len() != expected {
        return Err(Error::Parse(format!(
            "codec file has {} bytes, header implies {expected}",
            buf.len()
        )));
    }
    let floats: Vec<f64> = buf[20..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let provenance = fs::read_to_string(sidecar_path(path)).unwrap_or_default();
    Ok(LatentCodec {
        width,
        height,
        dim,
        mean: floats[..n].to_vec(),
        basis: floats[n..].to_vec(),
        provenance,
    })
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}
