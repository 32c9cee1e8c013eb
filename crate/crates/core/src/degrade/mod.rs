//! Degradation operators: pixel noise, Gaussian blur, JPEG-style
//! quantization and latent-space noise through a linear autoencoder.
//!
//! Every operator clamps once, at the end.

mod blur;
mod jpeg;
mod latent;
mod noise;

pub use blur::{
    gaussian_blur, gaussian_blur_periodic, gaussian_blur_periodic_unclamped, gaussian_kernel_1d,
    kernel_transfer_function,
    suppression_ratio, transfer_function, BlurParams,
};
pub use jpeg::{jpeg_cycle, quantization_table, JpegParams, STANDARD_LUMA_TABLE};
pub use latent::{
    add_latent_noise, add_latent_noise_tiled, fit_latent_codec, fit_patch_codec, read_codec,
    write_codec, LatentCodec, LatentNoiseParams,
};
pub use noise::{add_pixel_noise, add_pixel_noise_unclamped, NoiseParams};
