use nalgebra::{DMatrix, DVector};
use rand::Rng;

use wmbench_core::attack::{builtin, run_attack};
use wmbench_core::degrade::{gaussian_blur, BlurParams};
use wmbench_core::metrics::psnr;
use wmbench_core::restore::*;
use wmbench_core::rng;
use wmbench_core::synth::{synthetic_corpus, SynthParams};
use wmbench_core::watermark::{detect_additive, embed_additive, AdditiveKey, DEFAULT_ADDITIVE_STRENGTH};
use wmbench_core::Image;

/// Solves `(I + βDᵀD)x = y` densely, `D` the periodic forward-difference gradient.
fn dense_tikhonov(y: &Image, beta: f64) -> Vec<f64> {
    let (w, h) = (y.width(), y.height());
    let n = w * h;
    let mut a = DMatrix::<f64>::identity(n, n);
    let idx = |x: usize, yy: usize| yy * w + x;
    for yy in 0..h {
        for x in 0..w {
            let i = idx(x, yy);
            for j in [idx((x + 1) % w, yy), idx(x, (yy + 1) % h)] {
                // One difference row d = e_j − e_i contributes β·dᵀd.
                a[(i, i)] += beta;
                a[(j, j)] += beta;
                a[(i, j)] -= beta;
                a[(j, i)] -= beta;
            }
        }
    }
    let b = DVector::from_column_slice(y.plane(0));
    a.lu().solve(&b).unwrap().as_slice().to_vec()
}

#[test]
fn tikhonov_matches_dense_solve() {
    let mut r = rng::seeded(31);
    for &(w, h) in &[(16, 16), (7, 9), (32, 32), (1, 5), (32, 3)] {
        for &beta in &[0.5, 1.0, 3.0] {
            let y = Image::from_fn(w, h, |_, _| r.random::<f64>());
            let fast = restore_tikhonov(&y, &RestorationParams::tikhonov(beta)).unwrap();
            let oracle = dense_tikhonov(&y, beta);
            let worst = fast.data().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-8, "{w}x{h} beta {beta}: {worst}");
        }
    }
}

#[test]
fn tikhonov_keeps_constants() {
    let y = Image::filled(12, 10, 1, 0.3);
    let out = restore_tikhonov(&y, &RestorationParams::tikhonov(5.0)).unwrap();
    assert!(out.data().iter().all(|v| (v - 0.3).abs() < 1e-12));
}

#[test]
fn tv_objective_close_to_long_run_reference() {
    let mut r = rng::seeded(41);
    for beta in [0.05, 0.1, 0.3] {
        let y = Image::from_fn(32, 32, |x, _| {
            let base = if x < 16 { 0.3 } else { 0.7 };
            (base + 0.08 * (r.random::<f64>() - 0.5)).clamp(0.0, 1.0)
        });
        let p = RestorationParams::total_variation(beta);
        let long = RestorationParams {
            max_iters: 10 * p.max_iters,
            tol: p.tol / 10.0,
            ..p
        };
        let a = restore_tv(&y, &p).unwrap().objective;
        let b = restore_tv(&y, &long).unwrap().objective;
        assert!(a <= b * 1.01 + 1e-12, "beta {beta}: {a} vs {b}");
    }
}

#[test]
fn restorers_are_deterministic() {
    let y = synthetic_corpus(&SynthParams::new(32, 32), 1, 3).unwrap().remove(0);
    let p = RestorationParams::total_variation(0.1);
    assert_eq!(restore_tv(&y, &p).unwrap().image, restore_tv(&y, &p).unwrap().image);
    let w = RestorationParams::wiener(1e-3, Boundary::Symmetric);
    let b = BlurParams::new(2.0).unwrap();
    assert_eq!(wiener_deconvolve(&y, &b, &w).unwrap(), wiener_deconvolve(&y, &b, &w).unwrap());
}

#[test]
fn deblur_beats_blur_while_mark_stays_undetected() {
    let images = synthetic_corpus(&SynthParams::new(128, 128), 10, 77).unwrap();
    let blur = BlurParams::with_kernel(15.0, 71).unwrap();
    let pipe = builtin("deblur-attack").unwrap();
    let (mut gain, mut detected) = (0.0, 0);
    for (i, clean) in images.iter().enumerate() {
        let p = AdditiveKey::random(i as u64, 64, DEFAULT_ADDITIVE_STRENGTH).unwrap().pattern(128, 128).unwrap();
        let marked = embed_additive(clean, &p).unwrap().image;
        let blurred = gaussian_blur(&marked, &blur).unwrap();
        let restored = run_attack(&marked, &pipe).unwrap();
        let (pb, pr) = (psnr(&blurred, clean).unwrap(), psnr(&restored, clean).unwrap());
        assert!(pr > pb, "image {i}: {pr} <= {pb}");
        gain += (pr - pb) / images.len() as f64;
        if detect_additive(&restored, &p, None).unwrap().present {
            detected += 1;
        }
    }
    assert_eq!(detected, 0);
    assert!(gain >= 3.0, "mean gain {gain} dB");
}
