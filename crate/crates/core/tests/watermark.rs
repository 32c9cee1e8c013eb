use rand::Rng;

use wmbench_core::attack::{builtin, run_attack};
use wmbench_core::degrade::{add_pixel_noise, gaussian_blur, jpeg_cycle, BlurParams, JpegParams, NoiseParams};
use wmbench_core::restore::{residual_watermark_energy, Extractor};
use wmbench_core::rng;
use wmbench_core::synth::{synthetic_corpus, SynthParams};
use wmbench_core::watermark::*;
use wmbench_core::Image;

fn corpus(n: usize, side: usize) -> Vec<Image> {
    synthetic_corpus(&SynthParams::new(side, side), n, 404).unwrap()
}

#[test]
fn round_trip_is_exact_on_corpus_images() {
    for (i, img) in corpus(10, 128).iter().enumerate() {
        let key = SpreadSpectrumKey::with_seed(i as u64);
        let marked = embed_ss(img, &key).unwrap();
        let d = extract_ss(&marked.image, &key).unwrap();
        assert_eq!(d.bit_accuracy, 1.0, "image {i}");
        assert!(d.present);
    }
}

#[test]
fn survives_jpeg_75_at_default_strength() {
    let mut acc = 0.0;
    let images = corpus(20, 128);
    for (i, img) in images.iter().enumerate() {
        let key = SpreadSpectrumKey::with_seed(1000 + i as u64);
        let marked = embed_ss(img, &key).unwrap().image;
        let degraded = jpeg_cycle(&marked, &JpegParams::new(75).unwrap());
        acc += extract_ss(&degraded, &key).unwrap().bit_accuracy;
    }
    acc /= images.len() as f64;
    assert!(acc >= 0.95, "{acc}");
}

#[test]
fn wrong_keys_read_at_chance() {
    // 256 bits keep a single read within ±0.1 of chance with probability > 0.99.
    let img = &corpus(1, 128)[0];
    let key = SpreadSpectrumKey::random(7, 256, DEFAULT_SS_STRENGTH).unwrap();
    let marked = embed_ss(img, &key).unwrap().image;
    let mut inside = 0;
    let mut mean = 0.0;
    for k in 0..200u64 {
        let wrong = SpreadSpectrumKey::random(10_000 + k, 256, DEFAULT_SS_STRENGTH).unwrap();
        let acc = extract_ss(&marked, &wrong).unwrap().bit_accuracy;
        mean += acc / 200.0;
        if (0.4..=0.6).contains(&acc) {
            inside += 1;
        }
    }
    assert!(inside >= 198, "{inside}/200 within [0.4, 0.6]");
    assert!((mean - 0.5).abs() < 0.02, "{mean}");
}

#[test]
fn keyed_orthogonality() {
    let images = corpus(10, 128);
    let mut r = rng::seeded(55);
    let mut mean = 0.0;
    for t in 0..100 {
        let (k1, k2) = (r.random::<u64>(), r.random::<u64>());
        assert_ne!(k1, k2);
        let img = &images[t % images.len()];
        let marked = embed_ss(img, &SpreadSpectrumKey::with_seed(k1)).unwrap().image;
        mean += extract_ss(&marked, &SpreadSpectrumKey::with_seed(k2)).unwrap().bit_accuracy / 100.0;
    }
    assert!((0.45..=0.55).contains(&mean), "{mean}");
}

#[test]
fn zero_strength_reads_at_chance() {
    let images = corpus(20, 128);
    let mut mean = 0.0;
    for (i, img) in images.iter().enumerate() {
        let key = SpreadSpectrumKey::random(i as u64, 64, 0.0).unwrap();
        let out = embed_ss(img, &key).unwrap().image;
        assert_eq!(&out, img);
        mean += extract_ss(&out, &key).unwrap().bit_accuracy / images.len() as f64;
    }
    assert!((0.4..=0.6).contains(&mean), "{mean}");
}

#[test]
fn accuracy_non_decreasing_in_strength() {
    let images = corpus(20, 128);
    let mut prev = 0.0;
    for gamma in [0.5, 1.0, 2.0, 4.0] {
        let mut acc = 0.0;
        for (i, img) in images.iter().enumerate() {
            let key = SpreadSpectrumKey::random(300 + i as u64, 64, gamma).unwrap();
            let marked = embed_ss(img, &key).unwrap().image;
            let noisy = add_pixel_noise(&marked, &NoiseParams::new(0.05, 900 + i as u64).unwrap());
            acc += extract_ss(&noisy, &key).unwrap().bit_accuracy / images.len() as f64;
        }
        assert!(acc >= prev, "gamma {gamma}: {acc} < {prev}");
        prev = acc;
    }
}

#[test]
fn additive_null_correlation_is_small() {
    let mut r = rng::seeded(77);
    let img = Image::from_fn(64, 64, |_, _| r.random::<f64>());
    let bound = 3.0 / 64.0;
    let mut inside = 0;
    for k in 0..1000u64 {
        let p = AdditiveKey::random(k, 64, DEFAULT_ADDITIVE_STRENGTH).unwrap().pattern(64, 64).unwrap();
        if detect_additive(&img, &p, None).unwrap().correlation.abs() < bound {
            inside += 1;
        }
    }
    assert!(inside >= 990, "{inside}/1000");
}

#[test]
fn additive_correlation_near_one_on_mid_gray() {
    let img = Image::filled(128, 128, 1, 0.5);
    let p = AdditiveKey::random(3, 64, DEFAULT_ADDITIVE_STRENGTH).unwrap().pattern(128, 128).unwrap();
    let marked = embed_additive(&img, &p).unwrap().image;
    assert!(detect_additive(&marked, &p, None).unwrap().correlation > 0.9);
    assert!((detect_additive(&marked, &p, Some(&img)).unwrap().correlation - 1.0).abs() < 1e-9);
}

#[test]
fn strong_blur_erases_the_additive_mark() {
    let img = &corpus(1, 128)[0];
    let p = AdditiveKey::random(8, 64, DEFAULT_ADDITIVE_STRENGTH).unwrap().pattern(128, 128).unwrap();
    let marked = embed_additive(img, &p).unwrap().image;
    let blurred = gaussian_blur(&marked, &BlurParams::with_kernel(15.0, 71).unwrap()).unwrap();
    let d = detect_additive(&blurred, &p, None).unwrap();
    assert!(!d.present, "{d:?}");
    assert!(d.correlation < p.threshold());
}

#[test]
fn residual_energy_orders_clean_attacked_and_marked() {
    let img = &corpus(1, 128)[0];
    let p = AdditiveKey::random(9, 64, DEFAULT_ADDITIVE_STRENGTH).unwrap().pattern(128, 128).unwrap();
    let ex = Extractor::Additive(&p);
    let marked = embed_additive(img, &p).unwrap().image;
    let attacked = run_attack(&marked, &builtin("deblur-attack").unwrap()).unwrap();
    let (e_clean, e_marked, e_attacked) = (
        residual_watermark_energy(img, &ex).unwrap(),
        residual_watermark_energy(&marked, &ex).unwrap(),
        residual_watermark_energy(&attacked, &ex).unwrap(),
    );
    assert!(e_clean < 1e-2, "{e_clean}");
    assert!(e_marked > e_clean && e_marked > e_attacked);
    assert!(e_attacked < e_marked);

    let key = SpreadSpectrumKey::with_seed(9);
    let ex = Extractor::SpreadSpectrum(&key);
    let marked = embed_ss(img, &key).unwrap().image;
    assert!(residual_watermark_energy(img, &ex).unwrap() < 1e-2);
    assert!(residual_watermark_energy(&marked, &ex).unwrap() > 0.5);
}

#[test]
fn key_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.key");
    let key = WatermarkKey::SpreadSpectrum(SpreadSpectrumKey::with_seed(5));
    key.write(&path).unwrap();
    assert_eq!(WatermarkKey::read(&path).unwrap(), key);
}
