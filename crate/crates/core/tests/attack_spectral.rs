use wmbench_core::attack::{builtin, builtin_pipelines, run_attack, run_attack_detailed};
use wmbench_core::degrade::{add_pixel_noise_unclamped, gaussian_blur_periodic_unclamped, transfer_function, BlurParams, NoiseParams};
use wmbench_core::fourier::dft2;
use wmbench_core::metrics::psnr;
use wmbench_core::spectral::*;
use wmbench_core::synth::{synthetic_corpus, SynthParams};
use wmbench_core::watermark::*;
use wmbench_core::Image;

fn corpus(n: usize) -> Vec<Image> {
    synthetic_corpus(&SynthParams::new(128, 128), n, 2718).unwrap()
}

#[test]
fn builtins_keep_clean_images_above_25_db() {
    let images = corpus(20);
    for pipe in builtin_pipelines() {
        let scores: Vec<f64> = images
            .iter()
            .enumerate()
            .map(|(i, img)| psnr(&run_attack(img, &pipe.clone().with_seed(i as u64)).unwrap(), img).unwrap())
            .collect();
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("{:16} mean {mean:.2} dB, min {min:.2} dB", pipe.name);
        assert!(mean >= 25.0, "{}: {mean}", pipe.name);
    }
}

#[test]
fn denoise_attack_lands_between_chance_and_clean_accuracy() {
    let images = corpus(20);
    let pipe = builtin("denoise-attack").unwrap();
    let (mut clean, mut attacked) = (0.0, 0.0);
    for (i, img) in images.iter().enumerate() {
        let key = SpreadSpectrumKey::with_seed(50 + i as u64);
        let marked = embed_ss(img, &key).unwrap().image;
        clean += extract_ss(&marked, &key).unwrap().bit_accuracy / images.len() as f64;
        let out = run_attack_detailed(&marked, &pipe.clone().with_seed(i as u64)).unwrap();
        attacked += extract_ss(&out.image, &key).unwrap().bit_accuracy / images.len() as f64;
    }
    println!("clean {clean:.4}, denoise-attack {attacked:.4}");
    assert!(attacked > 0.5 && attacked < clean, "{attacked} vs {clean}");
}

#[test]
fn difference_spectrum_isolates_the_pattern() {
    let clean = Image::filled(40, 32, 1, 0.5);
    let p = AdditiveKey::random(1, 16, 0.02).unwrap().pattern(40, 32).unwrap();
    let marked = embed_additive(&clean, &p).unwrap();
    assert_eq!(marked.clamped_fraction, 0.0);
    let field = watermark_spectrum(&clean, &marked.image).unwrap();
    let w = dft2(p.pattern());
    for (a, b) in field.coefficients().iter().zip(w.coefficients()) {
        assert!((a - b * 0.02).norm() < 1e-10);
    }
    assert!(watermark_spectrum(&clean, &clean).unwrap().energy() == 0.0);

    let blur = BlurParams::new(1.5).unwrap();
    let blurred = watermark_spectrum(
        &gaussian_blur_periodic_unclamped(&clean, &blur),
        &gaussian_blur_periodic_unclamped(&marked.unclamped, &blur),
    )
    .unwrap();
    let h = transfer_function(&blur, 40, 32);
    for ((f, wi), hi) in blurred.coefficients().iter().zip(w.coefficients()).zip(h.coefficients()) {
        let expected = wi * 0.02 * hi.re;
        if hi.re > 0.01 && expected.norm() > 1e-9 {
            assert!((f - expected).norm() <= 0.05 * expected.norm());
        }
    }
}

#[test]
fn predicted_profile_strictly_decreasing() {
    let clean = Image::filled(64, 64, 1, 0.5);
    let marked = clean.map(|v| v);
    for sigma in [0.5, 1.0, 2.0, 4.0] {
        let blur = BlurParams::new(sigma).unwrap();
        let r = suppression_profile(&clean, &marked, &marked, &BandSpec::default(), Some(&blur)).unwrap();
        let flat: Vec<f64> = r.rows.iter().map(|r| r.predicted_flat.unwrap()).collect();
        assert!(flat.windows(2).all(|w| w[1] < w[0]), "sigma {sigma}: {flat:?}");
    }
}

#[test]
fn periodic_blur_bands_within_ten_percent() {
    let clean = Image::filled(64, 64, 1, 0.5);
    let p = AdditiveKey::random(2, 16, 0.02).unwrap().pattern(64, 64).unwrap();
    let marked = embed_additive(&clean, &p).unwrap().unclamped;
    let blur = BlurParams::new(2.0).unwrap();
    let attacked = gaussian_blur_periodic_unclamped(&marked, &blur);
    let r = suppression_profile(&clean, &marked, &attacked, &BandSpec::default(), Some(&blur)).unwrap();
    assert!(r.parseval_error() < 1e-6);
    for row in &r.rows {
        let pred = row.predicted.unwrap();
        assert!((row.measured / pred - 1.0).abs() < 0.1, "{row:?}");
    }
}

#[test]
fn pixel_noise_band_energy_is_flat() {
    let clean = Image::filled(64, 64, 1, 0.5);
    let bands = BandSpec::default();
    let sigma = 0.05;
    let trials = 50;
    let mut energy = vec![0.0; bands.len()];
    let mut bins = vec![0usize; bands.len()];
    for b in bands.assign(64, 64) {
        bins[b] += 1;
    }
    for t in 0..trials {
        let noisy = add_pixel_noise_unclamped(&clean, &NoiseParams::new(sigma, t).unwrap());
        let r = suppression_profile(&clean, &noisy, &noisy, &bands, None).unwrap();
        assert!(r.parseval_error() < 1e-6);
        for row in &r.rows {
            energy[row.band] += row.reference_energy / trials as f64;
        }
    }
    for b in 0..bands.len() {
        let expected = sigma * sigma * 4096.0 * bins[b] as f64;
        // Each complex bin is Exp-distributed, so a band sum has relative sd ≈ 1/√bins.
        let se = expected / ((bins[b] * trials as usize) as f64).sqrt();
        assert!((energy[b] - expected).abs() < 4.0 * se, "band {b}: {} vs {expected}", energy[b]);
    }
}

#[test]
fn noise_law_examples() {
    let square = noise_energy_check(0.05, 64, 64, 200, 1).unwrap();
    assert!(square.passed && square.relative_error < 0.02);
    let odd = noise_energy_check(0.1, 17, 23, 200, 2).unwrap();
    assert!((odd.target - 0.01 * 391.0).abs() < 1e-12);
    assert!(odd.passed && odd.relative_error < 0.02);
}
