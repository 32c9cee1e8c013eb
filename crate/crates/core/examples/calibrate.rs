use std::time::Instant;

use wmbench_core::attack::{builtin_pipelines, run_attack, AttackPipeline, Stage};
use wmbench_core::metrics::psnr;
use wmbench_core::synth::{synthetic_corpus, SynthParams};
use wmbench_core::watermark::*;

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().unwrap()).collect();
    let mut p = SynthParams::new(128, 128);
    if args.len() >= 3 {
        p.exponent = args[0];
        p.contrast = args[1];
        p.texture = args[2];
    }
    let n = std::env::var("N").map(|v| v.parse().unwrap()).unwrap_or(30);
    let corpus = synthetic_corpus(&p, n, 1).unwrap();
    let t = Instant::now();
    for pipe in builtin_pipelines() {
        let ps: Vec<f64> = corpus.iter().map(|c| psnr(&run_attack(c, &pipe).unwrap(), c).unwrap()).collect();
        let mean = ps.iter().sum::<f64>() / n as f64;
        let min = ps.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("{:16} psnr mean {mean:.2} min {min:.2}", pipe.name);
    }
    println!("attacks {:?}", t.elapsed());
    let jpeg = AttackPipeline::new("jpeg", vec![Stage::jpeg(75).unwrap()], 0).unwrap();
    let noise = AttackPipeline::new("noise", vec![Stage::pixel_noise(0.02).unwrap()], 0).unwrap();
    for gamma in [1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0] {
        let mut acc = [0.0; 3];
        let mut q = 0.0;
        for (i, c) in corpus.iter().enumerate() {
            let key = SpreadSpectrumKey::random(100 + i as u64, 64, gamma).unwrap();
            let m = embed_ss(c, &key).unwrap().image;
            q += psnr(&m, c).unwrap();
            acc[0] += extract_ss(&m, &key).unwrap().bit_accuracy;
            acc[1] += extract_ss(&run_attack(&m, &jpeg.clone().with_seed(i as u64)).unwrap(), &key).unwrap().bit_accuracy;
            acc[2] += extract_ss(&run_attack(&m, &noise.clone().with_seed(i as u64)).unwrap(), &key).unwrap().bit_accuracy;
        }
        println!("gamma {gamma:5}: psnr {:.2} none {:.4} jpeg75 {:.4} noise {:.4}", q / n as f64, acc[0] / n as f64, acc[1] / n as f64, acc[2] / n as f64);
    }
    for pipe in builtin_pipelines() {
        let mut acc = 0.0;
        let mut clean_acc = 0.0;
        let mut ps = 0.0;
        for (i, c) in corpus.iter().enumerate() {
            let key = AdditiveKey::random(200 + i as u64, 64, DEFAULT_ADDITIVE_STRENGTH).unwrap();
            let pat = key.pattern(128, 128).unwrap();
            let m = embed_additive(c, &pat).unwrap().image;
            clean_acc += detect_additive(&m, &pat, None).unwrap().bit_accuracy;
            let a = run_attack(&m, &pipe.clone().with_seed(i as u64)).unwrap();
            ps += psnr(&a, c).unwrap();
            acc += detect_additive(&a, &pat, None).unwrap().bit_accuracy;
        }
        println!("additive {:16} clean {:.4} attacked {:.4} psnr {:.2}", pipe.name, clean_acc / n as f64, acc / n as f64, ps / n as f64);
    }
}
