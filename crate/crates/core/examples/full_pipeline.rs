//! The whole study loop in one program, at desk scale: synthesize a corpus,
//! clean it, add the four noise types at 5-10 dB SNR, render both image
//! transforms, and evaluate the three train/test variations.
//!
//!     cargo run --release --example full_pipeline
//!
//! Pass a seed to rerun the experiment on a different draw:
//!
//!     cargo run --release --example full_pipeline -- 31

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use ecg_robustness::eval::{make_folds, run_matrix, EvalMode, ImageSet};
use ecg_robustness::noise::{apply_noise, NoiseBank, NoisyVariants, SnrPolicy};
use ecg_robustness::preprocess::{clean_pipeline, FilterSpec};
use ecg_robustness::scalogram::{scalogram_image_with_bank, MorseConfig, MorseFilterBank};
use ecg_robustness::spar::{spar_image, SparConfig};
use ecg_robustness::synth::{synth_corpus, SynthConfig};
use ecg_robustness::types::{EcgRecord, ImageKind, Label, TransformImage, Variant};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(555);
    let started = Instant::now();

    let config = SynthConfig {
        n_per_class: 40,
        fs: 500.0,
        duration_s: 10.0,
        seed,
        ..SynthConfig::default()
    };
    let raw = synth_corpus(&config).expect("corpus");
    println!("[{:>5.1?}] synthesized {} raw records", started.elapsed(), raw.len());

    let spec = FilterSpec::default();
    let clean: Vec<EcgRecord> = raw
        .par_iter()
        .map(|r| clean_pipeline(r, &spec).expect("clean"))
        .collect();
    println!("[{:>5.1?}] cleaned", started.elapsed());

    let bank = NoiseBank::synth(600.0, config.fs, seed).expect("bank");
    let policy = SnrPolicy {
        rng_seed: seed,
        ..SnrPolicy::default()
    };
    let noisy: Vec<NoisyVariants> = clean
        .par_iter()
        .map(|r| apply_noise(r, &bank, &policy).expect("noise"))
        .collect();
    println!("[{:>5.1?}] injected bw/em/ma/all noise", started.elapsed());

    let datasets: Vec<(Variant, Vec<&EcgRecord>)> = vec![
        (Variant::Clean, clean.iter().collect()),
        (Variant::Bw, noisy.iter().map(|v| &v.bw).collect()),
        (Variant::Em, noisy.iter().map(|v| &v.em).collect()),
        (Variant::Ma, noisy.iter().map(|v| &v.ma).collect()),
        (Variant::All, noisy.iter().map(|v| &v.all).collect()),
    ];

    let spar_cfg = SparConfig::default();
    let morse_cfg = MorseConfig::default();
    let fbank = MorseFilterBank::new(clean[0].samples_per_lead(), config.fs, &morse_cfg).expect("bank");

    let mut sets = Vec::new();
    let mut labels: BTreeMap<String, Label> = BTreeMap::new();
    for (variant, records) in datasets {
        for r in &records {
            labels.insert(r.id.clone(), r.label);
        }
        let attractors: Vec<TransformImage> = records
            .par_iter()
            .map(|r| spar_image(r, &spar_cfg).expect("attractor"))
            .collect();
        let scalograms: Vec<TransformImage> = records
            .par_iter()
            .map(|r| scalogram_image_with_bank(r, &morse_cfg, &fbank).expect("scalogram"))
            .collect();
        sets.push(ImageSet {
            variant,
            kind: ImageKind::Attractor,
            images: attractors.into_iter().map(|i| (i.source_id.clone(), i)).collect(),
        });
        sets.push(ImageSet {
            variant,
            kind: ImageKind::Scalogram,
            images: scalograms.into_iter().map(|i| (i.source_id.clone(), i)).collect(),
        });
    }
    println!("[{:>5.1?}] rendered {} image datasets", started.elapsed(), sets.len());

    let ids: Vec<(String, Label)> = labels.iter().map(|(k, v)| (k.clone(), *v)).collect();
    let plan = make_folds(&ids, seed).expect("folds");

    for mode in [EvalMode::Same, EvalMode::TrainClean, EvalMode::TrainAll] {
        let report = run_matrix(&plan, &sets, &labels, mode).expect("matrix");
        println!("\n{}", report.render_table());
    }
    println!("[{:>5.1?}] done", started.elapsed());
}
