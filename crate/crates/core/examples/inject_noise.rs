//! Apply the four physiological noise types to a clean record at a target
//! SNR, then verify the procedure's two promises: the drawn SNR is hit
//! exactly, and all four variants share one window and one scaling factor.
//!
//!     cargo run --release --example inject_noise

use ecg_robustness::noise::{apply_noise, compute_snr, NoiseBank, SnrPolicy};
use ecg_robustness::preprocess::{clean_pipeline, FilterSpec};
use ecg_robustness::synth::{synth_corpus, SynthConfig};

fn main() {
    let config = SynthConfig {
        n_per_class: 1,
        seed: 9,
        ..SynthConfig::default()
    };
    let raw = synth_corpus(&config).expect("corpus");
    let clean = clean_pipeline(&raw[1], &FilterSpec::default()).expect("clean");

    let bank = NoiseBank::synth(120.0, clean.fs, 9).expect("bank");
    let policy = SnrPolicy::new(5.0, 10.0, 9).expect("policy");
    let out = apply_noise(&clean, &bank, &policy).expect("apply");

    println!("record {}", clean.id);
    println!("window offset {} samples, drawn SNR {:.4} dB, scale {:.5}", out.window_offset, out.snr_db, out.scale);

    let lead = policy.reference_lead;
    let len = clean.samples_per_lead();
    let reference = clean.lead(lead).unwrap();
    let scaled_all: Vec<f64> = bank.all[out.window_offset..out.window_offset + len]
        .iter()
        .map(|v| out.scale * v)
        .collect();
    let achieved = compute_snr(reference, &scaled_all).unwrap();
    println!("achieved SNR {:.12} dB (error {:.2e} dB)", achieved, (achieved - out.snr_db).abs());

    for (name, rec) in [("bw", &out.bw), ("em", &out.em), ("ma", &out.ma), ("all", &out.all)] {
        let noise: Vec<f64> = rec.lead(lead).unwrap().iter().zip(reference).map(|(a, b)| a - b).collect();
        let snr = compute_snr(reference, &noise).unwrap();
        println!("variant {name:<4} SNR vs clean: {snr:6.3} dB");
    }

    // shared-factor identity, checked bit for bit
    let exact = (0..len).all(|i| {
        let sum = bank.bw[out.window_offset + i] + bank.em[out.window_offset + i] + bank.ma[out.window_offset + i];
        out.all.leads[lead][i] == reference[i] + out.scale * sum
    });
    println!("all == clean + k*(bw+em+ma), per sample: {exact}");
}
