//! Acceptance suite: one test per criterion, tolerances pinned in code.
//! Each test prints a single PASS line with the measured values
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use ecg_robustness::eval::{
    self, make_folds, macro_f1, per_class_metrics, ConfusionMatrix, EvalMode, ImageSet,
    RobustnessReport,
};
use ecg_robustness::noise::{self, apply_noise, compute_snr, scale_factor_for_snr, NoiseBank, SnrPolicy};
use ecg_robustness::preprocess::{clean_pipeline, notch, remove_baseline, FilterSpec};
use ecg_robustness::rng::Rng;
use ecg_robustness::scalogram::{cwt, scalogram_image_with_bank, MorseConfig, MorseFilterBank};
use ecg_robustness::spar::{spar_image, SparConfig};
use ecg_robustness::synth::{synth_corpus, SynthConfig};
use ecg_robustness::types::{EcgRecord, ImageKind, Label, TransformImage, Variant, LABELS};

const SNR_TOLERANCE_DB: f64 = 1e-9;
const ACCEPTANCE_SEED: u64 = 555;

/// Criterion 1: for 1000 randomized (signal, noise, target) triples with the
/// target in [5, 10] dB, the scaled-noise SNR equals the target within
/// 1e-9 dB. Runtime under 10 s.
#[test]
fn criterion_1_snr_exactness() {
    let start = Instant::now();
    let mut rng = Rng::new(0x5ec7_1001);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = 200 + rng.below(1800);
        let signal: Vec<f64> = (0..n).map(|_| rng.range(-3.0, 3.0)).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.range(-1.5, 1.5)).collect();
        let target = rng.range(5.0, 10.0);
        let k = scale_factor_for_snr(&signal, &noise, target).expect("scale factor");
        let scaled: Vec<f64> = noise.iter().map(|v| k * v).collect();
        let got = compute_snr(&signal, &scaled).expect("snr");
        worst = worst.max((got - target).abs());
        assert!(
            (got - target).abs() <= SNR_TOLERANCE_DB,
            "SNR {got} missed target {target}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "criterion 1 took {elapsed:?}");
    println!("criterion 1 PASS: 1000 triples, worst |SNR error| {worst:.3e} dB <= 1e-9, {elapsed:?}");
}

/// Criterion 2: for every record processed by apply_noise, the all variant
/// minus clean minus k times the summed windows is exactly zero per sample.
#[test]
fn criterion_2_shared_scaling_identity() {
    let config = SynthConfig {
        n_per_class: 14,
        fs: 500.0,
        duration_s: 8.0,
        seed: 0x5ec7_1002,
        ..SynthConfig::default()
    };
    let raw = synth_corpus(&config).expect("corpus");
    let spec = FilterSpec::default();
    let bank = NoiseBank::synth(60.0, 500.0, 0x5ec7_1002).expect("bank");
    let policy = SnrPolicy::new(5.0, 10.0, 0x5ec7_1002).expect("policy");

    let mut samples_checked = 0u64;
    for record in &raw {
        let clean = clean_pipeline(record, &spec).expect("clean");
        let out = apply_noise(&clean, &bank, &policy).expect("noise");
        let len = clean.samples_per_lead();
        for lead in 0..clean.leads.len() {
            for i in 0..len {
                let window_sum =
                    bank.bw[out.window_offset + i] + bank.em[out.window_offset + i] + bank.ma[out.window_offset + i];
                let residual =
                    out.all.leads[lead][i] - (clean.leads[lead][i] + out.scale * window_sum);
                assert!(
                    residual == 0.0,
                    "record {} lead {lead} sample {i}: residual {residual:e}",
                    record.id
                );
                samples_checked += 1;
            }
        }
    }
    println!(
        "criterion 2 PASS: {} records, {samples_checked} samples, all residuals exactly zero",
        raw.len()
    );
}

/// Criterion 3: 50 Hz tone attenuated >= 40 dB by the notch; 10 Hz tone
/// within +-0.5 dB through the full chain; 0.2 Hz drift residual <= 20%
/// after baseline removal. Runtime under 5 s.
#[test]
fn criterion_3_filter_chain() {
    let start = Instant::now();
    let fs = 500.0;
    let n = 5000;
    let tone = |freq: f64| -> Vec<f64> {
        (0..n)
            .map(|i| (std::f64::consts::TAU * freq * i as f64 / fs).sin())
            .collect()
    };
    let trim = fs as usize;
    let amplitude = |x: &[f64]| -> f64 {
        let mid = &x[trim..x.len() - trim];
        let max = mid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = mid.iter().cloned().fold(f64::INFINITY, f64::min);
        (max - min) / 2.0
    };

    let notched = notch(&tone(50.0), fs, [49.0, 51.0], 3, true).expect("notch");
    let notch_amp = amplitude(&notched);
    assert!(notch_amp <= 0.01, "50 Hz residual {notch_amp} above -40 dB");

    let rec = EcgRecord::new("tone10", vec![tone(10.0)], fs, Label::Normal, Variant::Raw).unwrap();
    let cleaned = clean_pipeline(&rec, &FilterSpec::default()).expect("chain");
    let chain_amp = amplitude(&cleaned.leads[0]);
    assert!(
        (0.944..=1.059).contains(&chain_amp),
        "10 Hz amplitude {chain_amp} outside +-0.5 dB"
    );

    let drift = tone(0.2);
    let removed = remove_baseline(&drift, fs).expect("baseline");
    let residual = removed[trim..n - trim]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(residual <= 0.2, "0.2 Hz residual {residual} above 20%");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "criterion 3 took {elapsed:?}");
    println!(
        "criterion 3 PASS: notch 50 Hz -> {notch_amp:.2e}, chain 10 Hz -> {chain_amp:.4}, drift residual {residual:.4}, {elapsed:?}"
    );
}

fn quantize_dyadic(values: &[f64]) -> Vec<f64> {
    let quantum = (2.0f64).powi(-20);
    values.iter().map(|v| (v / quantum).round() * quantum).collect()
}

fn spar_config_lead0() -> SparConfig {
    SparConfig {
        lead: 0,
        ..SparConfig::default()
    }
}

fn pulse_train(rate_hz: f64, fs: f64, seconds: f64) -> Vec<f64> {
    let n = (seconds * fs) as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let cycle_pos = (t * rate_hz).fract();
            let phase = (cycle_pos - 0.5) / (0.01 * rate_hz);
            (-0.5 * phase * phase).exp() + 0.2 * (std::f64::consts::TAU * (t * rate_hz)).sin()
        })
        .collect()
}

/// Criterion 4: constant-offset and positive-amplitude-scaling invariance of
/// the SPAR image are bit-exact; 60 vs 90 bpm rescaled fixtures differ by at
/// most 0.05 mean absolute pixel.
#[test]
fn criterion_4_spar_invariances() {
    let fs = 500.0;
    let config = spar_config_lead0();

    // constant offsets on a dyadically quantized fixture: every addition is
    // exact in f64, so the invariance claim is checked at full strength
    let base_lead = quantize_dyadic(&pulse_train(1.2, fs, 8.0));
    let base = EcgRecord::new("inv", vec![base_lead.clone()], fs, Label::Normal, Variant::Clean).unwrap();
    let reference = spar_image(&base, &config).expect("image");
    for offset in [0.25f64, 1.0, -3.5, 1024.0] {
        let shifted = EcgRecord::new(
            "inv",
            vec![base_lead.iter().map(|v| v + offset).collect()],
            fs,
            Label::Normal,
            Variant::Clean,
        )
        .unwrap();
        let image = spar_image(&shifted, &config).expect("image");
        assert!(
            reference
                .pixels
                .iter()
                .zip(&image.pixels)
                .all(|(a, b)| a.to_bits() == b.to_bits()),
            "offset {offset} changed the image"
        );
    }

    for alpha in [0.5f64, 2.0, 8.0, 4096.0] {
        let scaled = EcgRecord::new(
            "inv",
            vec![base_lead.iter().map(|v| v * alpha).collect()],
            fs,
            Label::Normal,
            Variant::Clean,
        )
        .unwrap();
        let image = spar_image(&scaled, &config).expect("image");
        assert!(
            reference
                .pixels
                .iter()
                .zip(&image.pixels)
                .all(|(a, b)| a.to_bits() == b.to_bits()),
            "scale {alpha} changed the image"
        );
    }

    let bpm60 = EcgRecord::new("hr60", vec![pulse_train(1.0, fs, 10.0)], fs, Label::Normal, Variant::Clean).unwrap();
    let bpm90 = EcgRecord::new("hr90", vec![pulse_train(1.5, fs, 10.0)], fs, Label::Normal, Variant::Clean).unwrap();
    let img60 = spar_image(&bpm60, &config).expect("image");
    let img90 = spar_image(&bpm90, &config).expect("image");
    let mad: f64 = img60
        .pixels
        .iter()
        .zip(&img90.pixels)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / img60.pixels.len() as f64;
    assert!(mad <= 0.05, "60 vs 90 bpm mean abs pixel difference {mad}");

    println!(
        "criterion 4 PASS: offset and scaling invariance bit-exact, heart-rate MAD {mad:.4} <= 0.05"
    );
}

/// Criterion 5: single-tone ridge frequency within one voice (2^(1/16)) for
/// tones at 2, 10, 40 Hz at fs 500.
#[test]
fn criterion_5_scalogram_ridge() {
    let fs = 500.0;
    let config = MorseConfig {
        lead: 0,
        ..MorseConfig::default()
    };
    let voice = 2f64.powf(1.0 / 16.0);
    let mut summary = Vec::new();
    for tone in [2.0, 10.0, 40.0] {
        let lead: Vec<f64> = (0..5000)
            .map(|i| (std::f64::consts::TAU * tone * i as f64 / fs).sin())
            .collect();
        let rows = cwt(&lead, fs, &config).expect("cwt");
        let freqs = config.row_frequencies(fs);
        let ridge_idx = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                (i, row.iter().map(|c| c.norm()).sum::<f64>() / row.len() as f64)
            })
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
            .0;
        let ridge = freqs[ridge_idx];
        assert!(
            ridge / tone <= voice && tone / ridge <= voice,
            "{tone} Hz ridge at {ridge} Hz is more than one voice away"
        );
        summary.push(format!("{tone} Hz -> {ridge:.3} Hz"));
    }
    println!(
        "criterion 5 PASS: ridges within one voice (factor {voice:.4}): {}",
        summary.join(", ")
    );
}

/// Brute-force metrics straight from label pairs; no ConfusionMatrix.
fn oracle_metrics(pairs: &[(Label, Label)]) -> ([f64; 3], f64) {
    let mut f1s = [0.0; 3];
    for class in LABELS {
        let tp = pairs.iter().filter(|(t, p)| *t == class && *p == class).count() as f64;
        let predicted = pairs.iter().filter(|(_, p)| *p == class).count() as f64;
        let actual = pairs.iter().filter(|(t, _)| *t == class).count() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if actual > 0.0 { tp / actual } else { 0.0 };
        f1s[class.index()] = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
    }
    (f1s, f1s.iter().sum::<f64>() / 3.0)
}

/// Criterion 6: macro and per-class F1 computed from the confusion matrix
/// equal the brute-force recomputation from raw label pairs, exactly, over
/// 1000 random matrices.
#[test]
fn criterion_6_metric_oracle_equivalence() {
    let mut rng = Rng::new(0x5ec7_1006);
    for case in 0..1000 {
        let n = rng.below(10_000);
        let pairs: Vec<(Label, Label)> = (0..n)
            .map(|_| {
                (
                    Label::from_index(rng.below(3)),
                    Label::from_index(rng.below(3)),
                )
            })
            .collect();
        let cm = ConfusionMatrix::from_pairs(&pairs);
        let (oracle_f1s, oracle_macro) = oracle_metrics(&pairs);
        let ours = per_class_metrics(&cm);
        for c in 0..3 {
            assert_eq!(ours[c].f1, oracle_f1s[c], "case {case}: class {c} f1 differs");
        }
        assert_eq!(macro_f1(&cm), oracle_macro, "case {case}: macro f1 differs");
    }
    println!("criterion 6 PASS: 1000 random matrices, metrics equal the brute-force oracle exactly");
}

/// Criterion 7: for random id sets of sizes 100-3000, the five test sets
/// partition the ids and per-class stratification holds within one record
/// per set.
#[test]
fn criterion_7_fold_partition() {
    let mut rng = Rng::new(0x5ec7_1007);
    for case in 0..25 {
        let total = 100 + rng.below(2901);
        // random class sizes, at least 20 each (the documented precondition)
        let a = 20 + rng.below(total - 60 + 1);
        let remaining = total - a;
        let b = 20 + rng.below(remaining.saturating_sub(40) + 1);
        let c = remaining - b;
        let sizes = [a, b, c.max(20)];

        let mut ids = Vec::new();
        for (label, n) in LABELS.iter().zip(sizes) {
            for i in 0..n {
                ids.push((format!("{}{}", label.as_str(), i), *label));
            }
        }
        let plan = make_folds(&ids, rng.next_u64()).expect("folds");
        let labels: BTreeMap<&str, Label> = ids.iter().map(|(id, l)| (id.as_str(), *l)).collect();

        let mut seen = std::collections::BTreeSet::new();
        for fold in &plan.folds {
            for id in &fold.test {
                assert!(seen.insert(id.clone()), "case {case}: {id} tested twice");
            }
            for label in LABELS {
                let n_c = ids.iter().filter(|(_, l)| *l == label).count() as f64;
                let count = |set: &[String]| {
                    set.iter().filter(|id| labels[id.as_str()] == label).count() as f64
                };
                assert!(
                    (count(&fold.test) - 0.2 * n_c).abs() <= 1.0,
                    "case {case}: test stratification off for {label}"
                );
                assert!(
                    (count(&fold.validation) - 0.05 * n_c).abs() <= 1.0,
                    "case {case}: validation stratification off for {label}"
                );
                assert!(
                    (count(&fold.train) - 0.75 * n_c).abs() <= 1.0,
                    "case {case}: train stratification off for {label}"
                );
            }
        }
        assert_eq!(seen.len(), ids.len(), "case {case}: test sets must cover all ids");
    }
    println!("criterion 7 PASS: 25 random id sets (100-3000), partition and +-1 stratification hold");
}

/// Criterion 8: desk-scale robustness directions on the synthetic corpus
/// (150 records per class, fs 500, 10 s, fixed seed):
/// (a) mode-same clean macro F1 >= 0.8 for both kinds,
/// (b) F1(train clean -> test all) below F1(clean -> clean) by >= 0.03,
/// (c) the train-all drop to clean is smaller than the train-clean drop to
///     all, per kind,
/// (d) AF-class F1 on scalograms strictly above attractors, every variant.
/// Expected runtime under 5 minutes.
#[test]
fn criterion_8_desk_scale_robustness() {
    let start = Instant::now();
    let (reports, _) = run_robustness_pipeline(ACCEPTANCE_SEED);
    let same = &reports[0];
    let train_clean = &reports[1];
    let train_all = &reports[2];

    for kind in [ImageKind::Attractor, ImageKind::Scalogram] {
        // (a) sanity separability
        let clean_same = same.cell(Variant::Clean, Variant::Clean, kind).unwrap().macro_f1_mean;
        assert!(clean_same >= 0.8, "(a) {kind}: mode-same clean F1 {clean_same} < 0.8");

        // (b) noise hurts a clean-trained model
        let cc = train_clean.cell(Variant::Clean, Variant::Clean, kind).unwrap().macro_f1_mean;
        let ca = train_clean.cell(Variant::Clean, Variant::All, kind).unwrap().macro_f1_mean;
        assert!(
            ca < cc - 0.03 + 1e-12,
            "(b) {kind}: clean->all {ca} not below clean->clean {cc} by 0.03"
        );

        // (c) training on noise transfers back better than the reverse
        let aa = train_all.cell(Variant::All, Variant::All, kind).unwrap().macro_f1_mean;
        let ac = train_all.cell(Variant::All, Variant::Clean, kind).unwrap().macro_f1_mean;
        assert!(
            (aa - ac) < (cc - ca),
            "(c) {kind}: all->clean drop {} not smaller than clean->all drop {}",
            aa - ac,
            cc - ca
        );
    }

    // (d) the rhythm class reads better from the frequency image
    for variant in [Variant::Clean, Variant::Bw, Variant::Em, Variant::Ma, Variant::All] {
        let att = same
            .cell(variant, variant, ImageKind::Attractor)
            .unwrap()
            .per_class_f1_mean[Label::Af.index()];
        let scl = same
            .cell(variant, variant, ImageKind::Scalogram)
            .unwrap()
            .per_class_f1_mean[Label::Af.index()];
        assert!(
            scl > att,
            "(d) {variant}: scalogram AF F1 {scl} not above attractor {att}"
        );
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "criterion 8 took {elapsed:?}");
    let att_cc = train_clean.cell(Variant::Clean, Variant::Clean, ImageKind::Attractor).unwrap().macro_f1_mean;
    let att_ca = train_clean.cell(Variant::Clean, Variant::All, ImageKind::Attractor).unwrap().macro_f1_mean;
    let att_aa = train_all.cell(Variant::All, Variant::All, ImageKind::Attractor).unwrap().macro_f1_mean;
    let att_ac = train_all.cell(Variant::All, Variant::Clean, ImageKind::Attractor).unwrap().macro_f1_mean;
    println!(
        "criterion 8 PASS: att clean->clean {att_cc:.3}, clean->all {att_ca:.3}, all->all {att_aa:.3}, all->clean {att_ac:.3}; directions (a)-(d) hold; {elapsed:?}"
    );
}

/// The full in-library pipeline at the acceptance scale; shared by
/// criteria 8 and 9.
fn run_robustness_pipeline(seed: u64) -> (Vec<RobustnessReport>, String) {
    let config = SynthConfig {
        n_per_class: 150,
        fs: 500.0,
        duration_s: 10.0,
        seed,
        ..SynthConfig::default()
    };
    let raw = synth_corpus(&config).expect("corpus");
    let spec = FilterSpec::default();
    let clean: Vec<EcgRecord> = raw
        .par_iter()
        .map(|r| clean_pipeline(r, &spec).expect("clean"))
        .collect();

    let bank = NoiseBank::synth(1800.0, config.fs, seed).expect("bank");
    let policy = SnrPolicy {
        rng_seed: seed,
        ..SnrPolicy::default()
    };
    let noisy: Vec<noise::NoisyVariants> = clean
        .par_iter()
        .map(|r| apply_noise(r, &bank, &policy).expect("noise"))
        .collect();

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

    let ids: Vec<(String, Label)> = labels.iter().map(|(k, v)| (k.clone(), *v)).collect();
    let plan = make_folds(&ids, seed).expect("folds");

    let mut reports = Vec::new();
    let mut rendered = String::new();
    for mode in [EvalMode::Same, EvalMode::TrainClean, EvalMode::TrainAll] {
        let report = eval::run_matrix(&plan, &sets, &labels, mode).expect("matrix");
        rendered.push_str(&report.render_table());
        rendered.push('\n');
        reports.push(report);
    }
    (reports, rendered)
}

/// Criterion 9: rerunning the full pipeline with the same seed produces
/// byte-identical report JSON. Exercised end to end through the CLI, which
/// is the surface the reproducibility promise is made on.
#[test]
fn criterion_9_determinism() {
    let run_once = |root: &std::path::Path| -> (Vec<u8>, Vec<u8>, Vec<u8>, Vec<u8>) {
        let run = |args: &[&str]| {
            let owned: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            let code = ecg_robustness::cli::run(&owned);
            assert_eq!(code, 0, "command failed: {args:?}");
        };
        let p = |tail: &str| root.join(tail).display().to_string();

        run(&["synth-corpus", "--out", &p("raw"), "--seed", "11", "--n-per-class", "24", "--duration", "8"]);
        run(&["clean", "--manifest", &p("raw/manifest.csv"), "--out", &p("clean")]);
        run(&["add-noise", "--manifest", &p("clean/manifest.csv"), "--out", &p("noisy"),
              "--snr", "5:10", "--seed", "11", "--bank-duration", "120"]);
        for variant in ["clean", "noisy/bw", "noisy/em", "noisy/ma", "noisy/all"] {
            for kind in ["attractor", "scalogram"] {
                run(&["transform", "--kind", kind, "--manifest", &p(&format!("{variant}/manifest.csv")),
                      "--out", &p("images")]);
            }
        }
        run(&["folds", "--manifest", &p("clean/manifest.csv"), "--seed", "11", "--out", &p("folds.json")]);
        for mode in ["same", "train-clean", "train-all"] {
            run(&["evaluate", "--folds", &p("folds.json"), "--images", &p("images"),
                  "--mode", mode, "--out", &p(&format!("report_{mode}.json"))]);
        }
        run(&["report", "--inputs", &p("report_same.json"), &p("report_train-clean.json"),
              &p("report_train-all.json"), "--out", &p("summary.txt")]);

        (
            std::fs::read(root.join("report_same.json")).unwrap(),
            std::fs::read(root.join("report_train-clean.json")).unwrap(),
            std::fs::read(root.join("report_train-all.json")).unwrap(),
            std::fs::read(root.join("summary.txt")).unwrap(),
        )
    };

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let a = run_once(dir_a.path());
    let b = run_once(dir_b.path());
    assert_eq!(a.0, b.0, "mode-same report differs between reruns");
    assert_eq!(a.1, b.1, "train-clean report differs between reruns");
    assert_eq!(a.2, b.2, "train-all report differs between reruns");
    assert_eq!(a.3, b.3, "rendered summary differs between reruns");
    println!(
        "criterion 9 PASS: two full CLI pipeline runs, report JSON byte-identical ({} + {} + {} bytes)",
        a.0.len(),
        a.1.len(),
        a.2.len()
    );
}
