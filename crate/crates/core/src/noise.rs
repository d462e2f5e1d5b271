//! Physiological noise: synthesis of the three base noise types, SNR math,
//! and the six-step application procedure that turns one clean record into
//! its bw / em / ma / all noisy variants.
//!
//! The procedure for one record: pick one contiguous window of the bank at a
//! random offset (the same offset for all four noise kinds), draw one target
//! SNR, compute the scaling factor from the clean signal and the `all`
//! window, then apply that same factor to all four windows and add each to
//! every lead.

use crate::error::{Error, Result};
use crate::preprocess;
use crate::rng::Rng;
use crate::types::{EcgRecord, Variant};

/// The three base noise types plus their sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NoiseKind {
    Bw,
    Em,
    Ma,
    All,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Bw => "bw",
            NoiseKind::Em => "em",
            NoiseKind::Ma => "ma",
            NoiseKind::All => "all",
        }
    }

    pub fn variant(self) -> Variant {
        match self {
            NoiseKind::Bw => Variant::Bw,
            NoiseKind::Em => Variant::Em,
            NoiseKind::Ma => Variant::Ma,
            NoiseKind::All => Variant::All,
        }
    }
}

/// A single-channel noise waveform.
#[derive(Debug, Clone)]
pub struct NoiseSegment {
    pub samples: Vec<f64>,
    pub fs: f64,
    pub kind: NoiseKind,
}

impl NoiseSegment {
    pub fn new(samples: Vec<f64>, fs: f64, kind: NoiseKind) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("noise contains non-finite samples".into()));
        }
        Ok(NoiseSegment { samples, fs, kind })
    }
}

/// One long segment of each base type, plus their pointwise sum.
#[derive(Debug, Clone)]
pub struct NoiseBank {
    pub bw: Vec<f64>,
    pub em: Vec<f64>,
    pub ma: Vec<f64>,
    /// bw + em + ma, summed in that order
    pub all: Vec<f64>,
    pub fs: f64,
}

impl NoiseBank {
    pub fn new(bw: NoiseSegment, em: NoiseSegment, ma: NoiseSegment) -> Result<Self> {
        if bw.samples.len() != em.samples.len() || em.samples.len() != ma.samples.len() {
            return Err(Error::LengthMismatch {
                left: bw.samples.len(),
                right: em.samples.len().max(ma.samples.len()),
            });
        }
        if bw.fs != em.fs || em.fs != ma.fs {
            return Err(Error::InvalidArgument("noise segment rates differ".into()));
        }
        let all: Vec<f64> = (0..bw.samples.len())
            .map(|i| bw.samples[i] + em.samples[i] + ma.samples[i])
            .collect();
        Ok(NoiseBank {
            fs: bw.fs,
            bw: bw.samples,
            em: em.samples,
            ma: ma.samples,
            all,
        })
    }

    /// Synthesize a bank of the given duration. Thirty minutes of each type
    /// is a comfortable default; anything at least as long as the longest
    /// record works.
    pub fn synth(duration_s: f64, fs: f64, seed: u64) -> Result<Self> {
        let bw = synth_noise(NoiseKind::Bw, duration_s, fs, seed)?;
        let em = synth_noise(NoiseKind::Em, duration_s, fs, seed)?;
        let ma = synth_noise(NoiseKind::Ma, duration_s, fs, seed)?;
        NoiseBank::new(bw, em, ma)
    }

    pub fn len(&self) -> usize {
        self.bw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bw.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.fs
    }

    fn window(&self, kind: NoiseKind, offset: usize, len: usize) -> &[f64] {
        let src = match kind {
            NoiseKind::Bw => &self.bw,
            NoiseKind::Em => &self.em,
            NoiseKind::Ma => &self.ma,
            NoiseKind::All => &self.all,
        };
        &src[offset..offset + len]
    }
}

/// SNR range and seed for the application procedure.
#[derive(Debug, Clone, Copy)]
pub struct SnrPolicy {
    pub min_db: f64,
    pub max_db: f64,
    pub rng_seed: u64,
    /// zero-based lead the scaling factor is computed against
    pub reference_lead: usize,
    /// draw an independent noise window per lead instead of sharing one;
    /// the scaling factor still comes from the reference lead's window
    pub per_lead_windows: bool,
}

impl SnrPolicy {
    pub fn new(min_db: f64, max_db: f64, rng_seed: u64) -> Result<Self> {
        if !(min_db <= max_db) {
            return Err(Error::InvalidArgument(format!(
                "SNR range [{min_db}, {max_db}] is empty"
            )));
        }
        Ok(SnrPolicy {
            min_db,
            max_db,
            rng_seed,
            reference_lead: 1,
            per_lead_windows: false,
        })
    }
}

impl Default for SnrPolicy {
    fn default() -> Self {
        SnrPolicy {
            min_db: 5.0,
            max_db: 10.0,
            rng_seed: 0,
            reference_lead: 1,
            per_lead_windows: false,
        }
    }
}

fn mean_power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// 10 * log10(P_signal / P_noise), powers as mean squared amplitude.
pub fn compute_snr(signal: &[f64], noise: &[f64]) -> Result<f64> {
    if signal.len() != noise.len() {
        return Err(Error::LengthMismatch {
            left: signal.len(),
            right: noise.len(),
        });
    }
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    let pn = mean_power(noise);
    if pn == 0.0 {
        return Err(Error::ZeroNoisePower);
    }
    Ok(10.0 * (mean_power(signal) / pn).log10())
}

/// Scalar k with compute_snr(signal, k * noise) == target_db.
pub fn scale_factor_for_snr(signal: &[f64], noise: &[f64], target_db: f64) -> Result<f64> {
    if signal.len() != noise.len() {
        return Err(Error::LengthMismatch {
            left: signal.len(),
            right: noise.len(),
        });
    }
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    let ps = mean_power(signal);
    let pn = mean_power(noise);
    if pn == 0.0 {
        return Err(Error::ZeroNoisePower);
    }
    if ps == 0.0 {
        return Err(Error::ZeroSignalPower);
    }
    Ok((ps / (pn * 10f64.powf(target_db / 10.0))).sqrt())
}

/// SNR of a raw record relative to its cleaned version: the noise is the
/// raw-minus-clean difference on the reference lead. Returns +inf when the
/// two are identical.
pub fn snr_of_raw(raw: &EcgRecord, clean: &EcgRecord, reference_lead: usize) -> Result<f64> {
    if raw.leads.len() != clean.leads.len() {
        return Err(Error::LengthMismatch {
            left: raw.leads.len(),
            right: clean.leads.len(),
        });
    }
    let r = raw.lead(reference_lead)?;
    let c = clean.lead(reference_lead)?;
    if r.len() != c.len() {
        return Err(Error::LengthMismatch {
            left: r.len(),
            right: c.len(),
        });
    }
    let diff: Vec<f64> = r.iter().zip(c).map(|(a, b)| a - b).collect();
    match compute_snr(c, &diff) {
        Ok(db) => Ok(db),
        Err(Error::ZeroNoisePower) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Everything produced by one run of the application procedure.
#[derive(Debug, Clone)]
pub struct NoisyVariants {
    pub bw: EcgRecord,
    pub em: EcgRecord,
    pub ma: EcgRecord,
    pub all: EcgRecord,
    /// window offset used for every lead (the reference lead's offset when
    /// windows are drawn per lead)
    pub window_offset: usize,
    /// one offset per lead when the policy asks for independent windows
    pub per_lead_offsets: Option<Vec<usize>>,
    /// SNR drawn from the policy range
    pub snr_db: f64,
    /// scaling factor applied to all four windows
    pub scale: f64,
}

impl NoisyVariants {
    pub fn iter(&self) -> impl Iterator<Item = &EcgRecord> {
        [&self.bw, &self.em, &self.ma, &self.all].into_iter()
    }
}

/// Steps i-vi for one clean record: one window offset, one SNR, one scaling
/// factor shared by all four noise kinds, noise added identically to every
/// lead. Deterministic given (policy seed, record id).
pub fn apply_noise(record: &EcgRecord, bank: &NoiseBank, policy: &SnrPolicy) -> Result<NoisyVariants> {
    if record.variant != Variant::Clean {
        return Err(Error::VariantMismatch {
            id: record.id.clone(),
            expected: "clean".into(),
            got: record.variant.to_string(),
        });
    }
    let len = record.samples_per_lead();
    if bank.len() < len {
        return Err(Error::BankTooShort {
            bank: bank.len(),
            record: len,
        });
    }
    let reference = record.lead(policy.reference_lead)?;

    let mut rng = Rng::substream(policy.rng_seed, &record.id);
    let offset = rng.below(bank.len() - len + 1);
    // extra draws only when asked for, so the shared-window stream is stable
    let per_lead_offsets: Option<Vec<usize>> = policy.per_lead_windows.then(|| {
        (0..record.leads.len())
            .map(|l| {
                if l == policy.reference_lead {
                    offset
                } else {
                    rng.below(bank.len() - len + 1)
                }
            })
            .collect()
    });
    let snr_db = rng.range(policy.min_db, policy.max_db);

    let all_window = bank.window(NoiseKind::All, offset, len);
    let scale = scale_factor_for_snr(reference, all_window, snr_db)?;

    let offset_for = |lead_idx: usize| -> usize {
        per_lead_offsets
            .as_ref()
            .map(|o| o[lead_idx])
            .unwrap_or(offset)
    };
    let make = |kind: NoiseKind| -> EcgRecord {
        let leads: Vec<Vec<f64>> = record
            .leads
            .iter()
            .enumerate()
            .map(|(lead_idx, lead)| {
                let window = bank.window(kind, offset_for(lead_idx), len);
                lead.iter()
                    .zip(window)
                    .map(|(x, n)| x + scale * n)
                    .collect()
            })
            .collect();
        EcgRecord {
            id: record.id.clone(),
            leads,
            fs: record.fs,
            label: record.label,
            variant: kind.variant(),
        }
    };

    Ok(NoisyVariants {
        bw: make(NoiseKind::Bw),
        em: make(NoiseKind::Em),
        ma: make(NoiseKind::Ma),
        all: make(NoiseKind::All),
        window_offset: offset,
        per_lead_offsets,
        snr_db,
        scale,
    })
}

fn normalize_rms(samples: &mut [f64]) {
    let rms = mean_power(samples).sqrt();
    if rms > 0.0 {
        for v in samples.iter_mut() {
            *v /= rms;
        }
    }
}

fn bandlimited_gaussian(rng: &mut Rng, n: usize, fs: f64, low_hz: f64, high_hz: f64) -> Vec<f64> {
    let white: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    // steep enough that almost no power escapes the band
    let lp = preprocess::design_lowpass(4, high_hz.min(fs / 2.0 * 0.9), fs).expect("valid band");
    let hp = preprocess::design_highpass(4, low_hz, fs).expect("valid band");
    let y = preprocess::apply_sos(&lp, &white, false);
    preprocess::apply_sos(&hp, &y, false)
}

/// Synthesize one noise segment, unit RMS, deterministic per seed.
///
/// bw: three random-phase sinusoids below 0.5 Hz. em: the same kind of drift
/// plus abrupt step discontinuities (Poisson, 0.2/s) plus 1-10 Hz noise.
/// ma: 1-20 Hz noise under a slowly wandering amplitude envelope.
pub fn synth_noise(kind: NoiseKind, duration_s: f64, fs: f64, seed: u64) -> Result<NoiseSegment> {
    if !(duration_s > 0.0) || !(fs > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_s} s at {fs} Hz is not synthesizable"
        )));
    }
    let n = (duration_s * fs).round() as usize;
    if n == 0 {
        return Err(Error::InvalidArgument("duration rounds to zero samples".into()));
    }
    let mut rng = Rng::substream(seed, kind.as_str());
    let mut samples = match kind {
        NoiseKind::Bw => synth_drift(&mut rng, n, fs),
        NoiseKind::Em => {
            let mut drift = synth_drift(&mut rng, n, fs);
            add_steps(&mut rng, &mut drift, fs);
            let hf = bandlimited_gaussian(&mut rng, n, fs, 1.0, 10.0);
            normalize_scratch(&mut drift, &hf, 0.8)
        }
        NoiseKind::Ma => {
            // shaped inside the nominal 1-20 Hz band so the envelope's
            // modulation sidebands stay in band too
            let core = bandlimited_gaussian(&mut rng, n, fs, 1.5, 18.0);
            let envelope = synth_envelope(&mut rng, n, fs);
            core.iter().zip(&envelope).map(|(c, e)| c * e).collect()
        }
        NoiseKind::All => {
            return Err(Error::InvalidArgument(
                "the all segment is the pointwise sum of bw, em, ma; synthesize those instead".into(),
            ))
        }
    };
    normalize_rms(&mut samples);
    NoiseSegment::new(samples, fs, kind)
}

/// Sum of three random-phase sinusoids with frequencies in [0.05, 0.5] Hz,
/// drawn log-uniform so most of the drift sits at respiratory rates.
fn synth_drift(rng: &mut Rng, n: usize, fs: f64) -> Vec<f64> {
    let components: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                (rng.range(0.05f64.ln(), 0.5f64.ln())).exp(),
                rng.range(0.0, std::f64::consts::TAU),
                rng.range(0.5, 1.0),
            )
        })
        .collect();
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            components
                .iter()
                .map(|(f, phase, amp)| amp * (std::f64::consts::TAU * f * t + phase).sin())
                .sum()
        })
        .collect()
}

/// Random step discontinuities at Poisson rate 0.2/s.
fn add_steps(rng: &mut Rng, samples: &mut [f64], fs: f64) {
    let n = samples.len();
    let mut t = 0.0f64;
    loop {
        // exponential inter-arrival times
        let u = rng.uniform().max(1e-12);
        t += -u.ln() / 0.2;
        let idx = (t * fs) as usize;
        if idx >= n {
            break;
        }
        let height = rng.normal() * 0.8;
        for v in samples[idx..].iter_mut() {
            *v += height;
        }
    }
}

fn normalize_scratch(drift: &mut Vec<f64>, hf: &[f64], hf_weight: f64) -> Vec<f64> {
    normalize_rms(drift);
    let mut hf_n = hf.to_vec();
    normalize_rms(&mut hf_n);
    drift
        .iter()
        .zip(&hf_n)
        .map(|(d, h)| d + hf_weight * h)
        .collect()
}

/// Slow nonnegative envelope with deep troughs: motion artefact comes in
/// bursts, with near-quiet intervals between movement episodes.
fn synth_envelope(rng: &mut Rng, n: usize, fs: f64) -> Vec<f64> {
    let slow = synth_drift(rng, n, fs);
    let peak = slow.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    slow.iter().map(|v| 1.0 + 0.9 * v / peak).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Label;

    fn tone(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (std::f64::consts::TAU * freq * i as f64 / fs).sin())
            .collect()
    }

    #[test]
    fn snr_of_signal_with_itself_is_zero() {
        let x = tone(3.0, 100.0, 1000);
        let db = compute_snr(&x, &x).unwrap();
        assert!(db.abs() < 1e-12);
    }

    #[test]
    fn equal_rms_tones_give_zero_db() {
        let fs = 1000.0;
        let a = tone(5.0, fs, 10_000);
        let b = tone(17.0, fs, 10_000);
        let db = compute_snr(&a, &b).unwrap();
        assert!(db.abs() < 1e-9, "got {db}");
    }

    #[test]
    fn tenth_power_noise_is_ten_db() {
        let fs = 1000.0;
        let a = tone(5.0, fs, 10_000);
        let b: Vec<f64> = tone(17.0, fs, 10_000)
            .iter()
            .map(|v| v / 10f64.sqrt())
            .collect();
        let db = compute_snr(&a, &b).unwrap();
        assert!((db - 10.0).abs() < 1e-9, "got {db}");
    }

    #[test]
    fn scale_factor_closed_form() {
        let fs = 1000.0;
        let a = tone(5.0, fs, 10_000);
        let b = tone(17.0, fs, 10_000);
        let k = scale_factor_for_snr(&a, &b, 0.0).unwrap();
        assert!((k - 1.0).abs() < 1e-9);
        let k10 = scale_factor_for_snr(&a, &b, 10.0).unwrap();
        assert!((k10 - 10f64.powf(-0.5)).abs() < 1e-9, "got {k10}");
    }

    #[test]
    fn scaling_hits_target_within_nano_db() {
        let mut rng = Rng::new(99);
        for _ in 0..200 {
            let n = 500 + rng.below(500);
            let signal: Vec<f64> = (0..n).map(|_| rng.range(-2.0, 2.0)).collect();
            let noise: Vec<f64> = (0..n).map(|_| rng.range(-1.0, 1.0)).collect();
            let target = rng.range(5.0, 10.0);
            let k = scale_factor_for_snr(&signal, &noise, target).unwrap();
            let scaled: Vec<f64> = noise.iter().map(|v| k * v).collect();
            let got = compute_snr(&signal, &scaled).unwrap();
            assert!((got - target).abs() <= 1e-9, "{got} vs {target}");
        }
    }

    #[test]
    fn scale_factor_is_scale_invariant_and_monotone() {
        let mut rng = Rng::new(7);
        let signal: Vec<f64> = (0..800).map(|_| rng.range(-1.0, 1.0)).collect();
        let noise: Vec<f64> = (0..800).map(|_| rng.range(-1.0, 1.0)).collect();
        let k = scale_factor_for_snr(&signal, &noise, 7.0).unwrap();
        let scaled_sig: Vec<f64> = signal.iter().map(|v| 3.0 * v).collect();
        let k3 = scale_factor_for_snr(&scaled_sig, &noise, 7.0).unwrap();
        assert!((k3 - 3.0 * k).abs() < 1e-9 * k3.abs());

        let mut prev = f64::INFINITY;
        for target in [5.0, 6.0, 7.5, 9.0, 10.0] {
            let kt = scale_factor_for_snr(&signal, &noise, target).unwrap();
            assert!(kt < prev, "k not strictly decreasing in target");
            prev = kt;
        }
    }

    #[test]
    fn zero_noise_rejected() {
        let x = tone(3.0, 100.0, 100);
        let z = vec![0.0; 100];
        assert!(matches!(compute_snr(&x, &z), Err(Error::ZeroNoisePower)));
        assert!(matches!(
            scale_factor_for_snr(&x, &z, 5.0),
            Err(Error::ZeroNoisePower)
        ));
    }

    #[test]
    fn length_mismatch_rejected() {
        let x = vec![1.0; 10];
        let y = vec![1.0; 11];
        assert!(matches!(compute_snr(&x, &y), Err(Error::LengthMismatch { .. })));
    }

    fn clean_record(id: &str, n: usize) -> EcgRecord {
        let fs = 500.0;
        let lead: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let phase = (t % 0.8 - 0.4) / 0.01;
                (-0.5 * phase * phase).exp()
            })
            .collect();
        let lead2: Vec<f64> = lead.iter().map(|v| 0.6 * v).collect();
        EcgRecord::new(id, vec![lead2, lead], fs, Label::Normal, Variant::Clean).unwrap()
    }

    #[test]
    fn apply_noise_satisfies_shared_factor_identity() {
        let record = clean_record("r1", 4000);
        let bank = NoiseBank::synth(60.0, 500.0, 11).unwrap();
        let policy = SnrPolicy::new(5.0, 10.0, 42).unwrap();
        let out = apply_noise(&record, &bank, &policy).unwrap();

        assert!((5.0..=10.0).contains(&out.snr_db));
        let len = record.samples_per_lead();
        for lead_idx in 0..record.leads.len() {
            for i in 0..len {
                let bw = bank.bw[out.window_offset + i];
                let em = bank.em[out.window_offset + i];
                let ma = bank.ma[out.window_offset + i];
                let expected = record.leads[lead_idx][i] + out.scale * (bw + em + ma);
                let got = out.all.leads[lead_idx][i];
                assert_eq!(
                    got.to_bits(),
                    expected.to_bits(),
                    "identity broken at lead {lead_idx} sample {i}"
                );
            }
        }
    }

    #[test]
    fn apply_noise_hits_drawn_snr_exactly() {
        let record = clean_record("r2", 3500);
        let bank = NoiseBank::synth(30.0, 500.0, 3).unwrap();
        let policy = SnrPolicy::new(5.0, 10.0, 1).unwrap();
        let out = apply_noise(&record, &bank, &policy).unwrap();

        let reference = record.lead(policy.reference_lead).unwrap();
        let scaled: Vec<f64> = bank.all[out.window_offset..out.window_offset + reference.len()]
            .iter()
            .map(|v| out.scale * v)
            .collect();
        let got = compute_snr(reference, &scaled).unwrap();
        assert!((got - out.snr_db).abs() <= 1e-9, "{got} vs {}", out.snr_db);
    }

    #[test]
    fn apply_noise_deterministic_per_seed_and_id() {
        let record = clean_record("r3", 2000);
        let bank = NoiseBank::synth(20.0, 500.0, 5).unwrap();
        let policy = SnrPolicy::new(5.0, 10.0, 9).unwrap();
        let a = apply_noise(&record, &bank, &policy).unwrap();
        let b = apply_noise(&record, &bank, &policy).unwrap();
        assert_eq!(a.window_offset, b.window_offset);
        assert_eq!(a.snr_db.to_bits(), b.snr_db.to_bits());
        assert_eq!(a.all.leads, b.all.leads);

        let other = clean_record("r4", 2000);
        let c = apply_noise(&other, &bank, &policy).unwrap();
        assert!(
            c.window_offset != a.window_offset || c.snr_db != a.snr_db,
            "distinct ids should draw distinct randomness"
        );
    }

    #[test]
    fn per_lead_windows_differ_but_share_the_factor() {
        let record = clean_record("r9", 3000);
        let bank = NoiseBank::synth(60.0, 500.0, 23).unwrap();
        let mut policy = SnrPolicy::new(5.0, 10.0, 23).unwrap();
        policy.per_lead_windows = true;
        let out = apply_noise(&record, &bank, &policy).unwrap();

        let offsets = out.per_lead_offsets.as_ref().unwrap();
        assert_eq!(offsets.len(), 2);
        assert_eq!(offsets[policy.reference_lead], out.window_offset);
        assert_ne!(offsets[0], offsets[1], "independent windows expected");

        // shared-factor identity still holds lead by lead
        let len = record.samples_per_lead();
        for (lead_idx, &off) in offsets.iter().enumerate() {
            for i in 0..len {
                let sum = bank.bw[off + i] + bank.em[off + i] + bank.ma[off + i];
                let expected = record.leads[lead_idx][i] + out.scale * sum;
                assert_eq!(out.all.leads[lead_idx][i].to_bits(), expected.to_bits());
            }
        }
    }

    #[test]
    fn apply_noise_rejects_short_bank_and_wrong_variant() {
        let record = clean_record("r5", 4000);
        let bank = NoiseBank::synth(2.0, 500.0, 5).unwrap();
        assert!(matches!(
            apply_noise(&record, &bank, &SnrPolicy::default()),
            Err(Error::BankTooShort { .. })
        ));

        let mut raw = clean_record("r6", 1000);
        raw.variant = Variant::Raw;
        let bank = NoiseBank::synth(10.0, 500.0, 5).unwrap();
        assert!(matches!(
            apply_noise(&raw, &bank, &SnrPolicy::default()),
            Err(Error::VariantMismatch { .. })
        ));
    }

    #[test]
    fn zero_amplitude_bank_rejected() {
        let record = clean_record("r7", 1000);
        let zero = NoiseSegment {
            samples: vec![0.0; 2000],
            fs: 500.0,
            kind: NoiseKind::Bw,
        };
        let bank = NoiseBank::new(
            zero.clone(),
            NoiseSegment { kind: NoiseKind::Em, ..zero.clone() },
            NoiseSegment { kind: NoiseKind::Ma, ..zero },
        )
        .unwrap();
        assert!(matches!(
            apply_noise(&record, &bank, &SnrPolicy::default()),
            Err(Error::ZeroNoisePower)
        ));
    }

    #[test]
    fn snr_of_raw_round_trips_a_known_level() {
        let clean = clean_record("r8", 4000);
        let bank = NoiseBank::synth(20.0, 500.0, 17).unwrap();
        let reference = clean.lead(1).unwrap();
        let window = &bank.all[..reference.len()];
        let k = scale_factor_for_snr(reference, window, 7.0).unwrap();
        let mut raw = clean.clone();
        raw.variant = Variant::Raw;
        for lead in raw.leads.iter_mut() {
            for (v, n) in lead.iter_mut().zip(window) {
                *v += k * n;
            }
        }
        let db = snr_of_raw(&raw, &clean, 1).unwrap();
        assert!((db - 7.0).abs() <= 1e-9, "got {db}");

        let mut same = clean.clone();
        same.variant = Variant::Raw;
        assert_eq!(snr_of_raw(&same, &clean, 1).unwrap(), f64::INFINITY);

        // noise equal to the clean signal itself: 0 dB
        let mut doubled = clean.clone();
        doubled.variant = Variant::Raw;
        for lead in doubled.leads.iter_mut() {
            for v in lead.iter_mut() {
                *v *= 2.0;
            }
        }
        let db = snr_of_raw(&doubled, &clean, 1).unwrap();
        assert!(db.abs() < 1e-12, "got {db}");
    }

    /// Fraction of spectral power below `split_hz`, Hann-windowed periodogram
    /// so the oracle's own leakage does not pollute the band split.
    fn low_band_power_fraction(x: &[f64], fs: f64, split_hz: f64) -> f64 {
        let n = x.len();
        let windowed: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let w = 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos();
                v * w
            })
            .collect();
        let mut below = 0.0;
        let mut total = 0.0;
        for k in 1..n / 2 {
            let freq = k as f64 * fs / n as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in windowed.iter().enumerate() {
                let th = std::f64::consts::TAU * k as f64 * i as f64 / n as f64;
                re += v * th.cos();
                im -= v * th.sin();
            }
            let p = re * re + im * im;
            total += p;
            if freq < split_hz {
                below += p;
            }
        }
        below / total
    }

    #[test]
    fn bw_noise_is_almost_entirely_below_one_hz() {
        let seg = synth_noise(NoiseKind::Bw, 10.0, 500.0, 21).unwrap();
        // decimate for the slow periodogram oracle: bw lives below 0.5 Hz
        let dec: Vec<f64> = seg.samples.iter().step_by(5).cloned().collect();
        let frac = low_band_power_fraction(&dec, 100.0, 1.0);
        assert!(frac > 0.99, "bw power below 1 Hz: {frac}");
    }

    #[test]
    fn ma_noise_concentrates_in_band() {
        let seg = synth_noise(NoiseKind::Ma, 10.0, 500.0, 21).unwrap();
        let dec: Vec<f64> = seg.samples.iter().step_by(5).cloned().collect();
        let below_1 = low_band_power_fraction(&dec, 100.0, 1.0);
        let below_25 = low_band_power_fraction(&dec, 100.0, 25.0);
        let in_band = below_25 - below_1;
        assert!(in_band > 0.95, "ma power in 1-20 Hz band: {in_band}");
    }

    #[test]
    fn synth_noise_unit_rms_and_deterministic() {
        for kind in [NoiseKind::Bw, NoiseKind::Em, NoiseKind::Ma] {
            let a = synth_noise(kind, 5.0, 250.0, 77).unwrap();
            let b = synth_noise(kind, 5.0, 250.0, 77).unwrap();
            assert_eq!(a.samples, b.samples, "{kind:?} not deterministic");
            let rms = mean_power(&a.samples).sqrt();
            assert!((rms - 1.0).abs() < 1e-9, "{kind:?} rms {rms}");
        }
    }

    #[test]
    fn bank_all_is_pointwise_sum() {
        let bank = NoiseBank::synth(5.0, 250.0, 13).unwrap();
        for i in 0..bank.len() {
            let expected = bank.bw[i] + bank.em[i] + bank.ma[i];
            assert_eq!(bank.all[i].to_bits(), expected.to_bits());
        }
    }
}
