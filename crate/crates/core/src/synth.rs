//! Synthetic three-class ECG-like corpus.
//!
//! The generator's contract is class separability along two axes: a rhythm-based class (AF-like: irregular RR plus a 4-9 Hz
//! fibrillatory oscillation) and a morphology-based class (STD-like: the
//! Normal template with its ST segment depressed by a fixed fraction of the
//! R amplitude). It makes no claim of clinical fidelity.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::{EcgRecord, Label, Variant};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_per_class: usize,
    pub fs: f64,
    pub duration_s: f64,
    pub seed: u64,
    /// number of leads; lead 1 (lead II) carries the full-amplitude signal
    pub leads: usize,
    /// baseline drift amplitude in the raw output
    pub drift_amplitude: f64,
    /// white measurement noise sigma in the raw output
    pub noise_sigma: f64,
    /// ST depression as a fraction of R amplitude, STD class only
    pub st_depression: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_per_class: 10,
            fs: 500.0,
            duration_s: 10.0,
            seed: 0,
            leads: 2,
            drift_amplitude: 0.1,
            noise_sigma: 0.01,
            st_depression: 0.15,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::InvalidArgument("n_per_class must be positive".into()));
        }
        if !(self.fs > 0.0 && self.duration_s > 0.0) {
            return Err(Error::InvalidArgument("fs and duration must be positive".into()));
        }
        if self.duration_s < 2.0 {
            return Err(Error::InvalidArgument(
                "records shorter than 2 s cannot carry a rhythm".into(),
            ));
        }
        if self.leads == 0 {
            return Err(Error::InvalidArgument("need at least one lead".into()));
        }
        Ok(())
    }
}

/// Per-record randomness, drawn once and shared across class renderings so
/// tests can compare a Normal and an STD record beat for beat.
#[derive(Debug, Clone)]
pub struct RecordParams {
    /// mean RR interval, seconds
    pub rr_s: f64,
    /// overall amplitude scale
    pub amplitude: f64,
    /// T wave amplitude scale
    pub t_scale: f64,
    /// fibrillatory oscillation frequency (AF only)
    pub fib_hz: f64,
    pub fib_amplitude: f64,
    pub fib_phase: f64,
    /// per-beat RR multipliers for the irregular rhythm (AF only)
    pub rr_multipliers: Vec<f64>,
    /// drift components (frequency, phase, relative amplitude)
    pub drift: Vec<(f64, f64, f64)>,
    pub noise_seed: u64,
}

impl RecordParams {
    pub fn draw(rng: &mut Rng, duration_s: f64) -> Self {
        let rr_s = rng.range(0.65, 1.0);
        let amplitude = rng.range(0.8, 1.2);
        let t_scale = rng.range(0.7, 1.3);
        let fib_hz = rng.range(4.0, 9.0);
        let fib_amplitude = rng.range(0.06, 0.12);
        let fib_phase = rng.range(0.0, std::f64::consts::TAU);

        // enough multipliers to cover the record; the renderer rescales the
        // subset it actually uses to a fixed coefficient of variation
        let beats = (duration_s / (rr_s * 0.5)).ceil() as usize + 6;
        let multipliers: Vec<f64> = (0..beats)
            .map(|_| (1.0 + 0.2 * rng.normal()).clamp(0.6, 1.4))
            .collect();

        let drift = (0..2)
            .map(|_| {
                (
                    rng.range(0.05, 0.3),
                    rng.range(0.0, std::f64::consts::TAU),
                    rng.range(0.5, 1.0),
                )
            })
            .collect();
        RecordParams {
            rr_s,
            amplitude,
            t_scale,
            fib_hz,
            fib_amplitude,
            fib_phase,
            rr_multipliers: multipliers,
            drift,
            noise_seed: rng.next_u64(),
        }
    }
}

fn gaussian(t: f64, center: f64, sigma: f64) -> f64 {
    let z = (t - center) / sigma;
    (-0.5 * z * z).exp()
}

/// Smooth plateau: 1 on [start+ramp, end-ramp], cosine ramps outside.
fn plateau(t: f64, start: f64, end: f64, ramp: f64) -> f64 {
    if t <= start || t >= end {
        0.0
    } else if t < start + ramp {
        0.5 - 0.5 * (std::f64::consts::PI * (t - start) / ramp).cos()
    } else if t > end - ramp {
        0.5 - 0.5 * (std::f64::consts::PI * (end - t) / ramp).cos()
    } else {
        1.0
    }
}

/// One beat, R peak at t = 0; `st_level` shifts the ST segment.
fn beat_waveform(t: f64, t_scale: f64, with_p: bool, st_level: f64) -> f64 {
    let mut v = 0.0;
    if with_p {
        v += 0.12 * gaussian(t, -0.16, 0.02);
    }
    v += -0.10 * gaussian(t, -0.026, 0.008);
    v += gaussian(t, 0.0, 0.009);
    v += -0.18 * gaussian(t, 0.026, 0.008);
    v += 0.25 * t_scale * gaussian(t, 0.30, 0.035);
    v += st_level * plateau(t, 0.05, 0.15, 0.015);
    v
}

/// Window where the ST plateau is flat; used by generation tests.
pub const ST_WINDOW_S: (f64, f64) = (0.07, 0.13);

/// Render one record of the given class from explicit parameters.
pub fn render_record(
    label: Label,
    params: &RecordParams,
    config: &SynthConfig,
    id: impl Into<String>,
) -> Result<EcgRecord> {
    config.validate()?;
    let n = (config.duration_s * config.fs).round() as usize;
    let irregular = label == Label::Af;
    // relative to the unit R peak; the per-record amplitude scale is applied
    // once, to the whole beat waveform
    let st_level = if label == Label::Std {
        -config.st_depression
    } else {
        0.0
    };

    // all beats land fully inside the record, so every RR interval is
    // measurable; the used intervals are rescaled to a coefficient of
    // variation of exactly 0.2 for the irregular rhythm
    let first_beat = 0.35;
    let last_allowed = config.duration_s - 0.55;
    let mut intervals = Vec::new();
    let mut t = first_beat;
    let mut beat_idx = 0usize;
    loop {
        let multiplier = if irregular {
            params.rr_multipliers[beat_idx % params.rr_multipliers.len()]
        } else {
            1.0
        };
        let step = params.rr_s * multiplier;
        if t + step > last_allowed {
            break;
        }
        intervals.push(step);
        t += step;
        beat_idx += 1;
    }
    if irregular && intervals.len() > 1 {
        let n_int = intervals.len() as f64;
        let mean = intervals.iter().sum::<f64>() / n_int;
        let std = (intervals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n_int).sqrt();
        if std > 1e-9 {
            let factor = 0.2 / (std / mean);
            for r in intervals.iter_mut() {
                *r = mean + (*r - mean) * factor;
            }
        }
    }
    let mut beat_times = vec![first_beat];
    for step in &intervals {
        beat_times.push(beat_times.last().unwrap() + step);
    }

    let mut base = vec![0.0f64; n];
    for &bt in &beat_times {
        let lo = (((bt - 0.30) * config.fs).floor().max(0.0)) as usize;
        let hi = ((((bt + 0.55) * config.fs).ceil()) as usize).min(n);
        for (i, v) in base.iter_mut().enumerate().take(hi).skip(lo) {
            let t = i as f64 / config.fs - bt;
            *v += params.amplitude * beat_waveform(t, params.t_scale, true, st_level);
        }
    }

    if irregular {
        for (i, v) in base.iter_mut().enumerate() {
            let t = i as f64 / config.fs;
            *v += params.amplitude
                * params.fib_amplitude
                * (std::f64::consts::TAU * params.fib_hz * t + params.fib_phase).sin();
        }
    }

    let mut noise_rng = Rng::new(params.noise_seed);
    let drifted: Vec<f64> = base
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let t = i as f64 / config.fs;
            let drift: f64 = params
                .drift
                .iter()
                .map(|(f, phase, amp)| amp * (std::f64::consts::TAU * f * t + phase).sin())
                .sum();
            v + config.drift_amplitude * drift
        })
        .collect();

    let mut leads = Vec::with_capacity(config.leads);
    for lead_idx in 0..config.leads {
        // lead 1 carries the full signal; others are attenuated projections
        let gain = if lead_idx == 1 || config.leads == 1 {
            1.0
        } else {
            0.55
        };
        let lead: Vec<f64> = drifted
            .iter()
            .map(|v| gain * v + config.noise_sigma * noise_rng.normal())
            .collect();
        leads.push(lead);
    }

    EcgRecord::new(id, leads, config.fs, label, Variant::Raw)
}

fn id_prefix(label: Label) -> &'static str {
    match label {
        Label::Af => "af",
        Label::Normal => "nm",
        Label::Std => "sd",
    }
}

/// Generate the full three-class corpus, deterministic per seed.
pub fn synth_corpus(config: &SynthConfig) -> Result<Vec<EcgRecord>> {
    config.validate()?;
    let mut records = Vec::with_capacity(3 * config.n_per_class);
    for label in crate::types::LABELS {
        for i in 0..config.n_per_class {
            let id = format!("{}{:04}", id_prefix(label), i);
            let mut rng = Rng::substream(config.seed, &id);
            let params = RecordParams::draw(&mut rng, config.duration_s);
            records.push(render_record(label, &params, config, id)?);
        }
    }
    Ok(records)
}
