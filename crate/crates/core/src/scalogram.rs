//! Scalogram images: continuous wavelet transform with an analytic Morse
//! wavelet, 16 voices per octave, magnitude resampled to a 150x150 raster.
//!
//! Each scale row is computed in the frequency domain: the signal spectrum is
//! multiplied by the scaled wavelet (zero at negative frequencies, so rows
//! are analytic) and transformed back. The wavelet is normalized to peak
//! value 2 at its peak angular frequency (beta/gamma)^(1/gamma), which makes
//! a unit real sinusoid produce a unit-magnitude ridge.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::types::{EcgRecord, ImageKind, TransformImage, IMAGE_SIZE};

#[derive(Debug, Clone)]
pub struct MorseConfig {
    pub gamma: f64,
    pub beta: f64,
    pub voices_per_octave: usize,
    pub freq_min_hz: f64,
    /// upper band edge; defaults to 0.95 * Nyquist when None
    pub freq_max_hz: Option<f64>,
    /// zero-based lead index (1 = lead II in a standard 12-lead layout)
    pub lead: usize,
    /// normalize by this magnitude instead of the per-image maximum (values
    /// above it clamp to full intensity); useful for fixing limits across a
    /// dataset
    pub fixed_limit: Option<f64>,
}

impl Default for MorseConfig {
    fn default() -> Self {
        MorseConfig {
            gamma: 3.0,
            beta: 20.0,
            voices_per_octave: 16,
            freq_min_hz: 0.5,
            freq_max_hz: None,
            lead: 1,
            fixed_limit: None,
        }
    }
}

impl MorseConfig {
    pub fn freq_max(&self, fs: f64) -> f64 {
        self.freq_max_hz.unwrap_or(fs / 2.0 * 0.95)
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.gamma > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "morse parameters gamma {} beta {} must be positive",
                self.gamma, self.beta
            )));
        }
        if self.voices_per_octave == 0 {
            return Err(Error::InvalidSpec("need at least one voice per octave".into()));
        }
        let fmax = self.freq_max(fs);
        if !(0.0 < self.freq_min_hz && self.freq_min_hz < fmax && fmax <= fs / 2.0) {
            return Err(Error::InvalidSpec(format!(
                "band [{}, {}] invalid for fs {}",
                self.freq_min_hz, fmax, fs
            )));
        }
        Ok(())
    }

    /// Geometric frequency ladder covering [freq_min, freq_max].
    pub fn row_frequencies(&self, fs: f64) -> Vec<f64> {
        let fmax = self.freq_max(fs);
        let v = self.voices_per_octave as f64;
        let octaves = (fmax / self.freq_min_hz).log2();
        let rows = (v * octaves).floor() as usize + 1;
        (0..rows)
            .map(|j| self.freq_min_hz * 2f64.powf(j as f64 / v))
            .collect()
    }
}

/// Peak angular frequency of the (gamma, beta) Morse wavelet.
pub fn morse_peak_omega(gamma: f64, beta: f64) -> f64 {
    (beta / gamma).powf(1.0 / gamma)
}

/// Frequency-domain Morse wavelet, normalized to peak value 2:
/// psi(w) = 2 * exp(beta * ln(w / w_p) - (w^gamma - w_p^gamma)) for w > 0.
pub fn morse_wavelet_freq(gamma: f64, beta: f64, omega: &[f64]) -> Vec<f64> {
    let peak = morse_peak_omega(gamma, beta);
    let peak_pow = peak.powf(gamma);
    omega
        .iter()
        .map(|&w| {
            if w <= 0.0 {
                0.0
            } else {
                2.0 * (beta * (w / peak).ln() - (w.powf(gamma) - peak_pow)).exp()
            }
        })
        .collect()
}

/// Precomputed transform machinery for one signal length.
pub struct MorseFilterBank {
    signal_len: usize,
    padded_len: usize,
    frequencies: Vec<f64>,
    /// per-row frequency response at each FFT bin
    filters: Vec<Vec<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl MorseFilterBank {
    pub fn new(signal_len: usize, fs: f64, config: &MorseConfig) -> Result<Self> {
        config.validate(fs)?;
        if signal_len < 2 {
            return Err(Error::SignalTooShort {
                need: 2,
                got: signal_len,
            });
        }
        let padded_len = signal_len.next_power_of_two();
        let frequencies = config.row_frequencies(fs);
        let peak = morse_peak_omega(config.gamma, config.beta);

        let mut filters = Vec::with_capacity(frequencies.len());
        for &fc in &frequencies {
            // psi evaluated at omega_k * s with s = peak / (2 pi fc):
            // the argument reduces to peak * f_k / fc
            let omegas: Vec<f64> = (0..padded_len)
                .map(|k| {
                    if k == 0 || k > padded_len / 2 {
                        0.0
                    } else {
                        let f_k = k as f64 * fs / padded_len as f64;
                        peak * f_k / fc
                    }
                })
                .collect();
            filters.push(morse_wavelet_freq(config.gamma, config.beta, &omegas));
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(padded_len);
        let inverse = planner.plan_fft_inverse(padded_len);
        Ok(MorseFilterBank {
            signal_len,
            padded_len,
            frequencies,
            filters,
            forward,
            inverse,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn rows(&self) -> usize {
        self.frequencies.len()
    }

    /// Complex coefficients, rows indexed by ascending frequency.
    pub fn cwt(&self, signal: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        if signal.len() != self.signal_len {
            return Err(Error::LengthMismatch {
                left: signal.len(),
                right: self.signal_len,
            });
        }
        let mut spectrum: Vec<Complex64> = signal
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(self.padded_len)
            .collect();
        self.forward.process(&mut spectrum);

        let norm = 1.0 / self.padded_len as f64;
        let mut rows = Vec::with_capacity(self.filters.len());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.padded_len];
        for filter in &self.filters {
            for (dst, (s, f)) in buf.iter_mut().zip(spectrum.iter().zip(filter)) {
                *dst = s * f;
            }
            self.inverse.process(&mut buf);
            rows.push(buf[..self.signal_len].iter().map(|c| c * norm).collect());
        }
        Ok(rows)
    }
}

/// One-shot transform; builds a filter bank for this signal length.
pub fn cwt(signal: &[f64], fs: f64, config: &MorseConfig) -> Result<Vec<Vec<Complex64>>> {
    MorseFilterBank::new(signal.len(), fs, config)?.cwt(signal)
}

/// Area-average a row of length n onto `out_len` columns.
fn resample_columns(row: &[f64], out_len: usize) -> Vec<f64> {
    let n = row.len() as f64;
    let step = n / out_len as f64;
    (0..out_len)
        .map(|j| {
            let start = j as f64 * step;
            let end = start + step;
            let mut acc = 0.0;
            let mut i = start.floor() as usize;
            while (i as f64) < end && i < row.len() {
                let lo = start.max(i as f64);
                let hi = end.min(i as f64 + 1.0);
                if hi > lo {
                    acc += row[i] * (hi - lo);
                }
                i += 1;
            }
            acc / step
        })
        .collect()
}

/// Scalogram image: |cwt| resampled to 150x150 (area-averaged time, linearly
/// interpolated scale, low frequency at the bottom row), normalized to [0,1]
/// by the per-image maximum.
pub fn scalogram_image(record: &EcgRecord, config: &MorseConfig) -> Result<TransformImage> {
    let bank = MorseFilterBank::new(record.samples_per_lead(), record.fs, config)?;
    scalogram_image_with_bank(record, config, &bank)
}

/// Same as `scalogram_image` with a prebuilt bank (batch use).
pub fn scalogram_image_with_bank(
    record: &EcgRecord,
    config: &MorseConfig,
    bank: &MorseFilterBank,
) -> Result<TransformImage> {
    let lead = record.lead(config.lead)?;
    let coefficients = bank.cwt(lead)?;

    // magnitude, then time-axis reduction to 150 columns per scale row
    let condensed: Vec<Vec<f64>> = coefficients
        .iter()
        .map(|row| {
            let mags: Vec<f64> = row.iter().map(|c| c.norm()).collect();
            resample_columns(&mags, IMAGE_SIZE)
        })
        .collect();

    // scale-axis linear interpolation onto 150 rows, low frequency at bottom
    let in_rows = condensed.len();
    let mut pixels = vec![0.0f64; IMAGE_SIZE * IMAGE_SIZE];
    for out_row in 0..IMAGE_SIZE {
        let from_bottom = (IMAGE_SIZE - 1 - out_row) as f64;
        let pos = from_bottom * (in_rows - 1) as f64 / (IMAGE_SIZE - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        for col in 0..IMAGE_SIZE {
            let a = condensed[lo][col];
            let b = condensed[hi][col];
            pixels[out_row * IMAGE_SIZE + col] = a + (b - a) * frac;
        }
    }

    let limit = match config.fixed_limit {
        Some(l) if l > 0.0 => l,
        _ => {
            let max = pixels.iter().cloned().fold(0.0f64, f64::max);
            if max == 0.0 {
                return Err(Error::DegenerateImage(format!(
                    "record {}: all-zero wavelet magnitude, nothing to normalize",
                    record.id
                )));
            }
            max
        }
    };
    for p in pixels.iter_mut() {
        *p = (*p / limit).min(1.0);
    }
    TransformImage::new(pixels, ImageKind::Scalogram, record.id.clone(), record.variant)
}
