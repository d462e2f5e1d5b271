//! SPAR attractor images: three-dimensional delay embedding, projection onto
//! the plane perpendicular to the main diagonal, and density rasterization.
//!
//! The projection discards the (1,1,1) direction, so a constant offset added
//! to every sample maps to the same attractor; with the delay set to a third
//! of the estimated cycle, heart rate is factored out as well. To make the
//! offset claim hold bit-for-bit in floating point, the signal is re-anchored
//! to its first sample before embedding (an exact no-op in real arithmetic).

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::{EcgRecord, ImageKind, TransformImage, IMAGE_SIZE};

/// How raw histogram counts become intensities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityScale {
    Linear,
    Log1p,
}

#[derive(Debug, Clone)]
pub struct SparConfig {
    /// zero-based lead index (1 = lead II in a standard 12-lead layout)
    pub lead: usize,
    /// delay as a fraction of the estimated mean cycle
    pub tau_fraction: f64,
    pub density_scale: DensityScale,
}

impl Default for SparConfig {
    fn default() -> Self {
        SparConfig {
            lead: 1,
            tau_fraction: 1.0 / 3.0,
            density_scale: DensityScale::Log1p,
        }
    }
}

/// Cycle-length estimate plus whether the estimator fell back to the default.
#[derive(Debug, Clone, Copy)]
pub struct CycleEstimate {
    pub seconds: f64,
    pub fallback: bool,
}

const MIN_CYCLE_S: f64 = 0.25;
const MAX_CYCLE_S: f64 = 2.0;
const FALLBACK_CYCLE_S: f64 = 0.8;
const PERIODICITY_THRESHOLD: f64 = 0.1;

/// Mean cycle length: the lag in [0.25 s, 2 s] maximizing the normalized
/// autocorrelation of the detrended signal. Falls back to 0.8 s with a flag
/// when no lag correlates above 0.1.
///
/// Detrending removes the slow baseline (median cascade) and the mean, so
/// drift cannot drag the autocorrelation peak away from the heart rhythm.
pub fn estimate_cycle_length(signal: &[f64], fs: f64) -> Result<CycleEstimate> {
    let min_len = (2.0 * fs) as usize;
    if signal.len() < min_len {
        return Err(Error::SignalTooShort {
            need: min_len,
            got: signal.len(),
        });
    }
    let debased = if fs >= 10.0 {
        crate::preprocess::remove_baseline(signal, fs)?
    } else {
        signal.to_vec()
    };
    let mean = debased.iter().sum::<f64>() / debased.len() as f64;
    let detrended: Vec<f64> = debased.iter().map(|v| v - mean).collect();
    let energy: f64 = detrended.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(Error::InvalidArgument("signal is constant".into()));
    }

    let lo = ((MIN_CYCLE_S * fs).round() as usize).max(1);
    let hi = ((MAX_CYCLE_S * fs).round() as usize).min(signal.len() - 1);
    let mut best_lag = 0;
    let mut best = f64::NEG_INFINITY;
    for lag in lo..=hi {
        let mut acc = 0.0;
        for i in 0..detrended.len() - lag {
            acc += detrended[i] * detrended[i + lag];
        }
        let r = acc / energy;
        if r > best {
            best = r;
            best_lag = lag;
        }
    }
    if best < PERIODICITY_THRESHOLD {
        return Ok(CycleEstimate {
            seconds: FALLBACK_CYCLE_S,
            fallback: true,
        });
    }
    Ok(CycleEstimate {
        seconds: best_lag as f64 / fs,
        fallback: false,
    })
}

/// Delay embedding: points (x_i, x_{i-tau}, x_{i-2tau}) for i from 2*tau.
pub fn delay_embed(signal: &[f64], tau_samples: usize) -> Result<Vec<[f64; 3]>> {
    if tau_samples == 0 {
        return Err(Error::InvalidArgument("tau must be at least one sample".into()));
    }
    if signal.len() <= 2 * tau_samples {
        return Err(Error::SignalTooShort {
            need: 2 * tau_samples + 1,
            got: signal.len(),
        });
    }
    Ok((2 * tau_samples..signal.len())
        .map(|i| [signal[i], signal[i - tau_samples], signal[i - 2 * tau_samples]])
        .collect())
}

const INV_SQRT6: f64 = 0.4082482904638630;
const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Project onto the plane perpendicular to (1,1,1):
/// v = (x + y - 2z)/sqrt(6), w = (x - z)/sqrt(2).
pub fn project_spar(points: &[[f64; 3]]) -> Vec<[f64; 2]> {
    points
        .iter()
        .map(|&[x, y, z]| [(x + y - 2.0 * z) * INV_SQRT6, (x - z) * INV_SQRT2])
        .collect()
}

/// Histogram the projected points over the symmetric square window
/// [-b, b]^2 with b the largest absolute coordinate, then normalize.
pub fn rasterize_density(points: &[[f64; 2]], scale: DensityScale) -> Result<TransformImageRaster> {
    if points.is_empty() {
        return Err(Error::EmptySignal);
    }
    let mut bound = 0.0f64;
    for p in points {
        bound = bound.max(p[0].abs()).max(p[1].abs());
    }
    if bound == 0.0 {
        bound = 1e-12;
    }

    let mut counts = vec![0u32; IMAGE_SIZE * IMAGE_SIZE];
    let grid = IMAGE_SIZE as f64;
    let bin_of = |coord: f64| -> usize {
        // dividing by the bound first makes the mapping exactly invariant
        // under common scaling of all coordinates
        let t = (coord / bound + 1.0) * 0.5 * grid;
        (t as isize).clamp(0, IMAGE_SIZE as isize - 1) as usize
    };
    for p in points {
        let col = bin_of(p[0]);
        let row = IMAGE_SIZE - 1 - bin_of(p[1]);
        counts[row * IMAGE_SIZE + col] += 1;
    }

    let max = *counts.iter().max().unwrap() as f64;
    let pixels: Vec<f64> = match scale {
        DensityScale::Linear => counts.iter().map(|&c| c as f64 / max).collect(),
        DensityScale::Log1p => counts
            .iter()
            .map(|&c| (1.0 + c as f64).ln() / (1.0 + max).ln())
            .collect(),
    };
    Ok(TransformImageRaster { pixels, counts })
}

/// A normalized raster plus the raw counts it came from.
pub struct TransformImageRaster {
    pub pixels: Vec<f64>,
    pub counts: Vec<u32>,
}

/// Full SPAR transform for one record.
pub fn spar_image(record: &EcgRecord, config: &SparConfig) -> Result<TransformImage> {
    let lead = record.lead(config.lead)?;
    // exact re-anchoring so constant offsets cancel bit-for-bit
    let anchored: Vec<f64> = lead.iter().map(|v| v - lead[0]).collect();

    let cycle = estimate_cycle_length(&anchored, record.fs)?;
    let tau = ((config.tau_fraction * cycle.seconds * record.fs).round() as usize).max(1);
    let points = delay_embed(&anchored, tau)?;
    let projected = project_spar(&points);
    let raster = rasterize_density(&projected, config.density_scale)?;

    let mut image = TransformImage::new(
        raster.pixels,
        ImageKind::Attractor,
        record.id.clone(),
        record.variant,
    )?;
    if cycle.fallback {
        image.warning = Some("no periodicity found; used 0.8 s default cycle".into());
    }
    Ok(image)
}

/// White-noise probe used by tests and examples for the fallback path.
pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::new(seed);
    (0..n).map(|_| rng.range(-1.0, 1.0)).collect()
}
