//! Render a Morse-wavelet scalogram and locate the spectral ridge of a known
//! tone. Writes the raster as a PGM file.
//!
//!     cargo run --release --example scalogram_image

use ecg_robustness::scalogram::{cwt, scalogram_image, MorseConfig};
use ecg_robustness::store::{write_image_file, ImageFormat};
use ecg_robustness::types::{EcgRecord, Label, Variant};

fn main() {
    let fs = 500.0;
    let n = 5000;
    // two tones: one inside the fibrillatory band, one higher
    let lead: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            (std::f64::consts::TAU * 6.0 * t).sin() + 0.5 * (std::f64::consts::TAU * 25.0 * t).sin()
        })
        .collect();
    let record = EcgRecord::new("scl-demo", vec![lead], fs, Label::Normal, Variant::Clean).unwrap();

    let config = MorseConfig {
        lead: 0,
        ..MorseConfig::default()
    };
    let rows = cwt(record.lead(0).unwrap(), fs, &config).expect("cwt");
    let freqs = config.row_frequencies(fs);
    println!("{} scale rows over [{:.2}, {:.1}] Hz, 16 voices per octave", rows.len(), freqs[0], freqs.last().unwrap());

    let ridge = rows
        .iter()
        .enumerate()
        .map(|(i, row)| (i, row.iter().map(|c| c.norm()).sum::<f64>() / row.len() as f64))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    println!("strongest ridge at {:.3} Hz (row {}), mean magnitude {:.3}", freqs[ridge.0], ridge.0, ridge.1);

    let image = scalogram_image(&record, &config).expect("scalogram");
    let bright = image.pixels.iter().filter(|p| **p > 0.5).count();
    println!("scalogram image: {} pixels above half intensity", bright);

    let out = std::env::temp_dir().join("scalogram_demo.pgm");
    write_image_file(&image, &out, ImageFormat::Pgm).expect("write");
    println!("wrote {}", out.display());
}
