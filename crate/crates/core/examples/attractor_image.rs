//! Render a SPAR attractor image and demonstrate the two things it factors
//! out: constant offset and heart rate. Writes the raster as a PGM file.
//!
//!     cargo run --release --example attractor_image

use ecg_robustness::spar::{spar_image, SparConfig};
use ecg_robustness::store::{write_image_file, ImageFormat};
use ecg_robustness::synth::{render_record, RecordParams, SynthConfig};
use ecg_robustness::types::Label;

fn main() {
    let config = SynthConfig {
        drift_amplitude: 0.0,
        noise_sigma: 0.0,
        ..SynthConfig::default()
    };
    let mut rng = ecg_robustness::rng::Rng::new(4);
    let params = RecordParams::draw(&mut rng, config.duration_s);
    let mut record = render_record(Label::Normal, &params, &config, "spar-demo").unwrap();
    record.variant = ecg_robustness::types::Variant::Clean;

    let image = spar_image(&record, &SparConfig::default()).expect("attractor");
    let occupied = image.pixels.iter().filter(|p| **p > 0.0).count();
    println!("attractor for {}: {} of {} pixels occupied", record.id, occupied, image.pixels.len());

    // adding a constant to every sample leaves the raster bit-identical
    let mut shifted = record.clone();
    for lead in shifted.leads.iter_mut() {
        for v in lead.iter_mut() {
            *v += 2.5;
        }
    }
    let image2 = spar_image(&shifted, &SparConfig::default()).expect("attractor");
    println!(
        "offset +2.5 mV -> bit-identical image: {}",
        image.pixels.iter().zip(&image2.pixels).all(|(a, b)| a.to_bits() == b.to_bits())
    );

    // a faster heart with the same waveform maps to nearly the same raster
    let mut faster = params.clone();
    faster.rr_s = params.rr_s / 1.5;
    let mut quick = render_record(Label::Normal, &faster, &config, "spar-demo-fast").unwrap();
    quick.variant = ecg_robustness::types::Variant::Clean;
    let image3 = spar_image(&quick, &SparConfig::default()).expect("attractor");
    let mad: f64 = image.pixels.iter().zip(&image3.pixels).map(|(a, b)| (a - b).abs()).sum::<f64>()
        / image.pixels.len() as f64;
    println!("heart rate x1.5 -> mean absolute pixel difference {mad:.4}");

    let out = std::env::temp_dir().join("spar_demo.pgm");
    write_image_file(&image, &out, ImageFormat::Pgm).expect("write");
    println!("wrote {}", out.display());
}
