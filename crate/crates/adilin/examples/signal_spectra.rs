//! Signal generation and spectral analysis: draw a QPSK multi-tone test
//! signal, pass it through a random calibrated distortion, and write
//! before/after periodograms as CSV next to printed SNDR/SFDR figures.
//!
//! Run with: `cargo run --release --example signal_spectra [out_dir]`

use adilin::analysis::{enob, sfdr_dbfs, sndr_db, spectrum};
use adilin::distortion::{gen_random_model, ModelKind};
use adilin::signal::{gen_multitone, quantize, MultitoneConfig, Signal};

fn main() -> adilin::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out".into());
    std::fs::create_dir_all(&out)?;

    // On-grid carriers (no frequency offset) so every tone lands on an FFT bin.
    let mt = MultitoneConfig {
        freq_offset: Some(0.0),
        gain: 1.0 / 31.0,
        length: 4096,
        ..Default::default()
    };
    let calib: Vec<Signal> = (0..5)
        .map(|i| gen_multitone(&mt, 100 + i))
        .collect::<adilin::Result<_>>()?;
    let (model, report) = gen_random_model(ModelKind::Pre, 4, 8, 30.0, &calib, 7)?;
    println!(
        "calibrated distortion: scale {:.4}, gain {:.4}, mean SNDR {:.2} dB",
        report.scale, report.gain, report.mean_sndr_db
    );

    let x = gen_multitone(&mt, 42)?.scaled(report.gain);
    let v = quantize(&model.apply(&x), 12);
    let skip = model.transient_len() + model.linear_delay();
    let sndr = sndr_db(&x.delayed(model.linear_delay()), &v, skip)?;
    let bins: Vec<usize> = mt
        .active_carriers
        .iter()
        .map(|&k| k * mt.length / mt.num_subcarriers)
        .collect();
    println!(
        "distorted probe: SNDR {:.2} dB ({:.2} effective bits), SFDR {:.2} dB",
        sndr,
        enob(sndr),
        sfdr_dbfs(&v, &bins)?
    );

    let dir = std::path::Path::new(&out);
    spectrum(&x)?.write_csv(std::fs::File::create(dir.join("clean_spectrum.csv"))?)?;
    spectrum(&v)?.write_csv(std::fs::File::create(dir.join("distorted_spectrum.csv"))?)?;
    println!("wrote {0}/clean_spectrum.csv and {0}/distorted_spectrum.csv", out);
    Ok(())
}
