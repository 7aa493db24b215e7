//! Reference recovery by least-squares sinusoid fitting: when only the
//! distorted observation is available, project it onto the known carrier
//! frequencies to estimate the clean multi-tone reference.
//!
//! Run with: `cargo run --release --example reference_estimation`

use adilin::analysis::sndr_db;
use adilin::distortion::{gen_random_model, ModelKind};
use adilin::signal::{estimate_reference, gen_multitone, MultitoneConfig, Signal};

fn main() -> adilin::Result<()> {
    // Pin the frequency offset so the carrier frequencies are known exactly.
    let offset = std::f64::consts::PI / 128.0;
    let mt = MultitoneConfig {
        gain: 1.0 / 31.0,
        length: 4096,
        freq_offset: Some(offset),
        ..Default::default()
    };
    let calib: Vec<Signal> = (0..5)
        .map(|i| gen_multitone(&mt, 500 + i))
        .collect::<adilin::Result<_>>()?;
    let (model, report) = gen_random_model(ModelKind::Pre, 4, 8, 30.0, &calib, 9)?;

    let x = gen_multitone(&mt, 77)?.scaled(report.gain);
    let v = model.apply(&x);
    let truth = x.delayed(model.linear_delay());
    let skip = model.transient_len() + model.linear_delay();

    // The fit needs the exact carrier frequencies, offset included.
    let freqs: Vec<f64> = mt
        .active_carriers
        .iter()
        .map(|&k| 2.0 * std::f64::consts::PI * k as f64 / mt.num_subcarriers as f64 + offset)
        .collect();
    let estimate = estimate_reference(&v, &freqs)?;

    println!("distorted vs true reference:  {:.2} dB", sndr_db(&truth, &v, skip)?);
    println!("estimate  vs true reference:  {:.2} dB", sndr_db(&truth, &estimate, skip)?);
    Ok(())
}
