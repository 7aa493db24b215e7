//! Robustness study of a designed linearizer: evaluate on the design-matched
//! ensemble, on null-subcarrier signals, on bandpass noise, and with the bias
//! range perturbed by a few percent.
//!
//! Run with: `cargo run --release --example robustness_check`

use adilin::experiment::{
    cmd_design, cmd_generate, cmd_robustness, DesignSection, DistortionSection, ExperimentConfig,
    SeedsSection, SignalSection,
};
use adilin::linearizer::{Kind, Nonlinearity, Sampling};

fn main() -> adilin::Result<()> {
    let cfg = ExperimentConfig {
        id: "robustness-demo".into(),
        sampling: Sampling::Pre,
        distortion: DistortionSection { d: 2, q: 6, target_sndr_db: Some(30.0) },
        signal: SignalSection {
            num_subcarriers: 64,
            carriers: (1..32).collect(),
            length: 4096,
            bits: Some(12),
            count_train: 10,
            count_eval: 20,
        },
        design: DesignSection {
            kinds: vec![Kind::Proposed],
            m: vec![2],
            branches: vec![8],
            nonlinearity: Nonlinearity::Modulus,
            b_max_points: 5,
            lambda_grid: None,
            post_factor: 4,
            internal_quant_bits: None,
        },
        seeds: SeedsSection { model: 3, train: 700 },
    };
    let dir = tempfile::tempdir().map_err(adilin::Error::from)?;
    cmd_generate(&cfg, dir.path())?;
    let reports = cmd_design(&cfg, dir.path())?;
    let file = reports[0]
        .file
        .clone()
        .expect("design should succeed at this scale");
    println!("{:<18} {:>12} {:>14}", "condition", "SNDR/dB", "degradation/dB");
    for row in cmd_robustness(&cfg, dir.path(), &file)? {
        println!(
            "{:<18} {:>12.2} {:>14.2}",
            row.condition, row.mean_sndr_after, row.degradation_db
        );
    }
    Ok(())
}
