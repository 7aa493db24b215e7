//! End-to-end pre-sampling pipeline at desk scale: generate a calibrated
//! random memory-polynomial distortion, design bias-branch and power-branch
//! linearizers over a small structure grid, and print the SNDR/complexity
//! table.
//!
//! Run with: `cargo run --release --example pre_sampling_design`

use adilin::experiment::{
    run_sweep, DesignSection, DistortionSection, ExperimentConfig, SeedsSection, SignalSection,
};
use adilin::linearizer::{Kind, Nonlinearity, Sampling};

fn main() -> adilin::Result<()> {
    let cfg = ExperimentConfig {
        id: "pre-demo".into(),
        sampling: Sampling::Pre,
        distortion: DistortionSection { d: 4, q: 8, target_sndr_db: Some(30.0) },
        signal: SignalSection {
            num_subcarriers: 64,
            carriers: (1..32).collect(),
            length: 4096,
            bits: Some(12),
            count_train: 10,
            count_eval: 20,
        },
        design: DesignSection {
            kinds: vec![Kind::Proposed, Kind::Hammerstein],
            m: vec![4],
            branches: vec![4, 8, 12],
            nonlinearity: Nonlinearity::Modulus,
            b_max_points: 5,
            lambda_grid: None,
            post_factor: 4,
            internal_quant_bits: Some(14),
        },
        seeds: SeedsSection { model: 1, train: 100 },
    };
    let dir = tempfile::tempdir().map_err(adilin::Error::from)?;
    let rows = run_sweep(&cfg, dir.path())?;
    println!(
        "{:<12} {:>3} {:>3} {:>6} {:>6} {:>9} {:>9} {:>8}",
        "kind", "M", "N/K", "mults", "adds", "before/dB", "after/dB", "SFDR/dB"
    );
    for r in rows {
        println!(
            "{:<12} {:>3} {:>3} {:>6} {:>6} {:>9.2} {:>9.2} {:>8.2}",
            format!("{:?}", r.kind).to_lowercase(),
            r.m,
            r.branches,
            r.multiplications,
            r.additions,
            r.mean_sndr_before,
            r.mean_sndr_after,
            r.sfdr
        );
    }
    Ok(())
}
