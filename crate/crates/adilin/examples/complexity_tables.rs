//! Arithmetic-complexity accounting: multiplications and additions per output
//! sample for power-branch (Hammerstein) and bias-branch structures, plus the
//! addition-chain costs used for shared power evaluation.
//!
//! Run with: `cargo run --example complexity_tables`

use adilin::analysis::{addition_chain_phi, complexity, static_nonlin_cost, ModelShape};
use adilin::linearizer::{Kind, Sampling};

fn main() -> adilin::Result<()> {
    println!("addition-chain lengths phi(k):");
    for k in 1..=16 {
        print!(" phi({k})={}", addition_chain_phi(k)?);
    }
    println!("\n\nshared static-nonlinearity cost S(p_max, M):");
    for m in [0usize, 2, 6, 10] {
        println!("  S(10, {m:>2}) = {}", static_nonlin_cost(10, m)?);
    }

    for sampling in [Sampling::Pre, Sampling::Post] {
        println!("\nper-sample cost, {sampling:?}-sampling, M = 6:");
        println!("{:>4} {:>16} {:>16}", "N/K", "power branches", "bias branches");
        for branches in [2usize, 4, 8, 12, 16] {
            let h = complexity(&ModelShape {
                kind: Kind::Hammerstein,
                sampling,
                m: 6,
                branches,
            });
            let p = complexity(&ModelShape {
                kind: Kind::Proposed,
                sampling,
                m: 6,
                branches,
            });
            println!(
                "{:>4} {:>7} mul {:>4} add {:>7} mul {:>4} add",
                branches, h.multiplications, h.additions, p.multiplications, p.additions
            );
        }
    }
    Ok(())
}
