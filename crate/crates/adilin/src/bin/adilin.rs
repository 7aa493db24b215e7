//! Batch experiment runner. All heavy lifting lives in the library; this
//! binary only parses arguments, loads the TOML config, and dispatches.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adilin::experiment::{
    cmd_complexity, cmd_design, cmd_evaluate, cmd_generate, cmd_robustness, run_sweep,
    ExperimentConfig, GridPointReport,
};
use adilin::{Error, Result};

#[derive(Parser)]
#[command(name = "adilin", version, about = "Design and evaluate ADC-interface linearizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's model seed; the training seed base becomes
    /// `seed + 1000`.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker count. Accepted for interface stability; execution is
    /// sequential and deterministic regardless of the value.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the calibrated distortion model and the seed manifest.
    Generate(Common),
    /// Design linearizers over the config's structure grid.
    Design(Common),
    /// Evaluate designed linearizers and write results.csv.
    Evaluate(Common),
    /// Robustness study (signal mismatch, bias-range perturbation).
    Robustness {
        #[command(flatten)]
        common: Common,
        /// Linearizer file inside the artifact directory; defaults to the
        /// first successfully designed grid point.
        #[arg(long)]
        linearizer: Option<String>,
    },
    /// Print the arithmetic-complexity table of the design grid.
    Complexity(Common),
    /// generate + design + evaluate in one run.
    Sweep(Common),
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seeds.model = seed;
        cfg.seeds.train = seed + 1000;
    }
    Ok(cfg)
}

fn default_linearizer(out: &std::path::Path) -> Result<String> {
    let text = std::fs::read_to_string(out.join("design_reports.json"))?;
    let reports: Vec<GridPointReport> = serde_json::from_str(&text)?;
    reports
        .into_iter()
        .find_map(|r| r.file)
        .ok_or_else(|| Error::Input("no successfully designed linearizer found".into()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(c) => {
            let m = cmd_generate(&load_config(&c)?, &c.out)?;
            println!(
                "model written to {}; gain {:.6}, calibration SNDR {} dB",
                c.out.display(),
                m.gain,
                m.achieved_sndr_db
            );
        }
        Command::Design(c) => {
            let reports = cmd_design(&load_config(&c)?, &c.out)?;
            for r in &reports {
                println!("{:?} M={} branches={}: {}", r.kind, r.m, r.branches, r.status);
            }
        }
        Command::Evaluate(c) => {
            let rows = cmd_evaluate(&load_config(&c)?, &c.out)?;
            println!("{} rows written to {}", rows.len(), c.out.join("results.csv").display());
        }
        Command::Robustness { common: c, linearizer } => {
            let cfg = load_config(&c)?;
            let file = match linearizer {
                Some(f) => f,
                None => default_linearizer(&c.out)?,
            };
            let rows = cmd_robustness(&cfg, &c.out, &file)?;
            for r in &rows {
                println!(
                    "{}: {:.2} dB (degradation {:.2} dB)",
                    r.condition, r.mean_sndr_after, r.degradation_db
                );
            }
        }
        Command::Complexity(c) => {
            print!("{}", cmd_complexity(&load_config(&c)?, Some(&c.out))?);
        }
        Command::Sweep(c) => {
            let rows = run_sweep(&load_config(&c)?, &c.out)?;
            for r in &rows {
                println!(
                    "{:?}/{:?} M={} branches={}: {:.2} -> {:.2} dB ({} mult, {} add)",
                    r.kind,
                    r.sampling,
                    r.m,
                    r.branches,
                    r.mean_sndr_before,
                    r.mean_sndr_after,
                    r.multiplications,
                    r.additions
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
