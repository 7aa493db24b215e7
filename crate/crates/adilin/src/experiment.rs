//! Batch experiment harness: TOML-configured pipelines that generate a
//! calibrated distortion model, design linearizers over a structure grid,
//! evaluate them on regenerated signal sets, and emit CSV tables plus
//! versioned JSON artifacts. Signals are always regenerated from seeds;
//! only seeds are persisted.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::design::{
    default_lambda_grid, design_linearizer, evaluate_linearizer, DesignSpec, TrainingSignal,
};
use crate::distortion::{gen_random_model, DistortionModel, ModelKind};
use crate::error::{Error, Result};
use crate::linearizer::{Kind, LinearizerModel, Nonlinearity, Sampling};
use crate::signal::{gen_bandpass_noise, gen_multitone, quantize, MultitoneConfig, Signal};

/// Offset between the training and evaluation seed spaces.
const EVAL_SEED_OFFSET: u64 = 1_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionSection {
    pub d: usize,
    pub q: usize,
    /// `None` means no distortion (identity-plus-delay model).
    pub target_sndr_db: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalSection {
    #[serde(default = "default_subcarriers")]
    pub num_subcarriers: usize,
    #[serde(default = "default_carriers")]
    pub carriers: Vec<usize>,
    #[serde(default = "default_length")]
    pub length: usize,
    /// ADC resolution applied to the distorted signal; `None` disables
    /// quantization.
    pub bits: Option<u32>,
    pub count_train: usize,
    pub count_eval: usize,
}

fn default_subcarriers() -> usize {
    64
}
fn default_carriers() -> Vec<usize> {
    (1..32).collect()
}
fn default_length() -> usize {
    crate::signal::DEFAULT_LENGTH
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignSection {
    pub kinds: Vec<Kind>,
    pub m: Vec<usize>,
    pub branches: Vec<usize>,
    #[serde(default = "default_nonlinearity")]
    pub nonlinearity: Nonlinearity,
    /// Size of the uniform `b_max` grid over `[0.5, 1.5]`.
    #[serde(default = "default_bmax_points")]
    pub b_max_points: usize,
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default = "default_post_factor")]
    pub post_factor: usize,
    #[serde(default)]
    pub internal_quant_bits: Option<u32>,
}

fn default_nonlinearity() -> Nonlinearity {
    Nonlinearity::Modulus
}
fn default_bmax_points() -> usize {
    11
}
fn default_post_factor() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedsSection {
    pub model: u64,
    pub train: u64,
}

/// One experiment: a distortion model, a signal ensemble, and a design grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: String,
    pub sampling: Sampling,
    pub distortion: DistortionSection,
    pub signal: SignalSection,
    pub design: DesignSection,
    pub seeds: SeedsSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.signal.count_train == 0 {
            return Err(Error::Config("count_train must be positive".into()));
        }
        if self.signal.count_eval < self.signal.count_train {
            return Err(Error::Config(format!(
                "count_eval ({}) must be >= count_train ({})",
                self.signal.count_eval, self.signal.count_train
            )));
        }
        if self.design.kinds.is_empty()
            || self.design.m.is_empty()
            || self.design.branches.is_empty()
        {
            return Err(Error::Config("design grids must be nonempty".into()));
        }
        if self.design.b_max_points == 0 {
            return Err(Error::Config("b_max_points must be positive".into()));
        }
        if let Some(grid) = &self.design.lambda_grid {
            if grid.is_empty() {
                return Err(Error::Config("lambda_grid must be nonempty".into()));
            }
        }
        if self.signal.carriers.is_empty() {
            return Err(Error::Config("carrier list must be nonempty".into()));
        }
        Ok(())
    }

    fn multitone_config(&self) -> MultitoneConfig {
        MultitoneConfig {
            num_subcarriers: self.signal.num_subcarriers,
            active_carriers: self.signal.carriers.clone(),
            gain: 1.0 / self.signal.carriers.len() as f64,
            length: self.signal.length,
            ..Default::default()
        }
    }

    fn eval_seed_base(&self) -> u64 {
        self.seeds.train + EVAL_SEED_OFFSET
    }

    fn design_spec(&self, kind: Kind, m: usize, branches: usize) -> DesignSpec {
        let mut spec = DesignSpec::new(kind, self.sampling, m, branches);
        spec.nonlinearity = self.design.nonlinearity;
        spec.post_factor = self.design.post_factor;
        spec.internal_quant_bits = self.design.internal_quant_bits;
        let s = self.design.b_max_points;
        spec.b_max_grid = if s == 1 {
            vec![1.0]
        } else {
            (0..s).map(|k| 0.5 + k as f64 / (s - 1) as f64).collect()
        };
        if let Some(grid) = &self.design.lambda_grid {
            spec.lambda_grid = grid.clone();
        } else {
            spec.lambda_grid = default_lambda_grid();
        }
        spec
    }
}

/// Seed-only record of the generated artifacts; signals are regenerated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub id: String,
    pub gain: f64,
    pub scale: f64,
    /// Mean calibration SNDR in dB; "inf" for the identity model.
    pub achieved_sndr_db: String,
    pub train_seed_base: u64,
    pub eval_seed_base: u64,
    pub count_train: usize,
    pub count_eval: usize,
}

fn format_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

/// Generates the distortion model (calibrated on the training ensemble) and
/// writes `model.json` plus the seed manifest.
pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let mt = cfg.multitone_config();
    let calib: Vec<Signal> = (0..cfg.signal.count_train)
        .map(|i| gen_multitone(&mt, cfg.seeds.train + i as u64))
        .collect::<Result<Vec<_>>>()?;
    let kind = match cfg.sampling {
        Sampling::Pre => ModelKind::Pre,
        Sampling::Post => ModelKind::Post,
    };
    let target = cfg.distortion.target_sndr_db.unwrap_or(f64::INFINITY);
    let (model, report) = gen_random_model(
        kind,
        cfg.distortion.d,
        cfg.distortion.q,
        target,
        &calib,
        cfg.seeds.model,
    )?;
    fs::write(out.join("model.json"), model.to_json_string()?)?;
    let manifest = Manifest {
        version: 1,
        id: cfg.id.clone(),
        gain: report.gain,
        scale: report.scale,
        achieved_sndr_db: format_db(report.mean_sndr_db),
        train_seed_base: cfg.seeds.train,
        eval_seed_base: cfg.eval_seed_base(),
        count_train: cfg.signal.count_train,
        count_eval: cfg.signal.count_eval,
    };
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

fn load_model_and_manifest(out: &Path) -> Result<(DistortionModel, Manifest)> {
    let model = DistortionModel::from_json_str(&fs::read_to_string(out.join("model.json"))?)?;
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json"))?)?;
    if manifest.version != 1 {
        return Err(Error::Config(format!(
            "unsupported manifest version {}",
            manifest.version
        )));
    }
    Ok((model, manifest))
}

/// Regenerates one training/evaluation record from its seed: scale the clean
/// signal, distort it, quantize, and align the reference to the model's
/// linear delay.
pub fn make_record(
    cfg: &ExperimentConfig,
    model: &DistortionModel,
    gain: f64,
    seed: u64,
) -> Result<TrainingSignal> {
    let x = gen_multitone(&cfg.multitone_config(), seed)?;
    record_from_signal(cfg, model, gain, &x)
}

fn record_from_signal(
    cfg: &ExperimentConfig,
    model: &DistortionModel,
    gain: f64,
    x: &Signal,
) -> Result<TrainingSignal> {
    let xs = x.scaled(gain);
    let v = model.apply(&xs);
    let v = match cfg.signal.bits {
        Some(bits) => quantize(&v, bits),
        None => v,
    };
    let delay = model.linear_delay();
    Ok(TrainingSignal {
        reference: xs.delayed(delay),
        distorted: v,
        skip: model.transient_len() + delay,
    })
}

fn make_set(
    cfg: &ExperimentConfig,
    model: &DistortionModel,
    gain: f64,
    seed_base: u64,
    count: usize,
) -> Result<Vec<TrainingSignal>> {
    (0..count)
        .map(|i| make_record(cfg, model, gain, seed_base + i as u64))
        .collect()
}

fn linearizer_file(kind: Kind, m: usize, branches: usize) -> String {
    let k = match kind {
        Kind::Hammerstein => "hammerstein",
        Kind::Proposed => "proposed",
    };
    format!("linearizer_{k}_m{m}_n{branches}.json")
}

/// Per-grid-point design outcome recorded by `cmd_design`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridPointReport {
    pub kind: Kind,
    pub m: usize,
    pub branches: usize,
    pub status: String,
    pub file: Option<String>,
    pub mse: Option<f64>,
    pub b_max: Option<f64>,
    pub lambda: Option<f64>,
    pub rcond: Option<f64>,
}

/// Designs one linearizer per grid point; failures are recorded and the run
/// continues. Returns the per-point reports (also written as JSON).
pub fn cmd_design(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<GridPointReport>> {
    cfg.validate()?;
    let (model, manifest) = load_model_and_manifest(out)?;
    let train = make_set(
        cfg,
        &model,
        manifest.gain,
        manifest.train_seed_base,
        manifest.count_train,
    )?;
    let mut reports = Vec::new();
    for &kind in &cfg.design.kinds {
        for &m in &cfg.design.m {
            for &branches in &cfg.design.branches {
                let spec = cfg.design_spec(kind, m, branches);
                match design_linearizer(&train, &spec) {
                    Ok((lin, rep)) => {
                        let file = linearizer_file(kind, m, branches);
                        fs::write(out.join(&file), lin.to_json_string()?)?;
                        reports.push(GridPointReport {
                            kind,
                            m,
                            branches,
                            status: "ok".into(),
                            file: Some(file),
                            mse: Some(rep.mse),
                            b_max: Some(rep.b_max),
                            lambda: Some(rep.lambda),
                            rcond: Some(rep.rcond),
                        });
                    }
                    Err(e) => reports.push(GridPointReport {
                        kind,
                        m,
                        branches,
                        status: format!("failed: {e}"),
                        file: None,
                        mse: None,
                        b_max: None,
                        lambda: None,
                        rcond: None,
                    }),
                }
            }
        }
    }
    fs::write(
        out.join("design_reports.json"),
        serde_json::to_string_pretty(&reports)?,
    )?;
    Ok(reports)
}

/// One `results.csv` row.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub kind: Kind,
    pub sampling: Sampling,
    pub m: usize,
    pub branches: usize,
    pub multiplications: u64,
    pub additions: u64,
    pub mean_sndr_before: f64,
    pub mean_sndr_after: f64,
    pub sndr_var: f64,
    pub sfdr: f64,
}

fn kind_str(k: Kind) -> &'static str {
    match k {
        Kind::Hammerstein => "hammerstein",
        Kind::Proposed => "proposed",
    }
}

fn sampling_str(s: Sampling) -> &'static str {
    match s {
        Sampling::Pre => "pre",
        Sampling::Post => "post",
    }
}

fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "kind",
        "sampling",
        "m",
        "branches",
        "multiplications",
        "additions",
        "mean_sndr_before",
        "mean_sndr_after",
        "sndr_var",
        "sfdr",
    ])?;
    for r in rows {
        w.write_record([
            kind_str(r.kind).to_string(),
            sampling_str(r.sampling).to_string(),
            r.m.to_string(),
            r.branches.to_string(),
            r.multiplications.to_string(),
            r.additions.to_string(),
            format_db(r.mean_sndr_before),
            format_db(r.mean_sndr_after),
            format_db(r.sndr_var),
            format_db(r.sfdr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// SFDR probe: an on-grid multi-tone (zero frequency offset) so the carriers
/// land on FFT bins, pushed through distortion and linearizer.
fn sfdr_probe(
    cfg: &ExperimentConfig,
    model: &DistortionModel,
    gain: f64,
    lin: &LinearizerModel,
) -> Result<f64> {
    let mut mt = cfg.multitone_config();
    mt.freq_offset = Some(0.0);
    if !mt.length.is_power_of_two() {
        return Err(Error::Input("SFDR probe needs a power-of-two length".into()));
    }
    let x = gen_multitone(&mt, cfg.eval_seed_base())?;
    let rec = record_from_signal(cfg, model, gain, &x)?;
    let y = lin.apply(&rec.distorted)?;
    let bins: Vec<usize> = cfg
        .signal
        .carriers
        .iter()
        .map(|&k| k * cfg.signal.length / cfg.signal.num_subcarriers)
        .collect();
    analysis::sfdr_dbfs(&y, &bins)
}

/// Evaluates every designed linearizer on the regenerated evaluation set and
/// writes `results.csv`. Also dumps before/after periodograms of the SFDR
/// probe for the first grid point.
pub fn cmd_evaluate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let (model, manifest) = load_model_and_manifest(out)?;
    let reports: Vec<GridPointReport> =
        serde_json::from_str(&fs::read_to_string(out.join("design_reports.json"))?)?;
    let eval = make_set(
        cfg,
        &model,
        manifest.gain,
        manifest.eval_seed_base,
        manifest.count_eval,
    )?;
    let mut rows = Vec::new();
    let mut first = true;
    for rep in reports.iter().filter(|r| r.file.is_some()) {
        let file = rep.file.as_ref().unwrap();
        let lin = LinearizerModel::from_json_str(&fs::read_to_string(out.join(file))?)?;
        let ev = evaluate_linearizer(&lin, &eval)?;
        let cost = analysis::complexity(&lin.shape());
        let sfdr = if cfg.signal.length.is_power_of_two() {
            sfdr_probe(cfg, &model, manifest.gain, &lin)?
        } else {
            f64::NAN
        };
        if first && cfg.signal.length.is_power_of_two() {
            dump_probe_spectra(cfg, &model, manifest.gain, &lin, out)?;
            first = false;
        }
        rows.push(ResultRow {
            kind: lin.kind,
            sampling: lin.sampling,
            m: lin.m,
            branches: lin.branches(),
            multiplications: cost.multiplications,
            additions: cost.additions,
            mean_sndr_before: ev.mean_sndr_before,
            mean_sndr_after: ev.mean_sndr_after,
            sndr_var: ev.var_sndr_after,
            sfdr,
        });
    }
    write_results_csv(&out.join("results.csv"), &rows)?;
    Ok(rows)
}

fn dump_probe_spectra(
    cfg: &ExperimentConfig,
    model: &DistortionModel,
    gain: f64,
    lin: &LinearizerModel,
    out: &Path,
) -> Result<()> {
    let mut mt = cfg.multitone_config();
    mt.freq_offset = Some(0.0);
    let x = gen_multitone(&mt, cfg.eval_seed_base())?;
    let rec = record_from_signal(cfg, model, gain, &x)?;
    let y = lin.apply(&rec.distorted)?;
    let before = analysis::spectrum(&rec.distorted)?;
    let after = analysis::spectrum(&y)?;
    before.write_csv(fs::File::create(out.join("periodogram_before.csv"))?)?;
    after.write_csv(fs::File::create(out.join("periodogram_after.csv"))?)?;
    Ok(())
}

/// One `robustness.csv` row: an evaluation condition and its SNDR relative to
/// the design-matched ensemble.
#[derive(Debug, Clone)]
pub struct RobustnessRow {
    pub condition: String,
    pub mean_sndr_after: f64,
    pub degradation_db: f64,
}

/// Robustness study of one designed linearizer: null-subcarrier ensembles,
/// bandpass noise, and redesigns with a perturbed bias range.
pub fn cmd_robustness(
    cfg: &ExperimentConfig,
    out: &Path,
    linearizer: &str,
) -> Result<Vec<RobustnessRow>> {
    cfg.validate()?;
    let (model, manifest) = load_model_and_manifest(out)?;
    let lin = LinearizerModel::from_json_str(&fs::read_to_string(out.join(linearizer))?)?;
    let count = manifest.count_eval.min(100); // robustness sets are smaller
    let matched = make_set(cfg, &model, manifest.gain, manifest.eval_seed_base, count)?;
    let baseline = evaluate_linearizer(&lin, &matched)?.mean_sndr_after;
    let mut rows = vec![RobustnessRow {
        condition: "design_matched".into(),
        mean_sndr_after: baseline,
        degradation_db: 0.0,
    }];

    // Null-subcarrier ensemble: each signal keeps a random half of the
    // carriers active (drawn from its seed).
    let null_set: Vec<TrainingSignal> = (0..count)
        .map(|i| {
            let seed = manifest.eval_seed_base + i as u64;
            let mut mt = cfg.multitone_config();
            mt.active_carriers = null_subcarrier_subset(&cfg.signal.carriers, seed);
            let x = gen_multitone(&mt, seed)?;
            record_from_signal(cfg, &model, manifest.gain, &x)
        })
        .collect::<Result<Vec<_>>>()?;
    let sndr = evaluate_linearizer(&lin, &null_set)?.mean_sndr_after;
    rows.push(RobustnessRow {
        condition: "null_subcarriers".into(),
        mean_sndr_after: sndr,
        degradation_db: baseline - sndr,
    });

    // Bandpass noise covering the same band occupancy. The generator is
    // peak-normalized, so rescale each probe to the mean raw peak of the
    // matched multi-tone ensemble before applying the calibrated gain;
    // otherwise the probes would overdrive the quantizer range.
    let mt = cfg.multitone_config();
    let mut mean_peak = 0.0;
    for i in 0..count {
        mean_peak += gen_multitone(&mt, manifest.eval_seed_base + i as u64)?.peak();
    }
    mean_peak /= count as f64;
    let noise_set: Vec<TrainingSignal> = (0..count)
        .map(|i| {
            let seed = manifest.eval_seed_base + i as u64;
            let x = gen_bandpass_noise((0.02, 0.95), cfg.signal.length, seed)?.scaled(mean_peak);
            record_from_signal(cfg, &model, manifest.gain, &x)
        })
        .collect::<Result<Vec<_>>>()?;
    let sndr = evaluate_linearizer(&lin, &noise_set)?.mean_sndr_after;
    rows.push(RobustnessRow {
        condition: "bandpass_noise".into(),
        mean_sndr_after: sndr,
        degradation_db: baseline - sndr,
    });

    // Bias-range sensitivity: redesign with b_max pinned to a perturbed value.
    if lin.kind == Kind::Proposed {
        let train = make_set(
            cfg,
            &model,
            manifest.gain,
            manifest.train_seed_base,
            manifest.count_train,
        )?;
        for pct in [-5.0, -3.0, 3.0, 5.0] {
            let mut spec = cfg.design_spec(lin.kind, lin.m, lin.branches());
            spec.b_max_grid = vec![lin.b_max * (1.0 + pct / 100.0)];
            let (lin_p, _) = design_linearizer(&train, &spec)?;
            let sndr = evaluate_linearizer(&lin_p, &matched)?.mean_sndr_after;
            rows.push(RobustnessRow {
                condition: format!("b_max{pct:+.0}pct"),
                mean_sndr_after: sndr,
                degradation_db: baseline - sndr,
            });
        }
    }

    let mut w = csv::Writer::from_path(out.join("robustness.csv"))?;
    w.write_record(["condition", "mean_sndr_after", "degradation_db"])?;
    for r in &rows {
        w.write_record([
            r.condition.clone(),
            format_db(r.mean_sndr_after),
            format_db(r.degradation_db),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

/// Deterministic half-size carrier subset drawn from the seed.
pub fn null_subcarrier_subset(carriers: &[usize], seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x6e75_6c6c);
    let keep = (carriers.len() + 1) / 2;
    let mut picked: Vec<usize> = carriers
        .choose_multiple(&mut rng, keep.max(1))
        .copied()
        .collect();
    picked.sort_unstable();
    picked
}

/// Prints and writes the arithmetic-complexity table of the design grid.
pub fn cmd_complexity(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<String> {
    cfg.validate()?;
    let mut table = String::from("kind,sampling,m,branches,multiplications,additions\n");
    for &kind in &cfg.design.kinds {
        for &m in &cfg.design.m {
            for &branches in &cfg.design.branches {
                let c = analysis::complexity(&analysis::ModelShape {
                    kind,
                    sampling: cfg.sampling,
                    m,
                    branches,
                });
                table.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    kind_str(kind),
                    sampling_str(cfg.sampling),
                    m,
                    branches,
                    c.multiplications,
                    c.additions
                ));
            }
        }
    }
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        fs::write(out.join("complexity.csv"), &table)?;
    }
    Ok(table)
}

/// generate + design + evaluate in one run.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<ResultRow>> {
    cmd_generate(cfg, out)?;
    cmd_design(cfg, out)?;
    cmd_evaluate(cfg, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &str) -> ExperimentConfig {
        ExperimentConfig {
            id: dir.to_string(),
            sampling: Sampling::Pre,
            distortion: DistortionSection { d: 2, q: 4, target_sndr_db: Some(30.0) },
            signal: SignalSection {
                num_subcarriers: 64,
                carriers: (1..16).collect(),
                length: 1024,
                bits: Some(12),
                count_train: 3,
                count_eval: 4,
            },
            design: DesignSection {
                kinds: vec![Kind::Proposed],
                m: vec![2],
                branches: vec![6],
                nonlinearity: Nonlinearity::Modulus,
                b_max_points: 3,
                lambda_grid: Some(vec![1e-8, 1e-6, 1e-4]),
                post_factor: 4,
                internal_quant_bits: None,
            },
            seeds: SeedsSection { model: 7, train: 100 },
        }
    }

    #[test]
    fn toml_roundtrip_and_validation() {
        let cfg = small_config("t");
        let text = toml::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.id, cfg.id);
        assert_eq!(back.signal.carriers, cfg.signal.carriers);

        let mut bad = cfg.clone();
        bad.signal.count_eval = 1; // < count_train
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.design.m.clear();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn toml_defaults_fill_in() {
        let text = r#"
            id = "mini"
            sampling = "pre"
            [distortion]
            d = 2
            q = 4
            target_sndr_db = 30.0
            [signal]
            bits = 12
            count_train = 2
            count_eval = 2
            [design]
            kinds = ["proposed"]
            m = [2]
            branches = [4]
            [seeds]
            model = 1
            train = 10
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.signal.num_subcarriers, 64);
        assert_eq!(cfg.signal.carriers, (1..32).collect::<Vec<_>>());
        assert_eq!(cfg.design.b_max_points, 11);
        assert_eq!(cfg.design.post_factor, 4);
    }

    #[test]
    fn sweep_pipeline_is_deterministic() {
        let cfg = small_config("det");
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run_sweep(&cfg, dir_a.path()).unwrap();
        run_sweep(&cfg, dir_b.path()).unwrap();
        for file in ["model.json", "manifest.json", "results.csv", "design_reports.json"] {
            let a = fs::read(dir_a.path().join(file)).unwrap();
            let b = fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between identical runs");
        }
    }

    #[test]
    fn identity_target_yields_identity_model() {
        let mut cfg = small_config("ident");
        cfg.distortion.target_sndr_db = None;
        let dir = tempfile::tempdir().unwrap();
        let manifest = cmd_generate(&cfg, dir.path()).unwrap();
        assert_eq!(manifest.achieved_sndr_db, "inf");
        let model = DistortionModel::from_json_str(
            &fs::read_to_string(dir.path().join("model.json")).unwrap(),
        )
        .unwrap();
        let x = gen_multitone(&cfg.multitone_config(), 3).unwrap();
        let v = model.apply(&x);
        let d = model.linear_delay();
        for n in d..x.len() {
            assert_eq!(v.samples()[n], x.samples()[n - d]);
        }
    }

    #[test]
    fn sweep_row_improves_sndr_and_matches_complexity() {
        let cfg = small_config("sweep");
        let dir = tempfile::tempdir().unwrap();
        let rows = run_sweep(&cfg, dir.path()).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert!(r.mean_sndr_after > r.mean_sndr_before, "{r:?}");
        let c = analysis::complexity(&analysis::ModelShape {
            kind: r.kind,
            sampling: r.sampling,
            m: r.m,
            branches: r.branches,
        });
        assert_eq!(r.multiplications, c.multiplications);
        assert_eq!(r.additions, c.additions);
        assert!(r.sfdr.is_finite());
        assert!(dir.path().join("periodogram_before.csv").exists());
        // CSV has a header plus one row, all fields parseable.
        let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "kind,sampling,m,branches,multiplications,additions,\
             mean_sndr_before,mean_sndr_after,sndr_var,sfdr"
        );
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn null_subset_is_deterministic_and_half_size() {
        let carriers: Vec<usize> = (1..32).collect();
        let a = null_subcarrier_subset(&carriers, 5);
        let b = null_subcarrier_subset(&carriers, 5);
        assert_eq!(a, b);
        assert_eq!(a.len(), 16);
        assert!(a.iter().all(|k| carriers.contains(k)));
        let c = null_subcarrier_subset(&carriers, 6);
        assert_ne!(a, c);
    }

    #[test]
    fn robustness_on_small_pipeline() {
        let cfg = small_config("rob");
        let dir = tempfile::tempdir().unwrap();
        let reports = {
            cmd_generate(&cfg, dir.path()).unwrap();
            cmd_design(&cfg, dir.path()).unwrap()
        };
        let file = reports[0].file.clone().unwrap();
        let rows = cmd_robustness(&cfg, dir.path(), &file).unwrap();
        assert_eq!(rows[0].condition, "design_matched");
        assert_eq!(rows[0].degradation_db, 0.0);
        assert!(rows.iter().any(|r| r.condition == "null_subcarriers"));
        assert!(rows.iter().any(|r| r.condition == "bandpass_noise"));
        assert!(rows.iter().any(|r| r.condition.starts_with("b_max")));
        assert!(dir.path().join("robustness.csv").exists());
    }

    #[test]
    fn complexity_table_covers_grid() {
        let mut cfg = small_config("cx");
        cfg.design.kinds = vec![Kind::Proposed, Kind::Hammerstein];
        cfg.design.branches = vec![2, 4];
        let table = cmd_complexity(&cfg, None).unwrap();
        // header + 2 kinds x 1 m x 2 branch counts
        assert_eq!(table.lines().count(), 5);
        assert!(table.contains("proposed,pre,2,2,"));
    }
}
