//! Metrics (SNDR, SFDR, periodogram) and the arithmetic-complexity
//! accountant, including minimal addition-chain exponentiation costs.

use std::collections::HashSet;
use std::io::Write;
use std::sync::OnceLock;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::linearizer::{Kind, Sampling};
use crate::signal::Signal;

/// SNDR in dB between a reference `x` and a distorted/compensated `v`,
/// computed over samples `skip..`. The caller is responsible for delay
/// alignment; `skip` excludes the startup transient.
///
/// Returns `+inf` when the error energy is exactly zero.
pub fn sndr_db(x: &Signal, v: &Signal, skip: usize) -> Result<f64> {
    if x.len() != v.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} vs {}",
            x.len(),
            v.len()
        )));
    }
    if skip >= x.len() {
        return Err(Error::Input("skip exceeds signal length".into()));
    }
    let xs = &x.samples()[skip..];
    let vs = &v.samples()[skip..];
    let sig: f64 = xs.iter().map(|s| s * s).sum();
    if sig == 0.0 {
        return Err(Error::UndefinedMetric("zero signal energy".into()));
    }
    let err: f64 = xs.iter().zip(vs).map(|(a, b)| (a - b) * (a - b)).sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (sig / err).log10())
}

/// Effective number of bits for a full-scale sine at the given SNDR.
pub fn enob(sndr_db: f64) -> f64 {
    (sndr_db - 1.76) / 6.02
}

/// Hann-windowed magnitude periodogram, normalized so a full-scale sine
/// reads 0 dBFS at its bin.
pub struct Spectrum {
    /// Raw squared FFT magnitudes `|X(k)|^2`, all `L` bins.
    raw: Vec<f64>,
    /// Sum of window samples (coherent gain times L).
    window_sum: f64,
    /// Windowed time-domain power `sum (w x)^2`.
    windowed_power: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Bin power on the full-scale-sine scale (1.0 = 0 dBFS).
    pub fn power(&self, bin: usize) -> f64 {
        4.0 * self.raw[bin] / (self.window_sum * self.window_sum)
    }

    pub fn dbfs(&self, bin: usize) -> f64 {
        10.0 * self.power(bin).log10()
    }

    /// Parseval check value: `sum_k |X(k)|^2 / L`.
    pub fn total_fft_power(&self) -> f64 {
        self.raw.iter().sum::<f64>() / self.raw.len() as f64
    }

    /// Windowed time-domain power `sum (w x)^2`.
    pub fn windowed_power(&self) -> f64 {
        self.windowed_power
    }

    /// Writes the one-sided periodogram as two-column CSV
    /// (normalized frequency in units of pi, dBFS).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "normalized_frequency,dbfs")?;
        let l = self.raw.len();
        for bin in 0..=l / 2 {
            writeln!(out, "{},{}", 2.0 * bin as f64 / l as f64, self.dbfs(bin))?;
        }
        Ok(())
    }
}

/// Full-length Hann-windowed periodogram. The length must be a power of two.
pub fn spectrum(v: &Signal) -> Result<Spectrum> {
    let l = v.len();
    if l == 0 || !l.is_power_of_two() {
        return Err(Error::Input(format!("length {l} is not a power of two")));
    }
    let window: Vec<f64> = (0..l)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / l as f64).cos()))
        .collect();
    let window_sum: f64 = window.iter().sum();
    let mut buf: Vec<Complex<f64>> = v
        .samples()
        .iter()
        .zip(&window)
        .map(|(&s, &w)| Complex::new(s * w, 0.0))
        .collect();
    let windowed_power = buf.iter().map(|c| c.re * c.re).sum();
    FftPlanner::new().plan_fft_forward(l).process(&mut buf);
    let raw = buf.iter().map(|c| c.norm_sqr()).collect();
    Ok(Spectrum { raw, window_sum, windowed_power })
}

/// Spurious-free dynamic range in dBFS: distance from full scale down to the
/// largest periodogram peak outside the given signal bins (each excluded
/// together with its two neighbors; DC is not counted as a spur).
pub fn sfdr_dbfs(v: &Signal, signal_bins: &[usize]) -> Result<f64> {
    let spec = spectrum(v)?;
    let l = spec.len();
    let mut excluded: HashSet<usize> = HashSet::new();
    excluded.insert(0);
    for &b in signal_bins {
        for n in b.saturating_sub(1)..=(b + 1).min(l / 2) {
            excluded.insert(n);
        }
    }
    let mut max_spur = f64::NEG_INFINITY;
    let mut found = false;
    for bin in 1..=l / 2 {
        if excluded.contains(&bin) {
            continue;
        }
        found = true;
        max_spur = max_spur.max(spec.dbfs(bin));
    }
    if !found {
        return Err(Error::UndefinedMetric("all bins are signal bins".into()));
    }
    Ok(-max_spur)
}

const PHI_MAX: usize = 64;

/// Minimal number of multiplications to compute `(.)^k` via an addition
/// chain, for `1 <= k <= 64`. Exhaustive iterative-deepening search, memoized.
pub fn addition_chain_phi(k: usize) -> Result<usize> {
    if k < 1 || k > PHI_MAX {
        return Err(Error::Range("addition-chain exponent", format!("{k} not in 1..=64")));
    }
    static TABLE: OnceLock<Vec<usize>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (1..=PHI_MAX).map(shortest_chain_len).collect());
    Ok(table[k - 1])
}

fn shortest_chain_len(k: usize) -> usize {
    if k == 1 {
        return 0;
    }
    let lower = (usize::BITS - (k - 1).leading_zeros()) as usize; // ceil(log2 k)
    for limit in lower.. {
        let mut chain = vec![1usize];
        if chain_dfs(&mut chain, k, limit) {
            return limit;
        }
    }
    unreachable!()
}

fn chain_dfs(chain: &mut Vec<usize>, target: usize, limit: usize) -> bool {
    let last = *chain.last().unwrap();
    if last == target {
        return true;
    }
    let steps_left = limit - (chain.len() - 1);
    // Doubling is the fastest possible growth.
    if last << steps_left < target {
        return false;
    }
    if steps_left == 0 {
        return false;
    }
    // Try larger sums first; chains may be taken strictly ascending.
    for i in (0..chain.len()).rev() {
        for j in (0..=i).rev() {
            let s = chain[i] + chain[j];
            if s <= last || s > target {
                continue;
            }
            chain.push(s);
            if chain_dfs(chain, target, limit) {
                return true;
            }
            chain.pop();
        }
    }
    false
}

/// Multiplications needed to create all static nonlinearities `(.)^k`,
/// `k = 2..=p_max`, in the post-sampling Hammerstein linearizer:
/// `S = sum_k min(k, M+1) * phi(k)`.
pub fn static_nonlin_cost(p_max: usize, m: usize) -> Result<usize> {
    if p_max < 2 {
        return Err(Error::Range("static-nonlinearity max power", format!("{p_max} < 2")));
    }
    let mut total = 0;
    for k in 2..=p_max {
        total += k.min(m + 1) * addition_chain_phi(k)?;
    }
    Ok(total)
}

/// Per-output-sample arithmetic cost with a per-part breakdown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityCount {
    pub multiplications: u64,
    pub additions: u64,
    pub detail: Vec<(String, u64, u64)>,
}

/// Structural shape of a linearizer, sufficient for complexity accounting.
#[derive(Debug, Clone, Copy)]
pub struct ModelShape {
    pub kind: Kind,
    pub sampling: Sampling,
    pub m: usize,
    pub branches: usize,
}

/// Multiplication/addition counts per corrected output sample.
/// Interpolation filters are excluded (common to both schemes).
pub fn complexity(shape: &ModelShape) -> ComplexityCount {
    let m = shape.m as u64;
    let b = shape.branches as u64;
    let filters_mult = (m + 1) * (b + 1);
    let filters_add = m * (b + 1);
    let combine_add = b + 1; // branch outputs plus the constant offset
    let mut detail = vec![(
        "branch and linear filters".to_string(),
        filters_mult,
        filters_add,
    )];
    match shape.kind {
        Kind::Hammerstein => {
            let nl_mult = match shape.sampling {
                // Shared power chain v -> v^2 -> ... -> v^(K+1).
                Sampling::Pre => b,
                // Each polyphase phase needs its own copy of every power.
                Sampling::Post => {
                    static_nonlin_cost(shape.branches + 1, shape.m).expect("branches >= 1") as u64
                }
            };
            detail.push(("static nonlinearities".to_string(), nl_mult, 0));
            detail.push(("branch summation and offset".to_string(), 0, combine_add));
            ComplexityCount {
                multiplications: filters_mult + nl_mult,
                additions: filters_add + combine_add,
                detail,
            }
        }
        Kind::Proposed => {
            // Bias additions: one per branch in both sampling models.
            detail.push(("bias additions".to_string(), 0, b));
            detail.push(("branch summation and offset".to_string(), 0, combine_add));
            ComplexityCount {
                multiplications: filters_mult,
                additions: filters_add + combine_add + b,
                detail,
            }
        }
    }
}
