//! Reference test-signal generation: multi-tone QPSK signals, bandpass
//! filtered white noise, uniform quantization, scaling-gain selection, and
//! least-squares reference estimation from distorted tones.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distortion::DistortionModel;
use crate::error::{Error, Result};
use crate::fir;

/// The QPSK phase alphabet used for the multi-tone carriers.
pub const QPSK_PHASES: [f64; 4] = [PI / 4.0, -PI / 4.0, 3.0 * PI / 4.0, -3.0 * PI / 4.0];

/// Default signal length.
pub const DEFAULT_LENGTH: usize = 8192;

/// A uniformly sampled real sequence, normalized so that all linearizer
/// inputs are bounded by one in magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    bit_depth: Option<u32>,
    amplitude_bound: f64,
}

impl Signal {
    /// Wraps raw samples with the default amplitude bound of one.
    pub fn new(samples: Vec<f64>) -> Self {
        Signal { samples, bit_depth: None, amplitude_bound: 1.0 }
    }

    /// Wraps samples with an explicit bound, checking the bound invariant.
    pub fn with_bound(samples: Vec<f64>, bound: f64) -> Result<Self> {
        let peak = samples.iter().fold(0.0f64, |a, &s| a.max(s.abs()));
        if peak > bound {
            return Err(Error::Amplitude(format!(
                "peak {peak:.6} exceeds amplitude bound {bound:.6}"
            )));
        }
        Ok(Signal { samples, bit_depth: None, amplitude_bound: bound })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn bit_depth(&self) -> Option<u32> {
        self.bit_depth
    }

    pub fn amplitude_bound(&self) -> f64 {
        self.amplitude_bound
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |a, &s| a.max(s.abs()))
    }

    /// Multiplies all samples by `g`. Clears the bit-depth tag since the
    /// scaled samples leave the quantizer grid.
    pub fn scaled(&self, g: f64) -> Signal {
        Signal {
            samples: self.samples.iter().map(|&s| s * g).collect(),
            bit_depth: None,
            amplitude_bound: self.amplitude_bound,
        }
    }

    /// Right-shifts by `k` samples, zero-padding the head.
    pub fn delayed(&self, k: usize) -> Signal {
        Signal {
            samples: fir::delay(&self.samples, k),
            bit_depth: self.bit_depth,
            amplitude_bound: self.amplitude_bound,
        }
    }
}

/// Configuration of the multi-tone (OFDM-like) test signal
/// `x(n) = G * sum_k A_k sin(w_k n + alpha_k)` with
/// `w_k = 2 pi k / num_subcarriers + freq_offset`.
#[derive(Debug, Clone)]
pub struct MultitoneConfig {
    pub num_subcarriers: usize,
    /// Active carrier indices; each must satisfy `1 <= k < num_subcarriers/2`.
    pub active_carriers: Vec<usize>,
    /// Per-carrier amplitudes; `None` means all ones.
    pub amplitudes: Option<Vec<f64>>,
    /// Per-carrier phases; `None` draws from `phase_alphabet` per seed.
    pub phases: Option<Vec<f64>>,
    /// Common frequency offset; `None` draws uniformly from
    /// `[-pi/num_subcarriers, pi/num_subcarriers]` per seed.
    pub freq_offset: Option<f64>,
    pub gain: f64,
    pub phase_alphabet: Vec<f64>,
    pub length: usize,
}

impl Default for MultitoneConfig {
    fn default() -> Self {
        MultitoneConfig {
            num_subcarriers: 64,
            active_carriers: (1..32).collect(),
            amplitudes: None,
            phases: None,
            freq_offset: None,
            gain: 1.0,
            phase_alphabet: QPSK_PHASES.to_vec(),
            length: DEFAULT_LENGTH,
        }
    }
}

impl MultitoneConfig {
    fn validate(&self) -> Result<()> {
        if self.num_subcarriers < 4 {
            return Err(Error::Config("num_subcarriers must be at least 4".into()));
        }
        for &k in &self.active_carriers {
            if k < 1 || k >= self.num_subcarriers / 2 {
                return Err(Error::Config(format!(
                    "carrier index {k} outside 1..{}",
                    self.num_subcarriers / 2
                )));
            }
        }
        if let Some(dw) = self.freq_offset {
            if dw.abs() > PI / self.num_subcarriers as f64 {
                return Err(Error::Config(format!(
                    "|freq_offset| = {:.4e} exceeds pi/{}",
                    dw.abs(),
                    self.num_subcarriers
                )));
            }
        }
        if let Some(a) = &self.amplitudes {
            if a.len() != self.active_carriers.len() {
                return Err(Error::Config("amplitudes length mismatch".into()));
            }
        }
        if let Some(p) = &self.phases {
            if p.len() != self.active_carriers.len() {
                return Err(Error::Config("phases length mismatch".into()));
            }
        }
        if self.phase_alphabet.is_empty() {
            return Err(Error::Config("phase alphabet must be nonempty".into()));
        }
        Ok(())
    }
}

/// Generates a multi-tone signal. Random draws (phases from the alphabet,
/// frequency offset) are reproducible from the seed.
pub fn gen_multitone(cfg: &MultitoneConfig, seed: u64) -> Result<Signal> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = match &cfg.phases {
        Some(p) => p.clone(),
        None => (0..cfg.active_carriers.len())
            .map(|_| cfg.phase_alphabet[rng.gen_range(0..cfg.phase_alphabet.len())])
            .collect(),
    };
    let bound = PI / cfg.num_subcarriers as f64;
    let dw = match cfg.freq_offset {
        Some(dw) => dw,
        None => rng.gen_range(-bound..=bound),
    };
    let ones;
    let amps: &[f64] = match &cfg.amplitudes {
        Some(a) => a,
        None => {
            ones = vec![1.0; cfg.active_carriers.len()];
            &ones
        }
    };

    let omegas: Vec<f64> = cfg
        .active_carriers
        .iter()
        .map(|&k| 2.0 * PI * k as f64 / cfg.num_subcarriers as f64 + dw)
        .collect();

    let mut samples = vec![0.0; cfg.length];
    for (i, &w) in omegas.iter().enumerate() {
        let (a, alpha) = (cfg.gain * amps[i], phases[i]);
        for (n, s) in samples.iter_mut().enumerate() {
            *s += a * (w * n as f64 + alpha).sin();
        }
    }
    Signal::with_bound(samples, 1.0)
}

/// Bandpass filtered white noise covering `[low*pi, high*pi]`, peak-normalized
/// to one. The filter is a Hann-windowed linear-phase FIR of order 256.
pub fn gen_bandpass_noise(band: (f64, f64), length: usize, seed: u64) -> Result<Signal> {
    const ORDER: usize = 256;
    let h = fir::hann_bandpass(ORDER, band.0, band.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pad = ORDER;
    let noise: Vec<f64> = (0..length + pad).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let full = fir::conv_full(&noise, &h);
    // Take a steady-state window (drop the startup transient).
    let start = ORDER;
    let mut samples = full[start..start + length].to_vec();
    let peak = samples.iter().fold(0.0f64, |a, &s| a.max(s.abs()));
    if peak == 0.0 {
        return Err(Error::Config("degenerate noise realization".into()));
    }
    for s in &mut samples {
        *s /= peak;
    }
    Signal::with_bound(samples, 1.0)
}

/// Mid-tread uniform quantization to `bits` bits, step `2^(1-bits)`, with
/// round-half-away-from-zero and clamping to `[-1, 1 - step]`.
pub fn quantize(x: &Signal, bits: u32) -> Signal {
    assert!(bits >= 1, "bits must be >= 1");
    let step = (2.0f64).powi(1 - bits as i32);
    let hi = 1.0 - step;
    let samples = x
        .samples
        .iter()
        .map(|&s| (step * (s / step).round()).clamp(-1.0, hi))
        .collect();
    Signal { samples, bit_depth: Some(bits), amplitude_bound: x.amplitude_bound }
}

/// Largest gain `G` (to 1e-4 relative, by bisection) such that the peak of
/// every distorted signal `distort(G*x)` stays at or below `margin`.
pub fn compute_gain(x_set: &[Signal], model: &DistortionModel, margin: f64) -> Result<f64> {
    if x_set.is_empty() {
        return Err(Error::Input("empty signal set".into()));
    }
    if !(0.0..=1.0).contains(&margin) || margin == 0.0 {
        return Err(Error::Config(format!("margin must be in (0, 1], got {margin}")));
    }
    let peak_at = |g: f64| -> f64 {
        x_set
            .iter()
            .map(|x| model.apply(&x.scaled(g)).peak())
            .fold(0.0f64, f64::max)
    };

    // Bracket the crossing.
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut steps = 0;
    while peak_at(hi) <= margin {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps > 60 {
            return Ok(lo); // effectively unbounded; any practical gain works
        }
    }
    for _ in 0..80 {
        if hi - lo <= 1e-4 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if peak_at(mid) <= margin {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return Err(Error::GainSearch(format!(
            "no positive gain keeps the distorted peak below {margin} \
             (peak at G -> 0 stays above margin)"
        )));
    }
    // Guard against non-monotone peak growth: the returned gain must satisfy
    // the margin when re-checked directly.
    let check = peak_at(lo);
    if check > margin {
        return Err(Error::GainSearch(format!(
            "non-monotone peak growth: peak {check:.6} at G = {lo:.6e} exceeds margin {margin}"
        )));
    }
    Ok(lo)
}

/// Least-squares fit of sine/cosine pairs at the given frequencies to `v`;
/// returns the reconstructed clean multi-tone.
pub fn estimate_reference(v: &Signal, freqs: &[f64]) -> Result<Signal> {
    if freqs.is_empty() {
        return Err(Error::Estimation("no frequencies given".into()));
    }
    for (i, &fi) in freqs.iter().enumerate() {
        for &fj in &freqs[i + 1..] {
            if (fi - fj).abs() < 1e-12 {
                return Err(Error::Estimation(format!(
                    "duplicate frequency {fi} makes the basis rank-deficient"
                )));
            }
        }
    }
    let l = v.len();
    let cols = 2 * freqs.len();
    if cols >= l {
        return Err(Error::Estimation("too few samples for the basis".into()));
    }
    let mut basis = DMatrix::zeros(l, cols);
    for (j, &w) in freqs.iter().enumerate() {
        for n in 0..l {
            let wn = w * n as f64;
            basis[(n, 2 * j)] = wn.sin();
            basis[(n, 2 * j + 1)] = wn.cos();
        }
    }
    let rhs = DVector::from_column_slice(v.samples());
    let gram = basis.transpose() * &basis;
    let proj = basis.transpose() * rhs;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Estimation("rank-deficient basis".into()))?;
    let coeffs = chol.solve(&proj);
    let recon = basis * coeffs;
    Ok(Signal::new(recon.as_slice().to_vec()))
}
