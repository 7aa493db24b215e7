//! Linearizer structures: the bias-branch scheme (shifted modulus or ReLU
//! nonlinearities) and the Hammerstein power-branch benchmark, each in a
//! pre-sampling and a post-sampling (polyphase multirate) variant.
//!
//! Both schemes share the delta form of the linear branch: the output is the
//! delayed input plus a correction, so an all-zero coefficient set is an
//! exact passthrough.

use serde::{Deserialize, Serialize};

use crate::distortion::interp_high_rate;
use crate::error::{Error, Result};
use crate::fir;
use crate::signal::Signal;

/// Linearizer family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Power branches `v^p`.
    Hammerstein,
    /// Bias branches `f(v + b_m)`.
    Proposed,
}

/// Where the compensated distortion originates relative to the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Pre,
    Post,
}

/// Static single-input nonlinearity of the bias branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    Modulus,
    Relu,
}

impl Nonlinearity {
    #[inline]
    pub fn eval(self, v: f64, b: f64) -> f64 {
        match self {
            Nonlinearity::Modulus => (v + b).abs(),
            Nonlinearity::Relu => (v + b).max(0.0),
        }
    }
}

/// Uniform bias grid over `[-b_max, b_max]`; a single branch sits at zero.
pub fn bias_grid(n: usize, b_max: f64) -> Vec<f64> {
    assert!(n >= 1);
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|m| -b_max + 2.0 * b_max * m as f64 / (n - 1) as f64)
        .collect()
}

/// Type-1 polyphase components of `h` for factor `p`:
/// `comps[i][j] = h(j*p + i)`.
pub fn polyphase_type1(h: &[f64], p: usize) -> Vec<Vec<f64>> {
    (0..p)
        .map(|i| h.iter().skip(i).step_by(p).copied().collect())
        .collect()
}

/// Type-2 polyphase components of `h` for factor `p`, in causal form:
/// `comps[i][q] = h(q*p - i)` (zero where `q*p < i`). The leading zeros
/// absorb the advance of the textbook type-2 decomposition.
pub fn polyphase_type2(h: &[f64], p: usize) -> Vec<Vec<f64>> {
    (0..p)
        .map(|i| {
            let len = (h.len() + i).div_ceil(p);
            (0..len)
                .map(|q| {
                    let idx = q * p;
                    if idx >= i && idx - i < h.len() {
                        h[idx - i]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// One-slot cache of the raw interpolated signal, reused across branches
/// that share the same upsampling factor and interpolation filter (all
/// bias branches do).
#[derive(Default)]
pub struct InterpMemo {
    slot: Option<(usize, Vec<f64>, Vec<f64>)>,
}

impl InterpMemo {
    pub fn raw(&mut self, v: &[f64], p: &PostBranchParams) -> &[f64] {
        let hit =
            matches!(&self.slot, Some((f, h, _)) if *f == p.factor && h.as_slice() == p.h);
        if !hit {
            let raw = interp_high_rate(v, &p.h, p.factor);
            self.slot = Some((p.factor, p.h.clone(), raw));
        }
        &self.slot.as_ref().unwrap().2
    }
}

/// Per-branch multirate parameters of a post-sampling linearizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostBranchParams {
    /// Internal upsampling factor of the branch.
    pub factor: usize,
    /// Nyquist interpolation filter (group delay divisible by `factor`).
    pub h: Vec<f64>,
}

/// A designed linearizer: structure plus coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizerModel {
    pub kind: Kind,
    pub sampling: Sampling,
    /// Memory order; every coefficient filter has `m + 1` taps.
    pub m: usize,
    pub offset: f64,
    /// Linear correction on top of the pure `m/2`-sample delay.
    pub linear_delta_taps: Vec<f64>,
    /// One coefficient filter per nonlinear branch.
    pub branch_taps: Vec<Vec<f64>>,
    /// Used by the bias-branch scheme.
    pub nonlinearity: Nonlinearity,
    pub b_max: f64,
    /// Bias of each branch (bias-branch scheme); empty for Hammerstein.
    pub biases: Vec<f64>,
    /// Present exactly when `sampling == Post`, one entry per branch.
    pub post: Option<Vec<PostBranchParams>>,
    /// Fixed-point emulation of internal data quantization: Hammerstein must
    /// requantize the static-nonlinearity outputs to the datapath wordlength
    /// before the branch filters, so the quantization noise is shaped by the
    /// branch filters' energy. The bias-branch scheme has no such internal
    /// quantization point (all its quantizations can sit after the filters),
    /// so this field has no effect on it.
    pub internal_quant_bits: Option<u32>,
}

impl LinearizerModel {
    pub fn branches(&self) -> usize {
        self.branch_taps.len()
    }

    /// Delay of the passthrough path.
    pub fn passthrough_delay(&self) -> usize {
        self.m / 2
    }

    pub fn shape(&self) -> crate::analysis::ModelShape {
        crate::analysis::ModelShape {
            kind: self.kind,
            sampling: self.sampling,
            m: self.m,
            branches: self.branches(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.linear_delta_taps.len() != self.m + 1 {
            return Err(Error::Structural(format!(
                "linear branch has {} taps, expected {}",
                self.linear_delta_taps.len(),
                self.m + 1
            )));
        }
        for (i, t) in self.branch_taps.iter().enumerate() {
            if t.len() != self.m + 1 {
                return Err(Error::Structural(format!(
                    "branch {i} has {} taps, expected {}",
                    t.len(),
                    self.m + 1
                )));
            }
        }
        let all = self
            .linear_delta_taps
            .iter()
            .chain(self.branch_taps.iter().flatten())
            .chain(self.biases.iter())
            .chain(std::iter::once(&self.offset));
        for &c in all {
            if !c.is_finite() {
                return Err(Error::Structural("non-finite coefficient".into()));
            }
        }
        match self.kind {
            Kind::Proposed => {
                if self.biases.len() != self.branches() {
                    return Err(Error::Structural(format!(
                        "{} biases for {} branches",
                        self.biases.len(),
                        self.branches()
                    )));
                }
                if self.b_max < 0.0 || !self.b_max.is_finite() {
                    return Err(Error::Structural(format!("invalid b_max {}", self.b_max)));
                }
                let grid = bias_grid(self.branches().max(1), self.b_max);
                for (b, g) in self.biases.iter().zip(&grid) {
                    if (b - g).abs() > 1e-12 {
                        return Err(Error::Structural(format!(
                            "bias {b} off the uniform grid (expected {g})"
                        )));
                    }
                }
            }
            Kind::Hammerstein => {
                if !self.biases.is_empty() {
                    return Err(Error::Structural(
                        "power branches take no biases".into(),
                    ));
                }
            }
        }
        match (self.sampling, &self.post) {
            (Sampling::Pre, None) => {}
            (Sampling::Post, Some(params)) => {
                if params.len() != self.branches() {
                    return Err(Error::Structural(format!(
                        "{} multirate parameter sets for {} branches",
                        params.len(),
                        self.branches()
                    )));
                }
                for (i, p) in params.iter().enumerate() {
                    if p.factor < 2 {
                        return Err(Error::Structural(format!(
                            "branch {i}: upsampling factor {} must be >= 2",
                            p.factor
                        )));
                    }
                    if p.h.len() % 2 == 0 {
                        return Err(Error::Structural(format!(
                            "branch {i}: interpolation filter length must be odd"
                        )));
                    }
                    if fir::group_delay(&p.h) % p.factor != 0 {
                        return Err(Error::Structural(format!(
                            "branch {i}: group delay {} not divisible by factor {}",
                            fir::group_delay(&p.h),
                            p.factor
                        )));
                    }
                    if self.kind == Kind::Hammerstein && p.factor != i + 2 {
                        return Err(Error::Structural(format!(
                            "power branch {i} must upsample by {} (its power), got {}",
                            i + 2,
                            p.factor
                        )));
                    }
                }
            }
            (Sampling::Pre, Some(_)) => {
                return Err(Error::Structural(
                    "pre-sampling linearizer carries multirate parameters".into(),
                ))
            }
            (Sampling::Post, None) => {
                return Err(Error::Structural(
                    "post-sampling linearizer missing multirate parameters".into(),
                ))
            }
        }
        Ok(())
    }

    /// Applies the linearizer to a distorted signal.
    pub fn apply(&self, v: &Signal) -> Result<Signal> {
        self.validate()?;
        let mut y = self.common_linear_part(v.samples());
        match (self.kind, self.sampling) {
            (Kind::Proposed, Sampling::Pre) => {
                for (w, &b) in self.branch_taps.iter().zip(&self.biases) {
                    let u: Vec<f64> = v
                        .samples()
                        .iter()
                        .map(|&s| self.nonlinearity.eval(s, b))
                        .collect();
                    add_filtered(&mut y, &u, w);
                }
            }
            (Kind::Hammerstein, Sampling::Pre) => {
                let mut power: Vec<f64> = v.samples().to_vec();
                for w in &self.branch_taps {
                    for (pw, &s) in power.iter_mut().zip(v.samples()) {
                        *pw *= s;
                    }
                    match self.internal_quant_bits {
                        Some(bits) => {
                            let mut u = power.clone();
                            quantize_in_place(&mut u, bits);
                            add_filtered(&mut y, &u, w);
                        }
                        None => add_filtered(&mut y, &power, w),
                    }
                }
            }
            (_, Sampling::Post) => {
                let params = self.post.as_ref().unwrap();
                let mut memo = InterpMemo::default();
                for ((w, p), i) in self.branch_taps.iter().zip(params).zip(0..) {
                    let u_hi = self.post_basis_from_raw(memo.raw(v.samples(), p), i);
                    crate::distortion::accumulate_high_rate_branch(
                        &mut y, &u_hi, w, p.factor,
                    );
                }
            }
        }
        Ok(Signal::new(y))
    }

    /// High-rate branch input, group-delay aligned so sample `n * factor`
    /// corresponds to low-rate time `n`. This is the exact basis the
    /// coefficient design regresses on.
    pub fn post_branch_basis(
        &self,
        v: &[f64],
        params: &PostBranchParams,
        branch: usize,
    ) -> Vec<f64> {
        self.post_basis_from_raw(&interp_high_rate(v, &params.h, params.factor), branch)
    }

    /// Branch basis from an already interpolated signal (see [`InterpMemo`]).
    pub fn post_basis_from_raw(&self, raw: &[f64], branch: usize) -> Vec<f64> {
        match self.kind {
            Kind::Proposed => {
                let b = self.biases[branch];
                raw.iter().map(|&s| self.nonlinearity.eval(s, b)).collect()
            }
            Kind::Hammerstein => {
                let p = self.post.as_ref().unwrap()[branch].factor;
                let mut u: Vec<f64> = raw.iter().map(|&s| s.powi(p as i32)).collect();
                if let Some(bits) = self.internal_quant_bits {
                    quantize_in_place(&mut u, bits);
                }
                u
            }
        }
    }

    /// Reference implementation of the post-sampling variants with all branch
    /// processing at the high rate (upsample, full-length interpolation
    /// filter, static nonlinearity, branch filter, downsample). Used to
    /// validate the polyphase path.
    pub fn apply_post_direct(&self, v: &Signal) -> Result<Signal> {
        self.validate()?;
        let params = self
            .post
            .as_ref()
            .ok_or_else(|| Error::Structural("not a post-sampling linearizer".into()))?;
        let mut y = self.common_linear_part(v.samples());
        for ((w, p), i) in self.branch_taps.iter().zip(params).zip(0..) {
            let up = fir::upsample(v.samples(), p.factor);
            let interp = fir::advance(&fir::filter(&up, &p.h), fir::group_delay(&p.h));
            let mut s: Vec<f64> = match self.kind {
                Kind::Proposed => interp
                    .iter()
                    .map(|&u| self.nonlinearity.eval(u, self.biases[i]))
                    .collect(),
                Kind::Hammerstein => {
                    interp.iter().map(|&u| u.powi(p.factor as i32)).collect()
                }
            };
            if self.kind == Kind::Hammerstein {
                if let Some(bits) = self.internal_quant_bits {
                    quantize_in_place(&mut s, bits);
                }
            }
            let y_hi = fir::filter(&s, w);
            for (yn, &c) in y.iter_mut().zip(fir::downsample(&y_hi, p.factor, 0).iter()) {
                *yn += c;
            }
        }
        Ok(Signal::new(y))
    }

    /// Passthrough delay plus offset plus the linear correction filter.
    fn common_linear_part(&self, v: &[f64]) -> Vec<f64> {
        let mut y = fir::delay(v, self.passthrough_delay());
        for s in y.iter_mut() {
            *s += self.offset;
        }
        add_filtered(&mut y, v, &self.linear_delta_taps);
        y
    }

    /// Rounds all coefficients to a mid-tread `bits`-bit grid, emulating
    /// quantized coefficient storage.
    pub fn quantize_params(&mut self, bits: u32) {
        let step = (2.0f64).powi(1 - bits as i32);
        let q = |c: &mut f64| *c = (step * (*c / step).round()).clamp(-1.0, 1.0 - step);
        q(&mut self.offset);
        self.linear_delta_taps.iter_mut().for_each(&q);
        self.branch_taps.iter_mut().flatten().for_each(&q);
    }

    pub fn to_json_string(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(&LinearizerDoc::from(self))?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: LinearizerDoc = serde_json::from_str(s)?;
        if doc.version != 1 {
            return Err(Error::Config(format!(
                "unsupported linearizer version {}",
                doc.version
            )));
        }
        let model = LinearizerModel {
            kind: doc.kind,
            sampling: doc.sampling,
            m: doc.m,
            offset: doc.offset,
            linear_delta_taps: doc.linear_delta_taps,
            branch_taps: doc.branch_taps,
            nonlinearity: doc.nonlinearity,
            b_max: doc.b_max,
            biases: doc.biases,
            post: doc.post,
            internal_quant_bits: doc.internal_quant_bits,
        };
        model.validate()?;
        Ok(model)
    }
}

fn add_filtered(acc: &mut [f64], x: &[f64], h: &[f64]) {
    for (k, &hk) in h.iter().enumerate() {
        if hk == 0.0 {
            continue;
        }
        for n in k..acc.len() {
            acc[n] += hk * x[n - k];
        }
    }
}

fn quantize_in_place(x: &mut [f64], bits: u32) {
    let step = (2.0f64).powi(1 - bits as i32);
    for s in x.iter_mut() {
        *s = (step * (*s / step).round()).clamp(-1.0, 1.0 - step);
    }
}

/// Versioned on-disk form of a linearizer.
#[derive(Serialize, Deserialize)]
struct LinearizerDoc {
    version: u32,
    kind: Kind,
    sampling: Sampling,
    nonlinearity: Nonlinearity,
    m: usize,
    b_max: f64,
    biases: Vec<f64>,
    offset: f64,
    linear_delta_taps: Vec<f64>,
    branch_taps: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    post: Option<Vec<PostBranchParams>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    internal_quant_bits: Option<u32>,
}

impl From<&LinearizerModel> for LinearizerDoc {
    fn from(m: &LinearizerModel) -> Self {
        LinearizerDoc {
            version: 1,
            kind: m.kind,
            sampling: m.sampling,
            nonlinearity: m.nonlinearity,
            m: m.m,
            b_max: m.b_max,
            biases: m.biases.clone(),
            offset: m.offset,
            linear_delta_taps: m.linear_delta_taps.clone(),
            branch_taps: m.branch_taps.clone(),
            post: m.post.clone(),
            internal_quant_bits: m.internal_quant_bits,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::{default_interp_order, design_interp_filter};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(len: usize, seed: u64, amp: f64) -> Signal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Signal::new((0..len).map(|_| rng.gen_range(-amp..amp)).collect())
    }

    fn zero_proposed_pre(m: usize, branches: usize, b_max: f64) -> LinearizerModel {
        LinearizerModel {
            kind: Kind::Proposed,
            sampling: Sampling::Pre,
            m,
            offset: 0.0,
            linear_delta_taps: vec![0.0; m + 1],
            branch_taps: vec![vec![0.0; m + 1]; branches],
            nonlinearity: Nonlinearity::Modulus,
            b_max,
            biases: bias_grid(branches, b_max),
            post: None,
            internal_quant_bits: None,
        }
    }

    fn randomized(mut model: LinearizerModel, seed: u64) -> LinearizerModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        model.offset = rng.gen_range(-0.01..0.01);
        for t in model
            .linear_delta_taps
            .iter_mut()
            .chain(model.branch_taps.iter_mut().flatten())
        {
            *t = rng.gen_range(-0.1..0.1);
        }
        model
    }

    #[test]
    fn bias_grid_shape() {
        assert_eq!(bias_grid(1, 0.7), vec![0.0]);
        let g = bias_grid(5, 1.0);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let g = bias_grid(8, 0.9);
        assert_abs_diff_eq!(g[0], -0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(g[7], 0.9, epsilon = 1e-15);
        for w in g.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], 1.8 / 7.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn nonlinearity_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let v: f64 = rng.gen_range(-2.0..2.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            let modulus = Nonlinearity::Modulus.eval(v, b);
            let relu = Nonlinearity::Relu.eval(v, b);
            // |u| = relu(u) + relu(-u) and relu(u) - relu(-u) = u.
            assert_abs_diff_eq!(
                modulus,
                relu + Nonlinearity::Relu.eval(-v, -b),
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                relu - Nonlinearity::Relu.eval(-v, -b),
                v + b,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn zero_coefficients_are_exact_passthrough() {
        let v = random_signal(128, 1, 1.0);
        for m in [0usize, 4, 6, 7] {
            let model = zero_proposed_pre(m, 8, 1.0);
            let y = model.apply(&v).unwrap();
            assert_eq!(y.samples(), fir::delay(v.samples(), m / 2).as_slice());
        }
    }

    /// Brute-force evaluation of the bias-branch output equation.
    fn proposed_pre_oracle(model: &LinearizerModel, v: &[f64]) -> Vec<f64> {
        let delta = model.passthrough_delay();
        (0..v.len())
            .map(|n| {
                let mut y = if n >= delta { v[n - delta] } else { 0.0 };
                y += model.offset;
                for l in 0..=model.m {
                    if n >= l {
                        y += model.linear_delta_taps[l] * v[n - l];
                        for (w, &b) in model.branch_taps.iter().zip(&model.biases) {
                            y += w[l] * model.nonlinearity.eval(v[n - l], b);
                        }
                    }
                }
                y
            })
            .collect()
    }

    /// Brute-force evaluation of the power-branch output equation.
    fn hammerstein_pre_oracle(model: &LinearizerModel, v: &[f64]) -> Vec<f64> {
        let delta = model.passthrough_delay();
        (0..v.len())
            .map(|n| {
                let mut y = if n >= delta { v[n - delta] } else { 0.0 };
                y += model.offset;
                for l in 0..=model.m {
                    if n >= l {
                        y += model.linear_delta_taps[l] * v[n - l];
                        for (i, w) in model.branch_taps.iter().enumerate() {
                            y += w[l] * v[n - l].powi(i as i32 + 2);
                        }
                    }
                }
                y
            })
            .collect()
    }

    #[test]
    fn proposed_pre_matches_bruteforce() {
        for nl in [Nonlinearity::Modulus, Nonlinearity::Relu] {
            let mut model = randomized(zero_proposed_pre(6, 8, 1.2), 5);
            model.nonlinearity = nl;
            let v = random_signal(200, 6, 1.0);
            let y = model.apply(&v).unwrap();
            let oracle = proposed_pre_oracle(&model, v.samples());
            for n in 0..v.len() {
                assert!(
                    (y.samples()[n] - oracle[n]).abs() < 1e-12,
                    "n = {n}: {} vs {}",
                    y.samples()[n],
                    oracle[n]
                );
            }
        }
    }

    #[test]
    fn hammerstein_pre_matches_bruteforce() {
        let mut model = randomized(zero_proposed_pre(4, 5, 1.0), 9);
        model.kind = Kind::Hammerstein;
        model.biases = Vec::new();
        let v = random_signal(200, 10, 0.95);
        let y = model.apply(&v).unwrap();
        let oracle = hammerstein_pre_oracle(&model, v.samples());
        for n in 0..v.len() {
            assert!(
                (y.samples()[n] - oracle[n]).abs() < 1e-12,
                "n = {n}: {} vs {}",
                y.samples()[n],
                oracle[n]
            );
        }
    }

    fn post_model(kind: Kind, m: usize, factors: &[usize], seed: u64) -> LinearizerModel {
        let branches = factors.len();
        let mut model = randomized(zero_proposed_pre(m, branches, 1.0), seed);
        model.kind = kind;
        model.sampling = Sampling::Post;
        if kind == Kind::Hammerstein {
            model.biases = Vec::new();
        }
        model.post = Some(
            factors
                .iter()
                .map(|&p| PostBranchParams {
                    factor: p,
                    h: design_interp_filter(p, default_interp_order(p)).unwrap(),
                })
                .collect(),
        );
        model
    }

    #[test]
    fn post_polyphase_matches_high_rate_reference() {
        let v = random_signal(512, 20, 0.9);
        for (kind, factors, seed) in [
            (Kind::Proposed, vec![2usize; 6], 1u64),
            (Kind::Proposed, vec![3; 4], 2),
            (Kind::Proposed, vec![5; 3], 3),
            (Kind::Proposed, vec![10; 2], 4),
            (Kind::Hammerstein, vec![2, 3, 4, 5], 5),
        ] {
            let model = post_model(kind, 2, &factors, seed);
            let fast = model.apply(&v).unwrap();
            let slow = model.apply_post_direct(&v).unwrap();
            for n in 0..v.len() {
                assert!(
                    (fast.samples()[n] - slow.samples()[n]).abs() < 1e-12,
                    "{kind:?}, n = {n}: {} vs {}",
                    fast.samples()[n],
                    slow.samples()[n]
                );
            }
        }
    }

    #[test]
    fn branch_filter_nonzero_polyphase_components() {
        // A coefficient filter with M+1 taps splits into min(P, M+1) nonzero
        // type-2 components at factor P.
        for m in [0usize, 2, 6] {
            for p in [2usize, 3, 4, 8] {
                let w: Vec<f64> = (0..=m).map(|l| 1.0 + l as f64).collect();
                let comps = polyphase_type2(&w, p);
                let nonzero = comps
                    .iter()
                    .filter(|c| c.iter().any(|&t| t != 0.0))
                    .count();
                assert_eq!(nonzero, p.min(m + 1), "M = {m}, P = {p}");
            }
        }
    }

    #[test]
    fn polyphase_decompositions_cover_all_taps() {
        let h: Vec<f64> = (1..=13).map(|n| n as f64).collect();
        for p in [2usize, 3, 5] {
            let t1 = polyphase_type1(&h, p);
            for (i, comp) in t1.iter().enumerate() {
                for (j, &c) in comp.iter().enumerate() {
                    assert_eq!(c, h[j * p + i]);
                }
            }
            let total: usize = t1.iter().map(|c| c.len()).sum();
            assert_eq!(total, h.len());
            let t2 = polyphase_type2(&h, p);
            for (i, comp) in t2.iter().enumerate() {
                for (q, &c) in comp.iter().enumerate() {
                    let expect = if q * p >= i && q * p - i < h.len() {
                        h[q * p - i]
                    } else {
                        0.0
                    };
                    assert_eq!(c, expect);
                }
            }
        }
    }

    #[test]
    fn downsampled_filtering_identity() {
        // y(m) = sum_i (W_i (type-2) applied to phase-i sequences) equals
        // phase-zero downsampling of full-rate filtering.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = 3;
        let w: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..90).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let direct = fir::downsample(&fir::filter(&u, &w), p, 0);
        let comps = polyphase_type2(&w, p);
        let mut recon = vec![0.0; u.len() / p];
        for (i, comp) in comps.iter().enumerate() {
            // Phase-i input sequence u(q*p + i), delayed one low-rate sample
            // relative to phase 0 (absorbed by the causal component form).
            let phase: Vec<f64> = fir::downsample(&u, p, i);
            let filtered = fir::filter(&phase, comp);
            for (n, &f) in filtered.iter().enumerate() {
                recon[n] += f;
            }
        }
        for n in 0..recon.len() {
            assert_abs_diff_eq!(recon[n], direct[n], epsilon = 1e-12);
        }
    }

    #[test]
    fn json_roundtrip_and_tamper_rejection() {
        let model = post_model(Kind::Proposed, 4, &[4, 4, 4], 8);
        let json = model.to_json_string().unwrap();
        let back = LinearizerModel::from_json_str(&json).unwrap();
        assert_eq!(model, back);

        let mut pre = randomized(zero_proposed_pre(6, 8, 1.1), 2);
        pre.nonlinearity = Nonlinearity::Relu;
        let json = pre.to_json_string().unwrap();
        assert_eq!(pre, LinearizerModel::from_json_str(&json).unwrap());

        // Off-grid bias must be rejected on load.
        let tampered = json.replace("\"b_max\": 1.1", "\"b_max\": 1.3");
        assert!(LinearizerModel::from_json_str(&tampered).is_err());
    }

    #[test]
    fn validation_rejects_inconsistent_structures() {
        let mut m = zero_proposed_pre(4, 4, 1.0);
        m.branch_taps[2] = vec![0.0; 3];
        assert!(m.validate().is_err());

        let mut m = zero_proposed_pre(4, 4, 1.0);
        m.biases.pop();
        assert!(m.validate().is_err());

        let mut m = zero_proposed_pre(4, 4, 1.0);
        m.sampling = Sampling::Post; // missing multirate parameters
        assert!(m.validate().is_err());

        let mut m = post_model(Kind::Hammerstein, 2, &[2, 3], 1);
        m.post.as_mut().unwrap()[1].factor = 5; // power branch must match
        assert!(m.validate().is_err());
    }

    #[test]
    fn quantize_params_lands_on_grid() {
        let mut model = randomized(zero_proposed_pre(6, 8, 1.0), 13);
        model.quantize_params(14);
        let step = (2.0f64).powi(-13);
        for &t in model
            .linear_delta_taps
            .iter()
            .chain(model.branch_taps.iter().flatten())
        {
            let ratio = t / step;
            assert!((ratio - ratio.round()).abs() < 1e-9, "tap {t} off grid");
        }
    }

    #[test]
    fn internal_quantization_leaves_bias_branch_scheme_untouched() {
        let model_plain = randomized(zero_proposed_pre(4, 6, 1.0), 17);
        let mut model_q = model_plain.clone();
        model_q.internal_quant_bits = Some(10);
        let v = random_signal(64, 18, 0.5);
        let y = model_plain.apply(&v).unwrap();
        let yq = model_q.apply(&v).unwrap();
        assert_eq!(y.samples(), yq.samples());
    }
}
