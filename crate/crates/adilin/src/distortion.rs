//! Distortion models used to generate training and evaluation data: the
//! pre-sampling memory polynomial and the post-sampling analog-equivalent
//! branch model (interpolation, static power, branch filter), plus calibrated
//! random model generation targeting a specified mean SNDR.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fir;
use crate::signal::{compute_gain, Signal};

/// Memory-polynomial model:
/// `v(n) = a0 + sum_k a1(k) x(n-k) + sum_p sum_k ap(k) x^p(n-k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreSamplingModel {
    offset: f64,
    /// `taps[p-1]` holds `a_p`, `p = 1..=q`; every filter has `d + 1` taps.
    taps: Vec<Vec<f64>>,
    d: usize,
    q: usize,
}

impl PreSamplingModel {
    /// Identity-plus-delay model: `a_1` a centered unit impulse, all
    /// nonlinear taps zero.
    pub fn identity(d: usize, q: usize) -> Self {
        assert!(q >= 2, "polynomial order must be at least 2");
        let mut linear = vec![0.0; d + 1];
        linear[d / 2] = 1.0;
        let mut taps = vec![vec![0.0; d + 1]; q];
        taps[0] = linear;
        PreSamplingModel { offset: 0.0, taps, d, q }
    }

    pub fn new(offset: f64, taps: Vec<Vec<f64>>, d: usize) -> Result<Self> {
        let q = taps.len();
        if q < 2 {
            return Err(Error::ModelConstruction("need at least order Q = 2".into()));
        }
        for (i, t) in taps.iter().enumerate() {
            if t.len() != d + 1 {
                return Err(Error::ModelConstruction(format!(
                    "a_{} has {} taps, expected {}",
                    i + 1,
                    t.len(),
                    d + 1
                )));
            }
        }
        Ok(PreSamplingModel { offset, taps, d, q })
    }

    /// Replaces the taps of order `p` (1-based).
    pub fn set_taps(&mut self, p: usize, taps: Vec<f64>) {
        assert!(p >= 1 && p <= self.q);
        let mut t = taps;
        t.resize(self.d + 1, 0.0);
        self.taps[p - 1] = t;
    }

    pub fn taps(&self, p: usize) -> &[f64] {
        &self.taps[p - 1]
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Scales all nonlinear-branch taps (orders >= 2) by `s`.
    pub fn scale_nonlinear(&mut self, s: f64) {
        for t in self.taps.iter_mut().skip(1) {
            for v in t.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn apply(&self, x: &Signal) -> Signal {
        let xs = x.samples();
        let mut v = vec![self.offset; xs.len()];
        let mut power: Vec<f64> = xs.to_vec();
        for p in 1..=self.q {
            let taps = &self.taps[p - 1];
            for (k, &tk) in taps.iter().enumerate() {
                if tk == 0.0 {
                    continue;
                }
                for n in k..xs.len() {
                    v[n] += tk * power[n - k];
                }
            }
            if p < self.q {
                for (pw, &xn) in power.iter_mut().zip(xs) {
                    *pw *= xn;
                }
            }
        }
        Signal::new(v)
    }

    /// Delay of the dominant linear tap.
    pub fn linear_delay(&self) -> usize {
        argmax_abs(&self.taps[0])
    }

    pub fn transient_len(&self) -> usize {
        self.d
    }
}

/// One nonlinear branch of the post-sampling model: upsample by `power`,
/// interpolate with `h`, raise to `power`, filter with `g` at the high rate,
/// downsample keeping phase zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PostBranch {
    pub power: usize,
    /// Branch filter at the high rate, `d + 1` taps.
    pub g: Vec<f64>,
    /// Nyquist interpolation filter (DC gain `power`).
    pub h: Vec<f64>,
}

/// Discrete-time equivalent of analog (post-sampling) Hammerstein distortion.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSamplingModel {
    offset: f64,
    /// Linear branch `g_1` at the input/output rate, `d + 1` taps.
    linear: Vec<f64>,
    branches: Vec<PostBranch>,
    d: usize,
}

impl PostSamplingModel {
    pub fn new(offset: f64, linear: Vec<f64>, branches: Vec<PostBranch>) -> Result<Self> {
        let d = linear.len().checked_sub(1).ok_or_else(|| {
            Error::ModelConstruction("linear branch needs at least one tap".into())
        })?;
        for (i, b) in branches.iter().enumerate() {
            if b.power < 2 {
                return Err(Error::ModelConstruction(format!(
                    "branch {i}: upsampling factor {} must be >= 2",
                    b.power
                )));
            }
            if b.g.len() != d + 1 {
                return Err(Error::ModelConstruction(format!(
                    "branch {i}: g has {} taps, expected {}",
                    b.g.len(),
                    d + 1
                )));
            }
            validate_interp(&b.h, b.power).map_err(|e| {
                Error::ModelConstruction(format!("branch {i} (power {}): {e}", b.power))
            })?;
            let gd = fir::group_delay(&b.h);
            if gd % b.power != 0 {
                return Err(Error::ModelConstruction(format!(
                    "branch {i}: interpolation group delay {gd} is not an integer \
                     number of low-rate samples (P = {})",
                    b.power
                )));
            }
        }
        Ok(PostSamplingModel { offset, linear, branches, d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> usize {
        self.branches.iter().map(|b| b.power).max().unwrap_or(1)
    }

    pub fn branches(&self) -> &[PostBranch] {
        &self.branches
    }

    pub fn linear_taps(&self) -> &[f64] {
        &self.linear
    }

    pub fn scale_nonlinear(&mut self, s: f64) {
        for b in &mut self.branches {
            for v in b.g.iter_mut() {
                *v *= s;
            }
        }
    }

    /// Polyphase evaluation: all filtering runs at the input/output rate.
    pub fn apply(&self, x: &Signal) -> Signal {
        let xs = x.samples();
        let mut v: Vec<f64> = fir::filter(xs, &self.linear);
        for s in v.iter_mut() {
            *s += self.offset;
        }
        for b in &self.branches {
            let u_hi = interp_power_basis(xs, &b.h, b.power);
            accumulate_high_rate_branch(&mut v, &u_hi, &b.g, b.power);
        }
        Signal::new(v)
    }

    /// Reference implementation operating entirely at the high rate
    /// `P_k / T`; used to validate the polyphase path.
    pub fn apply_direct(&self, x: &Signal) -> Signal {
        let xs = x.samples();
        let mut v: Vec<f64> = fir::filter(xs, &self.linear);
        for s in v.iter_mut() {
            *s += self.offset;
        }
        for b in &self.branches {
            let up = fir::upsample(xs, b.power);
            let w = fir::advance(&fir::filter(&up, &b.h), fir::group_delay(&b.h));
            let pw: Vec<f64> = w.iter().map(|&s| s.powi(b.power as i32)).collect();
            let y_hi = fir::filter(&pw, &b.g);
            let y = fir::downsample(&y_hi, b.power, 0);
            for (vn, yn) in v.iter_mut().zip(y) {
                *vn += yn;
            }
        }
        Signal::new(v)
    }

    pub fn linear_delay(&self) -> usize {
        argmax_abs(&self.linear)
    }

    pub fn transient_len(&self) -> usize {
        let interp = self
            .branches
            .iter()
            .map(|b| (b.h.len() - 1) / b.power + 1)
            .max()
            .unwrap_or(0);
        interp + self.d + 1
    }
}

/// Interpolates `x` by `p` with filter `h` (group-delay compensated) and
/// raises every high-rate sample to the `p`-th power. Shared with the
/// post-sampling linearizers, which use the same front end.
pub(crate) fn interp_power_basis(x: &[f64], h: &[f64], p: usize) -> Vec<f64> {
    let aligned = interp_high_rate(x, h, p);
    aligned.iter().map(|&s| s.powi(p as i32)).collect()
}

/// High-rate interpolation of `x` by `p` via the type-1 polyphase components
/// of `h`, advanced by the filter group delay so that sample `n*p` aligns
/// with `x(n)`.
pub(crate) fn interp_high_rate(x: &[f64], h: &[f64], p: usize) -> Vec<f64> {
    let gd = fir::group_delay(h);
    debug_assert_eq!(gd % p, 0);
    let adv = gd / p;
    let comps = crate::linearizer::polyphase_type1(h, p);
    let mut hi = vec![0.0; x.len() * p];
    for (i, comp) in comps.iter().enumerate() {
        let phase = fir::advance(&fir::filter(x, comp), adv);
        for (q, &s) in phase.iter().enumerate() {
            hi[q * p + i] = s;
        }
    }
    hi
}

/// Adds `sum_l g(l) u_hi(n*p - l)` to `acc(n)`: high-rate filtering followed
/// by phase-zero downsampling, evaluated at the low rate.
pub(crate) fn accumulate_high_rate_branch(acc: &mut [f64], u_hi: &[f64], g: &[f64], p: usize) {
    for (n, a) in acc.iter_mut().enumerate() {
        let base = n * p;
        let mut s = 0.0;
        for (l, &gl) in g.iter().enumerate() {
            if l > base {
                break;
            }
            s += gl * u_hi[base - l];
        }
        *a += s;
    }
}

fn validate_interp(h: &[f64], p: usize) -> Result<()> {
    if h.len() % 2 == 0 {
        return Err(Error::FilterDesign("interpolation filter length must be odd".into()));
    }
    let c = (h.len() - 1) / 2;
    for (n, &v) in h.iter().enumerate() {
        if n != c && (n as isize - c as isize).unsigned_abs() % p == 0 && v.abs() > 1e-9 {
            return Err(Error::FilterDesign(format!(
                "Nyquist property violated at tap {n}: {v:.3e}"
            )));
        }
    }
    if (h[c] - 1.0).abs() > 1e-9 {
        return Err(Error::FilterDesign("center tap must be 1".into()));
    }
    for i in 0..p {
        let dc: f64 = h.iter().skip(i).step_by(p).sum();
        if (dc - 1.0).abs() > 1e-3 {
            return Err(Error::FilterDesign(format!(
                "polyphase component {i} has DC gain {dc:.6}, outside 1 +/- 1e-3"
            )));
        }
    }
    Ok(())
}

/// Kaiser-windowed (beta = 8) Nyquist interpolation filter for factor `p`:
/// lowpass with cutoff `pi/p`, DC gain `p`, zero crossings at nonzero
/// multiples of `p`.
pub fn design_interp_filter(p: usize, order: usize) -> Result<Vec<f64>> {
    if p < 2 {
        return Err(Error::Config(format!("interpolation factor {p} must be >= 2")));
    }
    if order % 2 != 0 {
        return Err(Error::Config("interpolation filter order must be even".into()));
    }
    let window = fir::kaiser(order, 8.0);
    let c = (order / 2) as isize;
    let mut h: Vec<f64> = (0..=order as isize)
        .map(|n| {
            let t = n - c;
            if t == 0 {
                1.0
            } else if t.unsigned_abs() % p == 0 {
                0.0 // forced Nyquist property
            } else {
                let tf = t as f64;
                (std::f64::consts::PI * tf / p as f64).sin() / (std::f64::consts::PI * tf / p as f64)
                    * window[n as usize]
            }
        })
        .collect();
    h[c as usize] = 1.0;
    validate_interp(&h, p).map_err(|e| {
        Error::FilterDesign(format!("order {order} too small for factor {p}: {e}"))
    })?;
    Ok(h)
}

/// Default interpolation-filter order used for factor `p`: group delay of
/// six low-rate samples.
pub fn default_interp_order(p: usize) -> usize {
    12 * p
}

/// Either distortion model behind a common surface.
#[derive(Debug, Clone, PartialEq)]
pub enum DistortionModel {
    Pre(PreSamplingModel),
    Post(PostSamplingModel),
}

impl DistortionModel {
    pub fn apply(&self, x: &Signal) -> Signal {
        match self {
            DistortionModel::Pre(m) => m.apply(x),
            DistortionModel::Post(m) => m.apply(x),
        }
    }

    pub fn linear_delay(&self) -> usize {
        match self {
            DistortionModel::Pre(m) => m.linear_delay(),
            DistortionModel::Post(m) => m.linear_delay(),
        }
    }

    pub fn transient_len(&self) -> usize {
        match self {
            DistortionModel::Pre(m) => m.transient_len(),
            DistortionModel::Post(m) => m.transient_len(),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            DistortionModel::Pre(m) => m.d(),
            DistortionModel::Post(m) => m.d(),
        }
    }

    pub fn q(&self) -> usize {
        match self {
            DistortionModel::Pre(m) => m.q(),
            DistortionModel::Post(m) => m.q(),
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDoc::from(self))?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(s)?;
        doc.try_into()
    }
}

/// Versioned on-disk form of a distortion model.
#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: u32,
    kind: String,
    d: usize,
    q: usize,
    offset: f64,
    /// `taps[0]` is the linear branch; `taps[p-1]` the order-`p` branch.
    taps: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interp_taps: Option<Vec<Vec<f64>>>,
}

impl From<&DistortionModel> for ModelDoc {
    fn from(m: &DistortionModel) -> Self {
        match m {
            DistortionModel::Pre(pre) => ModelDoc {
                version: 1,
                kind: "pre".into(),
                d: pre.d,
                q: pre.q,
                offset: pre.offset,
                taps: pre.taps.clone(),
                p: None,
                interp_taps: None,
            },
            DistortionModel::Post(post) => {
                let mut taps = vec![post.linear.clone()];
                taps.extend(post.branches.iter().map(|b| b.g.clone()));
                ModelDoc {
                    version: 1,
                    kind: "post".into(),
                    d: post.d,
                    q: post.q(),
                    offset: post.offset,
                    taps,
                    p: Some(post.branches.iter().map(|b| b.power).collect()),
                    interp_taps: Some(post.branches.iter().map(|b| b.h.clone()).collect()),
                }
            }
        }
    }
}

impl TryFrom<ModelDoc> for DistortionModel {
    type Error = Error;

    fn try_from(doc: ModelDoc) -> Result<Self> {
        if doc.version != 1 {
            return Err(Error::Config(format!("unsupported model version {}", doc.version)));
        }
        match doc.kind.as_str() {
            "pre" => Ok(DistortionModel::Pre(PreSamplingModel::new(
                doc.offset, doc.taps, doc.d,
            )?)),
            "post" => {
                let p = doc.p.ok_or_else(|| Error::Config("post model missing p".into()))?;
                let interp = doc
                    .interp_taps
                    .ok_or_else(|| Error::Config("post model missing interp_taps".into()))?;
                let mut taps = doc.taps.into_iter();
                let linear = taps
                    .next()
                    .ok_or_else(|| Error::Config("post model missing linear taps".into()))?;
                if p.len() != interp.len() {
                    return Err(Error::Config("p / interp_taps length mismatch".into()));
                }
                let branches = taps
                    .zip(p.into_iter().zip(interp))
                    .map(|(g, (power, h))| PostBranch { power, g, h })
                    .collect();
                Ok(DistortionModel::Post(PostSamplingModel::new(
                    doc.offset, linear, branches,
                )?))
            }
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Which distortion model family to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Pre,
    Post,
}

/// Outcome of random-model calibration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Common scale applied to all nonlinear branches.
    pub scale: f64,
    /// Signal gain keeping the distorted peak at or below one.
    pub gain: f64,
    /// Achieved mean SNDR over the calibration set.
    pub mean_sndr_db: f64,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Amplitude taper for the random nonlinear taps: gently decaying over the
/// polynomial order so the higher-order terms stay relevant after the common
/// scale calibration (a span of a few tens of dB across the order range).
fn order_taper(p: usize) -> f64 {
    1.0 / p as f64
}

/// Amplitude taper over the tap lag, decaying away from the branch center.
/// Physical front-end responses concentrate their energy around the main
/// tap, so the distortion's effective memory stays commensurate with the
/// short filters used to invert it.
fn lag_taper(k: usize, d: usize) -> f64 {
    0.5f64.powi((k as i32 - (d / 2) as i32).abs())
}

/// Mean SNDR over a calibration set for a given model, with the gain chosen
/// so every distorted signal stays within unit magnitude.
pub fn calibrated_mean_sndr(model: &DistortionModel, calib: &[Signal]) -> Result<(f64, f64)> {
    let gain = compute_gain(calib, model, 1.0)?;
    let delay = model.linear_delay();
    let skip = model.transient_len() + delay;
    let mut acc = 0.0;
    for x in calib {
        let xs = x.scaled(gain);
        let v = model.apply(&xs);
        let sndr = crate::analysis::sndr_db(&xs.delayed(delay), &v, skip)?;
        if sndr.is_infinite() {
            return Ok((f64::INFINITY, gain));
        }
        acc += sndr;
    }
    Ok((acc / calib.len() as f64, gain))
}

/// Generates a random distortion model whose mean SNDR over the calibration
/// set lands within +/- 0.5 dB of the target. The linear branch is a centered
/// unit impulse; nonlinear taps are i.i.d. Gaussian with a `1/p` order taper
/// and a lag taper centered on the main tap, scaled by one common factor
/// found by bisection.
pub fn gen_random_model(
    kind: ModelKind,
    d: usize,
    q: usize,
    target_sndr_db: f64,
    calib: &[Signal],
    seed: u64,
) -> Result<(DistortionModel, CalibrationReport)> {
    if calib.is_empty() {
        return Err(Error::Generation("empty calibration set".into()));
    }
    if q < 2 {
        return Err(Error::Generation("polynomial order must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = match kind {
        ModelKind::Pre => {
            let mut m = PreSamplingModel::identity(d, q);
            for p in 2..=q {
                let taps: Vec<f64> = (0..=d)
                    .map(|k| gaussian(&mut rng) * order_taper(p) * lag_taper(k, d))
                    .collect();
                m.set_taps(p, taps);
            }
            DistortionModel::Pre(m)
        }
        ModelKind::Post => {
            let mut linear = vec![0.0; d + 1];
            linear[d / 2] = 1.0;
            let branches = (2..=q)
                .map(|p| {
                    let g: Vec<f64> = (0..=d)
                        .map(|k| gaussian(&mut rng) * order_taper(p) * lag_taper(k, d))
                        .collect();
                    let h = design_interp_filter(p, default_interp_order(p))?;
                    Ok(PostBranch { power: p, g, h })
                })
                .collect::<Result<Vec<_>>>()?;
            DistortionModel::Post(PostSamplingModel::new(0.0, linear, branches)?)
        }
    };

    if target_sndr_db.is_infinite() {
        let mut m = base;
        scale_model(&mut m, 0.0);
        let (sndr, gain) = calibrated_mean_sndr(&m, calib)?;
        return Ok((m, CalibrationReport { scale: 0.0, gain, mean_sndr_db: sndr }));
    }
    if target_sndr_db <= 0.0 {
        return Err(Error::Generation("target SNDR must be positive".into()));
    }

    let eval = |s: f64| -> Result<(f64, f64)> {
        let mut m = base.clone();
        scale_model(&mut m, s);
        calibrated_mean_sndr(&m, calib)
    };

    // SNDR decreases as the common scale grows. Bracket the target.
    let mut lo = 1.0; // scale with SNDR >= target
    let mut hi = 1.0; // scale with SNDR < target
    let (s0, _) = eval(1.0)?;
    let mut achieved = (s0, s0);
    if s0 >= target_sndr_db {
        let mut found = false;
        for _ in 0..40 {
            hi *= 4.0;
            let (s, _) = eval(hi)?;
            achieved.1 = achieved.1.min(s);
            if s < target_sndr_db {
                found = true;
                break;
            }
            lo = hi;
        }
        if !found {
            return Err(Error::Generation(format!(
                "could not bracket target {target_sndr_db} dB; achieved range \
                 [{:.2}, {:.2}] dB",
                achieved.1, achieved.0
            )));
        }
    } else {
        let mut found = false;
        for _ in 0..40 {
            lo /= 4.0;
            let (s, _) = eval(lo)?;
            achieved.0 = achieved.0.max(s);
            if s >= target_sndr_db {
                found = true;
                break;
            }
            hi = lo;
        }
        if !found {
            return Err(Error::Generation(format!(
                "could not bracket target {target_sndr_db} dB; achieved range \
                 [{:.2}, {:.2}] dB",
                achieved.1, achieved.0
            )));
        }
    }

    let mut result = None;
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        let (s, gain) = eval(mid)?;
        if (s - target_sndr_db).abs() <= 0.25 {
            result = Some((mid, s, gain));
            break;
        }
        if s >= target_sndr_db {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (scale, sndr, gain) = result.ok_or_else(|| {
        Error::Generation(format!("bisection failed to reach {target_sndr_db} +/- 0.25 dB"))
    })?;
    let mut model = base;
    scale_model(&mut model, scale);
    Ok((model, CalibrationReport { scale, gain, mean_sndr_db: sndr }))
}

fn scale_model(m: &mut DistortionModel, s: f64) {
    match m {
        DistortionModel::Pre(p) => p.scale_nonlinear(s),
        DistortionModel::Post(p) => p.scale_nonlinear(s),
    }
}

fn argmax_abs(taps: &[f64]) -> usize {
    let mut best = 0;
    for (i, &t) in taps.iter().enumerate() {
        if t.abs() > taps[best].abs() {
            best = i;
        }
    }
    best
}
