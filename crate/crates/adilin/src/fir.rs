//! FIR filtering and multirate helpers shared by the distortion models and
//! linearizers.
//!
//! All filters are real-coefficient direct-form FIRs. `filter` is the causal
//! convention used throughout: `y(n) = sum_k h(k) x(n-k)` with zero-padding
//! for `n-k < 0`, output length equal to the input length.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Causal FIR filtering with zero initial state; output has the input length.
pub fn filter(x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for (k, &hk) in h.iter().enumerate() {
        if hk == 0.0 {
            continue;
        }
        for n in k..x.len() {
            y[n] += hk * x[n - k];
        }
    }
    y
}

/// Full linear convolution, length `x.len() + h.len() - 1`.
pub fn conv_full(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut y = vec![0.0; x.len() + h.len() - 1];
    for (k, &hk) in h.iter().enumerate() {
        if hk == 0.0 {
            continue;
        }
        for (n, &xn) in x.iter().enumerate() {
            y[n + k] += hk * xn;
        }
    }
    y
}

/// Zero-insertion upsampling by `p`.
pub fn upsample(x: &[f64], p: usize) -> Vec<f64> {
    let mut y = vec![0.0; x.len() * p];
    for (n, &xn) in x.iter().enumerate() {
        y[n * p] = xn;
    }
    y
}

/// Keep every `p`-th sample starting at `phase`.
pub fn downsample(x: &[f64], p: usize, phase: usize) -> Vec<f64> {
    x.iter().skip(phase).step_by(p).copied().collect()
}

/// Shift left by `k` samples, zero-padding the tail (length preserved).
pub fn advance(x: &[f64], k: usize) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    if k < x.len() {
        y[..x.len() - k].copy_from_slice(&x[k..]);
    }
    y
}

/// Shift right by `k` samples, zero-padding the head (length preserved).
pub fn delay(x: &[f64], k: usize) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    if k < x.len() {
        y[k..].copy_from_slice(&x[..x.len() - k]);
    }
    y
}

/// Group delay (in samples) of a linear-phase FIR of even order.
pub fn group_delay(h: &[f64]) -> usize {
    (h.len() - 1) / 2
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Linear-phase bandpass FIR via a Hann-windowed sinc. Band edges `low`
/// and `high` are fractions of pi (0..=1). `low = 0` degenerates to a
/// windowed lowpass, `(0, 1)` to a windowed allpass.
pub fn hann_bandpass(order: usize, low: f64, high: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low >= high {
        return Err(Error::Config(format!(
            "bandpass edges must satisfy 0 <= low < high <= 1, got ({low}, {high})"
        )));
    }
    if order % 2 != 0 {
        return Err(Error::Config("bandpass order must be even".into()));
    }
    let c = order as f64 / 2.0;
    let h = (0..=order)
        .map(|n| {
            let t = n as f64 - c;
            let ideal = high * sinc(high * t) - low * sinc(low * t);
            let w = 0.5 * (1.0 - (2.0 * PI * n as f64 / order as f64).cos());
            ideal * w
        })
        .collect();
    Ok(h)
}

/// Zeroth-order modified Bessel function of the first kind (series).
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..50 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Kaiser window of the given order (length `order + 1`).
pub fn kaiser(order: usize, beta: f64) -> Vec<f64> {
    let denom = bessel_i0(beta);
    let c = order as f64 / 2.0;
    (0..=order)
        .map(|n| {
            let t = (n as f64 - c) / c;
            bessel_i0(beta * (1.0 - t * t).max(0.0).sqrt()) / denom
        })
        .collect()
}
