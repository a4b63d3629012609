//! Respiratory waveform generation and conditioning.
//!
//! A [`RespSignal`] is a uniformly sampled waveform that drives the chest
//! displacement of the rendered torso. Signals are either synthesized
//! (quasi-periodic breath cycles) or ingested from a single-column CSV, then
//! conditioned: linear resampling to the video frame rate, zero-phase
//! Butterworth low-pass for recorded traces, affine normalization to [0, 1].

use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Internal sample rate of the synthetic generator, in Hz.
pub const SYNTHESIS_RATE_HZ: f64 = 100.0;

/// Exhale decay constant: depth of the exponential within one exhale.
/// Kept moderate so the inhale/exhale junction stays gentle and the
/// waveform's energy concentrates in the fundamental and first harmonic.
const EXHALE_DECAY: f64 = 2.5;

/// Origin of a respiratory signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Synthetic,
    Recorded,
}

/// Uniformly sampled respiratory waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct RespSignal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    kind: SignalKind,
}

impl RespSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, kind: SignalKind) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::parameter(format!(
                "sample_rate_hz must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::parameter("signal must contain at least one sample"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::parameter(format!(
                "sample {i} is not finite ({})",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            kind,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time span from the first to the last sample, in seconds.
    pub fn duration_s(&self) -> f64 {
        (self.samples.len() - 1) as f64 / self.sample_rate_hz
    }
}

/// Parameters of the synthetic breath-cycle generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisParams {
    /// Mean respiration frequency in Hz.
    pub rate_hz: f64,
    /// Fractional cycle-to-cycle period variation (std of the multiplier).
    pub rate_jitter: f64,
    /// Fractional cycle-to-cycle amplitude variation (std of the multiplier).
    pub amp_jitter: f64,
    /// Fraction of each cycle spent inhaling, in (0, 1).
    pub inhale_fraction: f64,
    /// Signal duration in seconds.
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self {
            rate_hz: 0.25,
            rate_jitter: 0.0,
            amp_jitter: 0.0,
            inhale_fraction: 0.4,
            duration_s: 30.0,
            seed: 0,
        }
    }
}

impl SynthesisParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(Error::parameter(format!(
                "rate_hz must be positive, got {}",
                self.rate_hz
            )));
        }
        if self.rate_jitter < 0.0 || self.amp_jitter < 0.0 {
            return Err(Error::parameter("jitters must be >= 0"));
        }
        if !(self.inhale_fraction > 0.0 && self.inhale_fraction < 1.0) {
            return Err(Error::parameter(format!(
                "inhale_fraction must lie in (0, 1), got {}",
                self.inhale_fraction
            )));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::parameter(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            )));
        }
        Ok(())
    }
}

/// One breath cycle: raised-cosine inhale over `inhale_fraction` of the
/// period, then an exponential decay rescaled to end exactly at zero.
fn cycle_shape(u: f64, inhale_fraction: f64) -> f64 {
    if u < inhale_fraction {
        0.5 * (1.0 - (std::f64::consts::PI * u / inhale_fraction).cos())
    } else {
        let s = (u - inhale_fraction) / (1.0 - inhale_fraction);
        let k = EXHALE_DECAY;
        ((-k * s).exp() - (-k).exp()) / (1.0 - (-k).exp())
    }
}

/// Draw from N(1, sigma) truncated to 1 +/- 3 sigma.
fn truncated_multiplier(rng: &mut impl Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let dist = Normal::new(1.0, sigma).expect("sigma validated");
    loop {
        let v = dist.sample(rng);
        if (v - 1.0).abs() <= 3.0 * sigma && v > 0.05 {
            return v;
        }
    }
}

/// Generate a quasi-periodic synthetic respiratory waveform at 100 Hz.
///
/// Deterministic for a fixed seed; per-cycle period and amplitude
/// multipliers are drawn from truncated normal distributions.
pub fn synthesize(params: &SynthesisParams) -> Result<RespSignal> {
    params.validate()?;
    let n = (params.duration_s * SYNTHESIS_RATE_HZ).ceil() as usize;
    let mut rng = rng::seed_stream(params.seed);
    let base_period = 1.0 / params.rate_hz;

    let mut cycle_start = 0.0;
    let mut cycle_len = base_period * truncated_multiplier(&mut rng, params.rate_jitter);
    let mut amp = truncated_multiplier(&mut rng, params.amp_jitter);

    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / SYNTHESIS_RATE_HZ;
        while t >= cycle_start + cycle_len {
            cycle_start += cycle_len;
            cycle_len = base_period * truncated_multiplier(&mut rng, params.rate_jitter);
            amp = truncated_multiplier(&mut rng, params.amp_jitter);
        }
        let u = (t - cycle_start) / cycle_len;
        samples.push(amp * cycle_shape(u, params.inhale_fraction));
    }
    RespSignal::new(samples, SYNTHESIS_RATE_HZ, SignalKind::Synthetic)
}

/// Load a single-column CSV waveform. A non-numeric first line is treated
/// as a header; non-finite records are rejected with their line number.
pub fn load_waveform(path: impl AsRef<Path>, sample_rate_hz: f64) -> Result<RespSignal> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Ingestion(format!("cannot read {}: {e}", path.display()))
    })?;

    let mut samples = Vec::new();
    let mut first_data_line = true;
    for (idx, line) in text.lines().enumerate() {
        let record = idx + 1;
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                samples.push(v);
                first_data_line = false;
            }
            Ok(v) => {
                return Err(Error::Ingestion(format!(
                    "record {record} of {} is not finite ({v})",
                    path.display()
                )));
            }
            Err(_) if first_data_line => {
                // header line
                first_data_line = false;
            }
            Err(_) => {
                return Err(Error::Ingestion(format!(
                    "record {record} of {} is not numeric ({token:?})",
                    path.display()
                )));
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::Ingestion(format!(
            "{} contains no numeric records",
            path.display()
        )));
    }
    RespSignal::new(samples, sample_rate_hz, SignalKind::Recorded)
}

/// Linear resampling to `target_rate_hz`.
///
/// The output covers the input's time span; samples that land exactly on an
/// input time stamp are copied through unchanged.
pub fn resample_linear(signal: &RespSignal, target_rate_hz: f64) -> Result<RespSignal> {
    if !(target_rate_hz.is_finite() && target_rate_hz > 0.0) {
        return Err(Error::parameter(format!(
            "target_rate_hz must be positive, got {target_rate_hz}"
        )));
    }
    let x = signal.samples();
    let n = x.len();
    if n == 1 {
        return RespSignal::new(x.to_vec(), target_rate_hz, signal.kind());
    }
    let duration = (n - 1) as f64 / signal.sample_rate_hz();
    // epsilon guards against duration*rate rounding just below an integer
    let m = (duration * target_rate_hz + 1e-9).floor() as usize + 1;
    let step = signal.sample_rate_hz() / target_rate_hz;

    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let pos = j as f64 * step;
        let i0 = pos.floor() as usize;
        if i0 >= n - 1 {
            // lands on (or epsilon past) the final sample: copy it exactly
            out.push(x[n - 1]);
        } else {
            let frac = pos - i0 as f64;
            out.push(x[i0] + frac * (x[i0 + 1] - x[i0]));
        }
    }
    RespSignal::new(out, target_rate_hz, signal.kind())
}

/// Second-order section in direct form II transposed.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    /// Filter in place, starting from the steady state for a constant input
    /// equal to the first sample (suppresses the start-up transient).
    fn filter_in_place(&self, x: &mut [f64]) {
        if x.is_empty() {
            return;
        }
        let c = x[0];
        let mut z1 = (self.b1 + self.b2 - self.a1 - self.a2) * c;
        let mut z2 = (self.b2 - self.a2) * c;
        for v in x.iter_mut() {
            let xi = *v;
            let y = self.b0 * xi + z1;
            z1 = self.b1 * xi - self.a1 * y + z2;
            z2 = self.b2 * xi - self.a2 * y;
            *v = y;
        }
    }

    /// Magnitude response at normalized frequency `w` (radians/sample).
    #[cfg(test)]
    fn magnitude(&self, w: f64) -> f64 {
        use rustfft::num_complex::Complex64;
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = Complex64::new(self.b0, 0.0) + z1 * self.b1 + z2 * self.b2;
        let den = Complex64::new(1.0, 0.0) + z1 * self.a1 + z2 * self.a2;
        (num / den).norm()
    }
}

/// Design a 4th-order Butterworth low-pass as two cascaded biquads via the
/// bilinear transform with frequency prewarping.
fn butter4_sections(cutoff_hz: f64, sample_rate_hz: f64) -> [Biquad; 2] {
    let k = (std::f64::consts::PI * cutoff_hz / sample_rate_hz).tan();
    let k2 = k * k;
    // pole-pair damping ratios of the 4th-order Butterworth prototype
    let zetas = [
        (std::f64::consts::PI / 8.0).sin(),
        (3.0 * std::f64::consts::PI / 8.0).sin(),
    ];
    zetas.map(|zeta| {
        let norm = 1.0 / (1.0 + 2.0 * zeta * k + k2);
        Biquad {
            b0: k2 * norm,
            b1: 2.0 * k2 * norm,
            b2: k2 * norm,
            a1: 2.0 * (k2 - 1.0) * norm,
            a2: (1.0 - 2.0 * zeta * k + k2) * norm,
        }
    })
}

/// Zero-phase 4th-order Butterworth low-pass (forward-backward pass with
/// odd-reflection padding of three filter lengths).
pub fn lowpass_butter4(signal: &RespSignal, cutoff_hz: f64) -> Result<RespSignal> {
    let fs = signal.sample_rate_hz();
    if !(cutoff_hz.is_finite() && cutoff_hz > 0.0) || cutoff_hz >= fs / 2.0 {
        return Err(Error::parameter(format!(
            "cutoff ({cutoff_hz} Hz) must lie in (0, Nyquist = {} Hz)",
            fs / 2.0
        )));
    }
    let sections = butter4_sections(cutoff_hz, fs);
    let x = signal.samples();
    let n = x.len();
    let pad = 15.min(n.saturating_sub(1)); // 3 * (order + 1) taps

    // odd reflection about the end points
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    for section in &sections {
        section.filter_in_place(&mut ext);
    }
    ext.reverse();
    for section in &sections {
        section.filter_in_place(&mut ext);
    }
    ext.reverse();

    let out = ext[pad..pad + n].to_vec();
    RespSignal::new(out, fs, signal.kind())
}

/// Affine rescale to [0, 1]. Constant signals are rejected.
pub fn normalize(signal: &RespSignal) -> Result<RespSignal> {
    let x = signal.samples();
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Err(Error::DegenerateSignal(
            "cannot normalize a constant signal".into(),
        ));
    }
    let span = max - min;
    let out = x.iter().map(|v| (v - min) / span).collect();
    RespSignal::new(out, signal.sample_rate_hz(), signal.kind())
}
