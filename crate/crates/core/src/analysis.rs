//! Spectral SNR analysis and parameter sweeps.
//!
//! The SNR of an extracted signal is the periodogram energy within a band
//! around the respiration fundamental and its first harmonic, relative to
//! the total energy above 0 Hz. The ratio rho is mapped to dB via
//! `10 log10(rho / (1 - rho))` so that a half-in-band signal sits at 0 dB.

use crate::error::{Error, Result};
use crate::extract::{roi_sample, RoiSpec};
use crate::noise::{corrupt_frame, NoiseSpec};
use crate::scene::{DepthFrame, DepthVideo};
use crate::signals::{RespSignal, SignalKind};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Cap applied when the band captures (numerically) all of the energy.
pub const SNR_CAP_DB: f64 = 60.0;

/// Band ratio and its dB mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrValue {
    pub rho: f64,
    pub db: f64,
}

/// One-sided periodogram (DC excluded) of a mean-removed, Hann-windowed,
/// zero-padded signal.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Power per bin for k = 1 ..= nfft/2.
    pub powers: Vec<f64>,
    /// Frequency step between bins, Hz.
    pub bin_hz: f64,
}

impl Spectrum {
    /// Frequency of bin index `i` (0-based into `powers`).
    pub fn freq(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.bin_hz
    }
}

/// Periodogram with mean removal, a periodic Hann window, and zero padding
/// to the next power of two.
pub fn spectrum(signal: &RespSignal) -> Spectrum {
    let x = signal.samples();
    let n = x.len();
    let nfft = n.next_power_of_two();
    let mean = x.iter().sum::<f64>() / n as f64;

    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for (i, &v) in x.iter().enumerate() {
        let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos());
        buf[i] = Complex64::new((v - mean) * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let powers = (1..=nfft / 2).map(|k| buf[k].norm_sqr()).collect();
    Spectrum {
        powers,
        bin_hz: signal.sample_rate_hz() / nfft as f64,
    }
}

/// Band-energy SNR around `f0_hz` and its first harmonic.
///
/// Returns both the raw band ratio rho and `10 log10(rho / (1 - rho))`,
/// capped at +/-60 dB when the ratio saturates.
pub fn snr(signal: &RespSignal, f0_hz: f64, band_hz: f64) -> Result<SnrValue> {
    let fs = signal.sample_rate_hz();
    if (signal.len() as f64) < 10.0 * fs {
        return Err(Error::parameter(format!(
            "signal too short for SNR: {} samples at {fs} Hz (< 10 s)",
            signal.len()
        )));
    }
    if !(f0_hz > 0.0 && f0_hz < fs / 4.0) {
        return Err(Error::parameter(format!(
            "f0 ({f0_hz} Hz) must lie in (0, rate/4 = {} Hz)",
            fs / 4.0
        )));
    }
    if !(band_hz.is_finite() && band_hz > 0.0) {
        return Err(Error::parameter("band_hz must be positive"));
    }

    let spec = spectrum(signal);
    let mut e_total = 0.0;
    let mut e_band = 0.0;
    for (i, &p) in spec.powers.iter().enumerate() {
        let f = spec.freq(i);
        e_total += p;
        if (f - f0_hz).abs() <= band_hz || (f - 2.0 * f0_hz).abs() <= band_hz {
            e_band += p;
        }
    }
    if e_total <= 0.0 {
        return Err(Error::DegenerateSignal(
            "zero spectral energy after mean removal".into(),
        ));
    }
    let rho = e_band / e_total;
    let db = if 1.0 - rho < 1e-6 {
        SNR_CAP_DB
    } else if rho <= 0.0 {
        -SNR_CAP_DB
    } else {
        10.0 * (rho / (1.0 - rho)).log10()
    };
    Ok(SnrValue { rho, db })
}

/// Fundamental-frequency estimate from a clean reference signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F0Estimate {
    pub f0_hz: f64,
    /// Set when a second near-equal peak at a harmonic ratio was found;
    /// the lower frequency wins the tie.
    pub ambiguous: bool,
}

/// Locate the dominant periodogram peak within `range_hz`, refined by
/// parabolic interpolation over three bins.
pub fn detect_f0(reference: &RespSignal, range_hz: (f64, f64)) -> Result<F0Estimate> {
    let (lo, hi) = range_hz;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::parameter(format!(
            "invalid f0 range ({lo}, {hi})"
        )));
    }
    let spec = spectrum(reference);
    let in_range: Vec<usize> = (0..spec.powers.len())
        .filter(|&i| {
            let f = spec.freq(i);
            f >= lo && f <= hi
        })
        .collect();
    if in_range.is_empty() {
        return Err(Error::parameter(format!(
            "f0 range ({lo}, {hi}) Hz contains no spectral bins at {} Hz resolution",
            spec.bin_hz
        )));
    }
    let max_p = in_range
        .iter()
        .map(|&i| spec.powers[i])
        .fold(0.0, f64::max);
    let mean_p =
        in_range.iter().map(|&i| spec.powers[i]).sum::<f64>() / in_range.len() as f64;
    if max_p <= mean_p {
        return Err(Error::Detection(format!(
            "no peak above the mean energy in ({lo}, {hi}) Hz"
        )));
    }

    // strong candidates: local maxima within 10% of the best
    let is_local_max = |i: usize| -> bool {
        let p = spec.powers[i];
        let left = if i > 0 { spec.powers[i - 1] } else { 0.0 };
        let right = spec.powers.get(i + 1).copied().unwrap_or(0.0);
        p >= left && p >= right
    };
    let candidates: Vec<usize> = in_range
        .iter()
        .copied()
        .filter(|&i| spec.powers[i] >= 0.9 * max_p && is_local_max(i))
        .collect();
    let best = *candidates.first().unwrap_or(
        in_range
            .iter()
            .max_by(|a, b| spec.powers[**a].total_cmp(&spec.powers[**b]))
            .expect("non-empty"),
    );

    let refined = if best > 0 && best + 1 < spec.powers.len() {
        let (pl, pc, pr) = (
            spec.powers[best - 1],
            spec.powers[best],
            spec.powers[best + 1],
        );
        let denom = pl - 2.0 * pc + pr;
        let delta = if denom.abs() > 0.0 {
            (0.5 * (pl - pr) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        (best as f64 + 1.0 + delta) * spec.bin_hz
    } else {
        spec.freq(best)
    };

    let f_best = spec.freq(best);
    let ambiguous = candidates.iter().any(|&c| {
        let f = spec.freq(c);
        let ratio = if f > f_best { f / f_best } else { f_best / f };
        c != best && (1.8..=2.2).contains(&ratio)
    });
    Ok(F0Estimate {
        f0_hz: refined,
        ambiguous,
    })
}

/// Population standard deviation of (noisy - clean) over one frame pair.
pub fn frame_diff_std(noisy: &DepthFrame, clean: &DepthFrame) -> f64 {
    let n = noisy.as_slice().len() as f64;
    let (mut s, mut s2) = (0.0f64, 0.0f64);
    for (a, b) in noisy.as_slice().iter().zip(clean.as_slice()) {
        let d = (*a - *b) as f64;
        s += d;
        s2 += d * d;
    }
    let mean = s / n;
    (s2 / n - mean * mean).max(0.0).sqrt()
}

/// Whole-frame noise standard deviation, averaged over frames.
pub fn measure_noise_std(noisy: &DepthVideo, clean: &DepthVideo) -> Result<f64> {
    if noisy.width() != clean.width()
        || noisy.height() != clean.height()
        || noisy.frame_count() != clean.frame_count()
    {
        return Err(Error::parameter(format!(
            "video geometry mismatch: {}x{}x{} vs {}x{}x{}",
            noisy.width(),
            noisy.height(),
            noisy.frame_count(),
            clean.width(),
            clean.height(),
            clean.frame_count()
        )));
    }
    let total: f64 = noisy
        .frames
        .iter()
        .zip(&clean.frames)
        .map(|(a, b)| frame_diff_std(a, b))
        .sum();
    Ok(total / noisy.frame_count() as f64)
}

/// Theoretical axial depth sensitivity `(m / f_b) * Z^2 * sigma_p`.
///
/// Requires `f_b > 0`. Documentation and validation aid relating the
/// disparity-based sensitivity law to the axial noise model.
pub fn axial_sensitivity(z_m: f64, m: f64, f_b: f64, sigma_p: f64) -> f64 {
    (m / f_b) * z_m * z_m * sigma_p
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

/// Sweep definition: one parameter of one spec in a noise chain, evaluated
/// over scales and seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    /// Template noise chain; the swept parameter is overridden per cell and
    /// every spec's seed is replaced by the cell seed.
    pub chain: Vec<NoiseSpec>,
    /// Index of the spec within `chain` the parameter applies to.
    #[serde(default)]
    pub target_spec: usize,
    pub param_name: String,
    /// Strictly increasing parameter values.
    pub param_values: Vec<f64>,
    pub scales: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.chain.is_empty() {
            return Err(Error::parameter("sweep chain must not be empty"));
        }
        if self.target_spec >= self.chain.len() {
            return Err(Error::parameter(format!(
                "target_spec {} out of range for a {}-spec chain",
                self.target_spec,
                self.chain.len()
            )));
        }
        if self.param_values.is_empty() || self.scales.is_empty() || self.seeds.is_empty() {
            return Err(Error::parameter(
                "param_values, scales and seeds must be non-empty",
            ));
        }
        if self.param_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parameter(
                "param_values must be strictly increasing",
            ));
        }
        if self.scales.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return Err(Error::parameter("scales must lie in (0, 1]"));
        }
        // probe that the parameter applies to the target spec
        self.chain[self.target_spec]
            .clone()
            .set_param(&self.param_name, self.param_values[0])?;
        for spec in &self.chain {
            spec.validate()?;
        }
        Ok(())
    }
}

/// Everything a sweep needs besides the grid itself.
pub struct SweepContext<'a> {
    pub clean: &'a DepthVideo,
    /// Clean reference signal used to fix the respiration rate.
    pub reference: &'a RespSignal,
    /// Base RoI; the cell scale replaces `roi.scale`.
    pub roi: RoiSpec,
    pub band_hz: f64,
    pub f0_range: (f64, f64),
}

/// Metrics of one successful sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub empirical_sigma_m: f64,
    pub rho: f64,
    pub snr_db: f64,
    pub f0_hz: f64,
}

/// One (parameter value, scale, seed) evaluation; successful cells carry
/// the full per-configuration record.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub param_value: f64,
    pub scale: f64,
    pub seed: u64,
    pub metrics: std::result::Result<SnrReport, String>,
}

/// Per (parameter value, scale) aggregate over seeds.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub param_value: f64,
    pub scale: f64,
    pub n_seeds: usize,
    pub empirical_sigma_m: f64,
    pub rho: f64,
    pub snr_db_mean: f64,
    pub snr_db_std: f64,
}

/// Full sweep outcome; `cells` follow grid order (value, then scale, then
/// seed) regardless of execution order.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub model: String,
    pub param_name: String,
    pub cells: Vec<SweepCell>,
    pub summaries: Vec<SweepSummary>,
}

/// Per-configuration record tying a corruption to its measured SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub noise_chain: Vec<NoiseSpec>,
    pub scale: f64,
    pub empirical_sigma_m: f64,
    pub rho: f64,
    pub snr_db: f64,
    pub f0_hz: f64,
    pub band_hz: f64,
    pub seed: u64,
}

/// Corrupt the clean video with `chain`, extract the RoI signal, and return
/// the cell metrics. Frames are processed one at a time, so memory stays at
/// two frames per worker.
pub fn corrupt_and_measure(
    clean: &DepthVideo,
    chain: &[NoiseSpec],
    roi: &RoiSpec,
    f0_hz: f64,
    band_hz: f64,
) -> Result<CellMetrics> {
    roi.validate(clean.width(), clean.height())?;
    for spec in chain {
        spec.validate_for(clean.width(), clean.height())?;
    }
    let mut samples = Vec::with_capacity(clean.frame_count());
    let mut sigma_acc = 0.0;
    for (t, frame) in clean.frames.iter().enumerate() {
        let noisy = corrupt_frame(frame, chain, t as u32);
        sigma_acc += frame_diff_std(&noisy, frame);
        samples.push(roi_sample(&noisy, roi)?);
    }
    let noisy_signal = RespSignal::new(samples, clean.frame_rate_hz, SignalKind::Recorded)?;
    let value = snr(&noisy_signal, f0_hz, band_hz)?;
    Ok(CellMetrics {
        empirical_sigma_m: sigma_acc / clean.frame_count() as f64,
        rho: value.rho,
        snr_db: value.db,
        f0_hz,
    })
}

/// Run a sweep grid: every (value, scale, seed) cell corrupts the clean
/// video, extracts the RoI signal and computes the SNR. A failing cell is
/// recorded in its row; it does not abort the sweep.
pub fn run_sweep(grid: &SweepGrid, ctx: &SweepContext) -> Result<SweepResult> {
    grid.validate()?;
    let f0 = detect_f0(ctx.reference, ctx.f0_range)?.f0_hz;

    let mut plan = Vec::new();
    for &value in &grid.param_values {
        for &scale in &grid.scales {
            for &seed in &grid.seeds {
                plan.push((value, scale, seed));
            }
        }
    }

    let cells: Vec<SweepCell> = plan
        .par_iter()
        .map(|&(value, scale, seed)| {
            let metrics = (|| -> Result<SnrReport> {
                let mut chain = grid.chain.clone();
                chain[grid.target_spec].set_param(&grid.param_name, value)?;
                for spec in chain.iter_mut() {
                    spec.set_seed(seed);
                }
                let roi = ctx.roi.clone().with_scale(scale);
                let m = corrupt_and_measure(ctx.clean, &chain, &roi, f0, ctx.band_hz)?;
                Ok(SnrReport {
                    noise_chain: chain,
                    scale,
                    empirical_sigma_m: m.empirical_sigma_m,
                    rho: m.rho,
                    snr_db: m.snr_db,
                    f0_hz: m.f0_hz,
                    band_hz: ctx.band_hz,
                    seed,
                })
            })()
            .map_err(|e| e.to_string());
            SweepCell {
                param_value: value,
                scale,
                seed,
                metrics,
            }
        })
        .collect();

    let mut summaries = Vec::new();
    for &value in &grid.param_values {
        for &scale in &grid.scales {
            let ok: Vec<&SnrReport> = cells
                .iter()
                .filter(|c| c.param_value == value && c.scale == scale)
                .filter_map(|c| c.metrics.as_ref().ok())
                .collect();
            if ok.is_empty() {
                continue;
            }
            let n = ok.len() as f64;
            let mean_snr = ok.iter().map(|m| m.snr_db).sum::<f64>() / n;
            let var_snr =
                ok.iter().map(|m| (m.snr_db - mean_snr).powi(2)).sum::<f64>() / n;
            summaries.push(SweepSummary {
                param_value: value,
                scale,
                n_seeds: ok.len(),
                empirical_sigma_m: ok.iter().map(|m| m.empirical_sigma_m).sum::<f64>() / n,
                rho: ok.iter().map(|m| m.rho).sum::<f64>() / n,
                snr_db_mean: mean_snr,
                snr_db_std: var_snr.sqrt(),
            });
        }
    }

    Ok(SweepResult {
        model: grid.chain[grid.target_spec].model_name().to_string(),
        param_name: grid.param_name.clone(),
        cells,
        summaries,
    })
}
