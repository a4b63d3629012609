//! Experiment configuration and the render / corrupt / extract / analyze /
//! sweep commands behind the CLI.

use crate::analysis::{self, SweepGrid};
use crate::error::{Error, Result};
use crate::extract::{self, RoiSpec};
use crate::io::{self, VideoMeta};
use crate::noise::{self, NoiseSpec};
use crate::plot;
use crate::scene::{self, TorsoScene};
use crate::signals::{self, RespSignal};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Driving-signal source: synthesized or loaded from a single-column CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSource {
    Synthetic(signals::SynthesisParams),
    File { path: String, sample_rate_hz: f64 },
}

impl Default for SignalSource {
    fn default() -> Self {
        SignalSource::Synthetic(signals::SynthesisParams::default())
    }
}

/// How the RoI is placed when not given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RoiPlacement {
    /// Paper-sized 280x206 window centered on the chest-apex projection.
    #[default]
    Paper,
    /// Largest rectangle inside the torso projection minus a margin.
    ChestCore,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoiConfig {
    pub placement: RoiPlacement,
    pub x0: Option<usize>,
    pub y0: Option<usize>,
    pub width_px: Option<usize>,
    pub height_px: Option<usize>,
    pub scale: f64,
    /// Silhouette clearance for `chest_core` placement, full-res pixels.
    pub margin_px: usize,
}

impl Default for RoiConfig {
    fn default() -> Self {
        Self {
            placement: RoiPlacement::Paper,
            x0: None,
            y0: None,
            width_px: None,
            height_px: None,
            scale: 1.0,
            margin_px: 10,
        }
    }
}

impl RoiConfig {
    pub fn resolve(&self, scene: &TorsoScene) -> Result<RoiSpec> {
        let explicit = [
            self.x0.is_some(),
            self.y0.is_some(),
            self.width_px.is_some(),
            self.height_px.is_some(),
        ];
        let roi = if explicit.iter().all(|b| *b) {
            RoiSpec {
                x0: self.x0.unwrap(),
                y0: self.y0.unwrap(),
                width_px: self.width_px.unwrap(),
                height_px: self.height_px.unwrap(),
                scale: 1.0,
            }
        } else if explicit.iter().any(|b| *b) {
            return Err(Error::parameter(
                "roi: give all of x0, y0, width_px, height_px or none",
            ));
        } else {
            match self.placement {
                RoiPlacement::Paper => RoiSpec::paper(scene)?,
                RoiPlacement::ChestCore => RoiSpec::chest_core(scene, self.margin_px)?,
            }
        };
        Ok(roi.with_scale(self.scale))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub band_hz: f64,
    pub f0_range: [f64; 2],
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            band_hz: 0.1,
            f0_range: [0.1, 0.5],
        }
    }
}

/// Top-level experiment configuration (strict JSON: unknown keys rejected).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scene: TorsoScene,
    pub signal: SignalSource,
    /// Noise chain applied by `corrupt`-style commands; may be empty.
    pub noise: Vec<NoiseSpec>,
    pub roi: RoiConfig,
    pub analysis: AnalysisConfig,
    pub frame_rate_hz: f64,
    /// Base seed: noise specs whose own seed is unset (0) inherit it.
    pub seed: u64,
    /// Force the 1 Hz low-pass onto synthetic signals too.
    pub filter_synthetic: bool,
    pub out_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scene: TorsoScene::default(),
            signal: SignalSource::default(),
            noise: Vec::new(),
            roi: RoiConfig::default(),
            analysis: AnalysisConfig::default(),
            frame_rate_hz: 30.0,
            seed: 0,
            filter_synthetic: false,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::parameter(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::parameter(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        if !(self.frame_rate_hz.is_finite() && self.frame_rate_hz > 0.0) {
            return Err(Error::parameter("frame_rate_hz must be positive"));
        }
        if let SignalSource::File {
            path,
            sample_rate_hz,
        } = &self.signal
        {
            if !(sample_rate_hz.is_finite() && *sample_rate_hz > 0.0) {
                return Err(Error::parameter("signal.file.sample_rate_hz must be positive"));
            }
            if !Path::new(path).exists() {
                return Err(Error::parameter(format!(
                    "signal.file.path {path:?} does not exist"
                )));
            }
        }
        if let SignalSource::Synthetic(p) = &self.signal {
            p.validate()?;
        }
        for spec in &self.noise {
            spec.validate()?;
        }
        if !(self.analysis.band_hz.is_finite() && self.analysis.band_hz > 0.0) {
            return Err(Error::parameter("analysis.band_hz must be positive"));
        }
        let [lo, hi] = self.analysis.f0_range;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::parameter(format!(
                "analysis.f0_range ({lo}, {hi}) is invalid"
            )));
        }
        Ok(())
    }

    /// Noise chain with unset spec seeds replaced by the base seed.
    pub fn effective_chain(&self) -> Vec<NoiseSpec> {
        apply_base_seed(&self.noise, self.seed)
    }

    fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        io::provenance_hash(self.canonical_json().as_bytes())
    }
}

/// Replace the seed of every spec that left it unset (0) with `base`.
pub fn apply_base_seed(chain: &[NoiseSpec], base: u64) -> Vec<NoiseSpec> {
    chain
        .iter()
        .cloned()
        .map(|mut spec| {
            if spec.seed() == 0 {
                spec.set_seed(base);
            }
            spec
        })
        .collect()
}

/// Build the conditioned driving signal at the video frame rate: recorded
/// traces are low-pass filtered at 1 Hz, everything is linearly resampled
/// and normalized to [0, 1].
pub fn prepare_driver(cfg: &ExperimentConfig) -> Result<RespSignal> {
    let raw = match &cfg.signal {
        SignalSource::Synthetic(params) => {
            let s = signals::synthesize(params)?;
            if cfg.filter_synthetic {
                signals::lowpass_butter4(&s, 1.0)?
            } else {
                s
            }
        }
        SignalSource::File {
            path,
            sample_rate_hz,
        } => {
            let s = signals::load_waveform(path, *sample_rate_hz)?;
            signals::lowpass_butter4(&s, 1.0)?
        }
    };
    let resampled = signals::resample_linear(&raw, cfg.frame_rate_hz)?;
    signals::normalize(&resampled)
}

pub struct RenderOutcome {
    pub dir: PathBuf,
    pub frames: usize,
    pub duration_s: f64,
    pub width: usize,
    pub height: usize,
}

/// Render the clean depth video described by the config.
pub fn cmd_render(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RenderOutcome> {
    let driver = prepare_driver(cfg)?;
    let video = scene::animate(&cfg.scene, &driver)?;
    let mut meta = VideoMeta::for_video(&video, cfg.scene.sentinel_depth_m());
    meta.scene = Some(cfg.scene.clone());
    meta.seed = Some(cfg.seed);
    meta.config = Some(
        serde_json::to_value(cfg).map_err(|e| Error::data(format!("config: {e}")))?,
    );
    meta.config_hash = Some(cfg.hash());
    io::write_video(out_dir, &video, &meta)?;
    io::write_signal_csv(&out_dir.join("driver.csv"), &driver)?;
    Ok(RenderOutcome {
        dir: out_dir.to_path_buf(),
        frames: video.frame_count(),
        duration_s: video.frame_count() as f64 / video.frame_rate_hz,
        width: video.width(),
        height: video.height(),
    })
}

/// Apply a noise-chain file to a stored video, writing a sibling directory
/// with the chain embedded in its meta.json.
pub fn cmd_corrupt(
    video_dir: &Path,
    chain_path: &Path,
    seed_override: Option<u64>,
    out_dir: &Path,
) -> Result<usize> {
    let (video, mut meta) = io::read_video(video_dir)?;
    let text = std::fs::read_to_string(chain_path).map_err(|e| {
        Error::parameter(format!("cannot read chain {}: {e}", chain_path.display()))
    })?;
    let mut chain: Vec<NoiseSpec> = serde_json::from_str(&text)
        .map_err(|e| Error::parameter(format!("chain {}: {e}", chain_path.display())))?;
    if let Some(seed) = seed_override {
        for spec in chain.iter_mut() {
            spec.set_seed(seed);
        }
    }
    let noisy = noise::apply_chain(&video, &chain)?;
    meta.noise_chain = Some(chain);
    meta.source_video = Some(video_dir.display().to_string());
    if let Some(seed) = seed_override {
        meta.seed = Some(seed);
    }
    io::write_video(out_dir, &noisy, &meta)?;
    Ok(noisy.frame_count())
}

/// RoI flags for extraction; unset fields fall back to the stored scene.
#[derive(Debug, Clone, Default)]
pub struct ExtractArgs {
    pub x0: Option<usize>,
    pub y0: Option<usize>,
    pub width_px: Option<usize>,
    pub height_px: Option<usize>,
    pub scale: Option<f64>,
    pub chest_core: bool,
}

/// Provenance sidecar written next to extracted-signal CSVs.
#[derive(Debug, Serialize, Deserialize)]
pub struct ExtractMeta {
    pub source_video: String,
    pub roi: RoiSpec,
    pub frame_rate_hz: f64,
    pub rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_chain: Option<Vec<NoiseSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Extract the RoI signal from a stored video into a two-column CSV.
pub fn cmd_extract(video_dir: &Path, args: &ExtractArgs, out_csv: &Path) -> Result<usize> {
    let (video, meta) = io::read_video(video_dir)?;
    let roi_cfg = RoiConfig {
        placement: if args.chest_core {
            RoiPlacement::ChestCore
        } else {
            RoiPlacement::Paper
        },
        x0: args.x0,
        y0: args.y0,
        width_px: args.width_px,
        height_px: args.height_px,
        scale: args.scale.unwrap_or(1.0),
        ..Default::default()
    };
    let roi = match &meta.scene {
        Some(scene) => roi_cfg.resolve(scene)?,
        None => {
            if args.x0.is_none() {
                return Err(Error::parameter(
                    "video has no stored scene; give --x0/--y0/--width/--height explicitly",
                ));
            }
            RoiSpec {
                x0: args.x0.unwrap(),
                y0: args.y0.ok_or_else(|| Error::parameter("missing --y0"))?,
                width_px: args
                    .width_px
                    .ok_or_else(|| Error::parameter("missing --width"))?,
                height_px: args
                    .height_px
                    .ok_or_else(|| Error::parameter("missing --height"))?,
                scale: args.scale.unwrap_or(1.0),
            }
        }
    };
    let signal = extract::extract_signal(&video, &roi)?;
    io::write_signal_csv(out_csv, &signal)?;
    let sidecar = ExtractMeta {
        source_video: video_dir.display().to_string(),
        roi,
        frame_rate_hz: video.frame_rate_hz,
        rows: signal.len(),
        noise_chain: meta.noise_chain.clone(),
        seed: meta.seed,
        config_hash: meta.config_hash.clone(),
    };
    io::write_json(&out_csv.with_extension("meta.json"), &sidecar)?;
    Ok(signal.len())
}

/// JSON report produced by `analyze`: the SNR record plus whatever
/// provenance the signal sidecars carried.
#[derive(Debug, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub rho: f64,
    pub snr_db: f64,
    pub f0_hz: f64,
    pub band_hz: f64,
    pub harmonic_ambiguity: bool,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_chain: Option<Vec<NoiseSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Compute the SNR of an extracted signal against a clean reference.
pub fn cmd_analyze(
    noisy_csv: &Path,
    reference_csv: &Path,
    band_hz: f64,
    f0_range: (f64, f64),
) -> Result<AnalyzeReport> {
    let noisy = io::read_signal_csv(noisy_csv)?;
    let reference = io::read_signal_csv(reference_csv)?;
    if noisy.len() != reference.len() {
        return Err(Error::parameter(format!(
            "signal lengths differ: {} vs {} samples",
            noisy.len(),
            reference.len()
        )));
    }
    let est = analysis::detect_f0(&reference, f0_range)?;
    let value = analysis::snr(&noisy, est.f0_hz, band_hz)?;

    // pick up provenance from the extract sidecar when present
    let sidecar: Option<ExtractMeta> = std::fs::read_to_string(
        noisy_csv.with_extension("meta.json"),
    )
    .ok()
    .and_then(|text| serde_json::from_str(&text).ok());
    Ok(AnalyzeReport {
        rho: value.rho,
        snr_db: value.db,
        f0_hz: est.f0_hz,
        band_hz,
        harmonic_ambiguity: est.ambiguous,
        n_samples: noisy.len(),
        noise_chain: sidecar.as_ref().and_then(|s| s.noise_chain.clone()),
        scale: sidecar.as_ref().map(|s| s.roi.scale),
        seed: sidecar.as_ref().and_then(|s| s.seed),
    })
}

pub struct SweepOutcome {
    pub rows: usize,
    pub summary_rows: usize,
    pub failed_cells: Vec<String>,
}

/// Render the clean video once, then run the sweep grid and write
/// sweep.csv, summary.csv and sweep.svg plus a provenance file.
pub fn cmd_sweep(cfg: &ExperimentConfig, grid_path: &Path, out_dir: &Path) -> Result<SweepOutcome> {
    let text = std::fs::read_to_string(grid_path).map_err(|e| {
        Error::parameter(format!("cannot read grid {}: {e}", grid_path.display()))
    })?;
    let mut grid: SweepGrid = serde_json::from_str(&text)
        .map_err(|e| Error::parameter(format!("grid {}: {e}", grid_path.display())))?;
    grid.chain = apply_base_seed(&grid.chain, cfg.seed);
    grid.validate()?;

    let driver = prepare_driver(cfg)?;
    let clean = scene::animate(&cfg.scene, &driver)?;
    let base_roi = cfg.roi.resolve(&cfg.scene)?;
    let reference = extract::extract_signal(&clean, &base_roi.clone().with_scale(1.0))?;

    let ctx = analysis::SweepContext {
        clean: &clean,
        reference: &reference,
        roi: base_roi,
        band_hz: cfg.analysis.band_hz,
        f0_range: (cfg.analysis.f0_range[0], cfg.analysis.f0_range[1]),
    };
    let result = analysis::run_sweep(&grid, &ctx)?;

    std::fs::create_dir_all(out_dir)?;
    io::write_sweep_csv(&out_dir.join("sweep.csv"), &result)?;
    io::write_summary_csv(&out_dir.join("summary.csv"), &result)?;
    std::fs::write(out_dir.join("sweep.svg"), plot::sweep_svg(&result))?;

    #[derive(Serialize)]
    struct SweepMeta<'a> {
        schema_version: u32,
        grid: &'a SweepGrid,
        config: &'a ExperimentConfig,
        config_hash: String,
    }
    io::write_json(
        &out_dir.join("sweep_meta.json"),
        &SweepMeta {
            schema_version: io::SCHEMA_VERSION,
            grid: &grid,
            config: cfg,
            config_hash: cfg.hash(),
        },
    )?;

    let failed: Vec<String> = result
        .cells
        .iter()
        .filter_map(|c| {
            c.metrics.as_ref().err().map(|e| {
                format!(
                    "cell (value {}, scale {}, seed {}): {e}",
                    c.param_value, c.scale, c.seed
                )
            })
        })
        .collect();
    Ok(SweepOutcome {
        rows: result.cells.len(),
        summary_rows: result.summaries.len(),
        failed_cells: failed,
    })
}
