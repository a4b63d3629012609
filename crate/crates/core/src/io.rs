//! On-disk formats.
//!
//! A depth video is a directory with a `meta.json` plus one raw file per
//! frame (`f0000.depth`, ...) of little-endian IEEE-754 f32 depths in
//! row-major order; round-trips are bit-exact. Signals and sweep results
//! are CSV with 9 significant digits.

use crate::analysis::{SweepCell, SweepResult};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::scene::{DepthFrame, DepthVideo, TorsoScene};
use crate::signals::{RespSignal, SignalKind};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Provenance and geometry of a stored depth video.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoMeta {
    pub schema_version: u32,
    pub width: usize,
    pub height: usize,
    pub frame_rate_hz: f64,
    pub frame_count: usize,
    pub sentinel_depth_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<TorsoScene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_chain: Option<Vec<NoiseSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_video: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl VideoMeta {
    pub fn for_video(video: &DepthVideo, sentinel_depth_m: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            width: video.width(),
            height: video.height(),
            frame_rate_hz: video.frame_rate_hz,
            frame_count: video.frame_count(),
            sentinel_depth_m,
            scene: None,
            seed: None,
            noise_chain: None,
            source_video: None,
            config: None,
            config_hash: None,
        }
    }
}

/// FNV-1a hash of a canonical byte string, hex encoded. Used to stamp
/// outputs with the configuration that produced them.
pub fn provenance_hash(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

fn frame_path(dir: &Path, index: usize) -> std::path::PathBuf {
    dir.join(format!("f{index:04}.depth"))
}

/// Write a depth video directory (meta.json + per-frame raw files).
pub fn write_video(dir: &Path, video: &DepthVideo, meta: &VideoMeta) -> Result<()> {
    if meta.width != video.width()
        || meta.height != video.height()
        || meta.frame_count != video.frame_count()
    {
        return Err(Error::data("meta does not describe this video"));
    }
    std::fs::create_dir_all(dir)?;
    let meta_json = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::data(format!("meta serialization: {e}")))?;
    std::fs::write(dir.join("meta.json"), meta_json)?;
    let mut buf = Vec::with_capacity(video.width() * video.height() * 4);
    for (i, frame) in video.frames.iter().enumerate() {
        buf.clear();
        for v in frame.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(frame_path(dir, i), &buf)?;
    }
    Ok(())
}

/// Read a depth video directory back, bit-exactly.
pub fn read_video(dir: &Path) -> Result<(DepthVideo, VideoMeta)> {
    let meta_path = dir.join("meta.json");
    let meta_text = std::fs::read_to_string(&meta_path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", meta_path.display())))?;
    let meta: VideoMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::data(format!("malformed {}: {e}", meta_path.display())))?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(Error::data(format!(
            "unsupported schema version {} (expected {SCHEMA_VERSION})",
            meta.schema_version
        )));
    }
    let mut frames = Vec::with_capacity(meta.frame_count);
    for i in 0..meta.frame_count {
        let path = frame_path(dir, i);
        let bytes = std::fs::read(&path)
            .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
        if bytes.len() != meta.width * meta.height * 4 {
            return Err(Error::data(format!(
                "{}: {} bytes, expected {}",
                path.display(),
                bytes.len(),
                meta.width * meta.height * 4
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        frames.push(DepthFrame::from_data(meta.width, meta.height, data)?);
    }
    let video = DepthVideo::new(frames, meta.frame_rate_hz)?;
    Ok((video, meta))
}

/// Format with exactly 9 significant digits, stable across runs.
pub fn fmt_sig9(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.8e}")
    }
}

/// Write an extracted signal as a two-column CSV (time_s, value_m).
pub fn write_signal_csv(path: &Path, signal: &RespSignal) -> Result<()> {
    let mut out = String::from("time_s,value_m\n");
    for (i, v) in signal.samples().iter().enumerate() {
        let t = i as f64 / signal.sample_rate_hz();
        out.push_str(&fmt_sig9(t));
        out.push(',');
        out.push_str(&fmt_sig9(*v));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a two-column (time_s, value_m) CSV; the sample rate is inferred
/// from the first two time stamps.
pub fn read_signal_csv(path: &Path) -> Result<RespSignal> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Ingestion(format!("cannot read {}: {e}", path.display())))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let record = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            return Err(Error::Ingestion(format!(
                "record {record} of {}: expected two columns",
                path.display()
            )));
        };
        if record == 1 && a.trim().parse::<f64>().is_err() {
            continue; // header
        }
        let t: f64 = a.trim().parse().map_err(|_| {
            Error::Ingestion(format!(
                "record {record} of {}: bad time {a:?}",
                path.display()
            ))
        })?;
        let v: f64 = b.trim().parse().map_err(|_| {
            Error::Ingestion(format!(
                "record {record} of {}: bad value {b:?}",
                path.display()
            ))
        })?;
        if !t.is_finite() || !v.is_finite() {
            return Err(Error::Ingestion(format!(
                "record {record} of {}: non-finite entry",
                path.display()
            )));
        }
        times.push(t);
        values.push(v);
    }
    if values.len() < 2 {
        return Err(Error::Ingestion(format!(
            "{}: need at least two records",
            path.display()
        )));
    }
    let dt = times[1] - times[0];
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Ingestion(format!(
            "{}: time stamps must increase",
            path.display()
        )));
    }
    RespSignal::new(values, 1.0 / dt, SignalKind::Recorded)
}

pub const SWEEP_CSV_HEADER: &str =
    "model,param_name,param_value,scale,seed,empirical_sigma_m,rho,snr_db,f0_hz";
pub const SUMMARY_CSV_HEADER: &str =
    "model,param_name,param_value,scale,n_seeds,empirical_sigma_m,rho,snr_db_mean,snr_db_std";

fn cell_fields(cell: &SweepCell) -> (f64, f64, f64, f64) {
    match &cell.metrics {
        Ok(m) => (m.empirical_sigma_m, m.rho, m.snr_db, m.f0_hz),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    }
}

/// Write per-cell sweep rows; failed cells carry `nan` metric fields.
pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for cell in &result.cells {
        let (sigma, rho, snr, f0) = cell_fields(cell);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            result.model,
            result.param_name,
            fmt_sig9(cell.param_value),
            fmt_sig9(cell.scale),
            cell.seed,
            fmt_sig9(sigma),
            fmt_sig9(rho),
            fmt_sig9(snr),
            fmt_sig9(f0),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write seed-aggregated summary rows.
pub fn write_summary_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for s in &result.summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            result.model,
            result.param_name,
            fmt_sig9(s.param_value),
            fmt_sig9(s.scale),
            s.n_seeds,
            fmt_sig9(s.empirical_sigma_m),
            fmt_sig9(s.rho),
            fmt_sig9(s.snr_db_mean),
            fmt_sig9(s.snr_db_std),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write a small JSON file next to a primary output.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::data(format!("serialization: {e}")))?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::DepthFrame;

    #[test]
    fn video_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut frame = DepthFrame::new(8, 8, 3.0);
        for (i, v) in frame.as_mut_slice().iter_mut().enumerate() {
            *v = 2.0 + (i as f32) * 0.001 + f32::EPSILON * (i as f32);
        }
        let video = DepthVideo::new(vec![frame; 3], 30.0).unwrap();
        let meta = VideoMeta::for_video(&video, 3.0);
        write_video(dir.path(), &video, &meta).unwrap();
        let (back, meta2) = read_video(dir.path()).unwrap();
        assert_eq!(video, back);
        assert_eq!(meta2.frame_count, 3);
        for (a, b) in video.frames.iter().zip(&back.frames) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn signal_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sig.csv");
        let s = RespSignal::new(vec![2.0, 2.001, 1.9995], 30.0, SignalKind::Recorded).unwrap();
        write_signal_csv(&path, &s).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time_s,value_m\n"));
        let back = read_signal_csv(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert!((back.sample_rate_hz() - 30.0).abs() < 1e-6);
        for (a, b) in s.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn sig9_formatting_is_nine_significant_digits() {
        assert_eq!(fmt_sig9(0.25), "2.50000000e-1");
        assert_eq!(fmt_sig9(f64::NAN), "nan");
        let v: f64 = fmt_sig9(1.0 / 3.0).parse().unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn provenance_hash_is_stable() {
        assert_eq!(provenance_hash(b"abc"), provenance_hash(b"abc"));
        assert_ne!(provenance_hash(b"abc"), provenance_hash(b"abd"));
    }
}
