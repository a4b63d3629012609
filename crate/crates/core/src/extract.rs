//! Chest RoI selection and respiratory signal extraction.
//!
//! Each frame is reduced to one sample: crop the RoI at full resolution,
//! rescale it with the nearest-neighbour scheme, then take the arithmetic
//! mean of every remaining pixel (background pixels included as-is). The
//! mean is accumulated in f64 in row-major order, so results are bit-stable
//! regardless of parallelism.

use crate::error::{Error, Result};
use crate::scene::{self, DepthFrame, DepthVideo, TorsoScene};
use crate::signals::{RespSignal, SignalKind};
use serde::{Deserialize, Serialize};

/// Rectangular region of interest in full-resolution pixel coordinates,
/// plus the rescale factor applied before reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiSpec {
    pub x0: usize,
    pub y0: usize,
    pub width_px: usize,
    pub height_px: usize,
    pub scale: f64,
}

impl Default for RoiSpec {
    fn default() -> Self {
        Self {
            x0: 0,
            y0: 0,
            width_px: 280,
            height_px: 206,
            scale: 1.0,
        }
    }
}

impl RoiSpec {
    /// The 280x206 chest RoI centered on the chest-apex projection, shifted
    /// inside the frame if it overhangs an image edge.
    pub fn centered_on_apex(scene: &TorsoScene, width_px: usize, height_px: usize) -> Result<Self> {
        let intr = &scene.intrinsics;
        if width_px > intr.width_px || height_px > intr.height_px {
            return Err(Error::parameter(format!(
                "RoI {width_px}x{height_px} larger than the {}x{} frame",
                intr.width_px, intr.height_px
            )));
        }
        let x0 = (intr.cx() - width_px as f64 / 2.0).round().max(0.0) as usize;
        let y0 = (intr.cy() - height_px as f64 / 2.0).round().max(0.0) as usize;
        Ok(Self {
            x0: x0.min(intr.width_px - width_px),
            y0: y0.min(intr.height_px - height_px),
            width_px,
            height_px,
            scale: 1.0,
        })
    }

    /// Paper-sized RoI (280x206) centered on the chest apex.
    pub fn paper(scene: &TorsoScene) -> Result<Self> {
        Self::centered_on_apex(scene, 280, 206)
    }

    /// RoI inscribed in the torso projection with a safety margin, so that
    /// the silhouette stays outside and edge noise reaches it only through
    /// area-of-effect spillover.
    pub fn chest_core(scene: &TorsoScene, margin_px: usize) -> Result<Self> {
        let (bx0, by0, bx1, by1) = scene::torso_projection_bbox(scene)?;
        let x0 = bx0 + margin_px;
        let y0 = by0 + margin_px;
        if bx1 < x0 + margin_px + 1 || by1 < y0 + margin_px + 1 {
            return Err(Error::parameter(format!(
                "torso projection {}x{} too small for a {margin_px}px RoI margin",
                bx1 - bx0 + 1,
                by1 - by0 + 1
            )));
        }
        Ok(Self {
            x0,
            y0,
            width_px: (bx1 - margin_px) - x0 + 1,
            height_px: (by1 - margin_px) - y0 + 1,
            scale: 1.0,
        })
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    /// Output dimensions after rescaling: floor(dim * scale), at least 1.
    pub fn scaled_dims(&self) -> (usize, usize) {
        (
            (((self.width_px as f64) * self.scale).floor() as usize).max(1),
            (((self.height_px as f64) * self.scale).floor() as usize).max(1),
        )
    }

    pub fn validate(&self, frame_width: usize, frame_height: usize) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::parameter(format!(
                "roi.scale must lie in (0, 1], got {}",
                self.scale
            )));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::parameter("roi dimensions must be positive"));
        }
        if self.x0 + self.width_px > frame_width {
            return Err(Error::parameter(format!(
                "roi right edge {} exceeds frame width {frame_width}",
                self.x0 + self.width_px
            )));
        }
        if self.y0 + self.height_px > frame_height {
            return Err(Error::parameter(format!(
                "roi bottom edge {} exceeds frame height {frame_height}",
                self.y0 + self.height_px
            )));
        }
        Ok(())
    }
}

/// Crop the RoI rectangle out of a frame at full resolution.
pub fn crop_roi(frame: &DepthFrame, roi: &RoiSpec) -> DepthFrame {
    let mut data = Vec::with_capacity(roi.width_px * roi.height_px);
    for y in roi.y0..roi.y0 + roi.height_px {
        for x in roi.x0..roi.x0 + roi.width_px {
            data.push(frame.get(x, y));
        }
    }
    DepthFrame::from_data(roi.width_px, roi.height_px, data).expect("crop dims consistent")
}

/// Nearest-neighbour rescale: out[i] = in[floor((i + 0.5) / scale)].
pub fn rescale_nn(region: &DepthFrame, scale: f64) -> Result<DepthFrame> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::parameter(format!(
            "scale must lie in (0, 1], got {scale}"
        )));
    }
    if scale == 1.0 {
        return Ok(region.clone());
    }
    let (w, h) = (region.width(), region.height());
    let ow = (((w as f64) * scale).floor() as usize).max(1);
    let oh = (((h as f64) * scale).floor() as usize).max(1);
    let src = |i: usize, dim: usize| -> usize {
        ((((i as f64) + 0.5) / scale).floor() as usize).min(dim - 1)
    };
    let mut data = Vec::with_capacity(ow * oh);
    for j in 0..oh {
        let sy = src(j, h);
        for i in 0..ow {
            data.push(region.get(src(i, w), sy));
        }
    }
    DepthFrame::from_data(ow, oh, data)
}

/// Mean depth of the rescaled RoI of one frame.
pub fn roi_sample(frame: &DepthFrame, roi: &RoiSpec) -> Result<f64> {
    let cropped = crop_roi(frame, roi);
    let scaled = rescale_nn(&cropped, roi.scale)?;
    let n = scaled.as_slice().len() as f64;
    let mut acc = 0.0f64;
    for &v in scaled.as_slice() {
        acc += v as f64;
    }
    Ok(acc / n)
}

/// Reduce a depth video to a respiratory signal: one RoI mean per frame,
/// in meters, at the video frame rate.
pub fn extract_signal(video: &DepthVideo, roi: &RoiSpec) -> Result<RespSignal> {
    roi.validate(video.width(), video.height())?;
    let mut samples = Vec::with_capacity(video.frame_count());
    for frame in &video.frames {
        samples.push(roi_sample(frame, roi)?);
    }
    RespSignal::new(samples, video.frame_rate_hz, SignalKind::Recorded)
}
