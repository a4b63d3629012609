//! Depth-sensor noise models.
//!
//! Six models cover the dominant error sources of time-of-flight, stereo
//! and structured-light depth cameras:
//!
//! * `gaussian` — i.i.d. additive Gaussian noise over the whole frame;
//! * `axial` — additive noise whose magnitude grows quadratically with the
//!   offset-corrected depth, `out = Z + eta * ((Z - d_offset) * d_level)^2`;
//! * `radial` — Gaussian noise faded linearly from the image center (weight
//!   0) to the farthest corner (weight 1), a lens-distortion proxy;
//! * `motion` — random integer translation per frame with edge replication,
//!   modelling motion blur and RoI tracking error;
//! * `edge_permutation` — near depth edges, pixels resample their value
//!   from a random neighbour within a disk, modelling triangulation and
//!   occlusion failures at object borders;
//! * `edge_gaussian` — strong Gaussian noise confined to the same
//!   edge-derived area of effect.
//!
//! All randomness flows through [`crate::rng::frame_stream`] keyed by
//! `(seed, spec index, frame index)`, so a chain applied to a video is
//! bit-reproducible across runs and across any degree of per-frame
//! parallelism.

use crate::error::{Error, Result};
use crate::rng;
use crate::scene::{DepthFrame, DepthVideo};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

/// One noise model with its parameters and seed. A composite corruption is
/// an ordered list of these, applied sequentially by [`apply_chain`].
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Gaussian {
        sigma_m: f64,
        seed: u64,
    },
    Axial {
        d_offset_m: f64,
        d_level: f64,
        seed: u64,
    },
    Radial {
        sigma_m: f64,
        seed: u64,
    },
    Motion {
        max_shift_px: f64,
        seed: u64,
    },
    EdgePermutation {
        sigma_g_px: f64,
        r_p_px: u32,
        aoe_threshold: f64,
        seed: u64,
    },
    EdgeGaussian {
        sigma_g_px: f64,
        sigma_m: f64,
        aoe_threshold: f64,
        seed: u64,
    },
}

impl NoiseSpec {
    pub fn model_name(&self) -> &'static str {
        match self {
            NoiseSpec::Gaussian { .. } => "gaussian",
            NoiseSpec::Axial { .. } => "axial",
            NoiseSpec::Radial { .. } => "radial",
            NoiseSpec::Motion { .. } => "motion",
            NoiseSpec::EdgePermutation { .. } => "edge_permutation",
            NoiseSpec::EdgeGaussian { .. } => "edge_gaussian",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            NoiseSpec::Gaussian { seed, .. }
            | NoiseSpec::Axial { seed, .. }
            | NoiseSpec::Radial { seed, .. }
            | NoiseSpec::Motion { seed, .. }
            | NoiseSpec::EdgePermutation { seed, .. }
            | NoiseSpec::EdgeGaussian { seed, .. } => *seed,
        }
    }

    pub fn set_seed(&mut self, new_seed: u64) {
        match self {
            NoiseSpec::Gaussian { seed, .. }
            | NoiseSpec::Axial { seed, .. }
            | NoiseSpec::Radial { seed, .. }
            | NoiseSpec::Motion { seed, .. }
            | NoiseSpec::EdgePermutation { seed, .. }
            | NoiseSpec::EdgeGaussian { seed, .. } => *seed = new_seed,
        }
    }

    /// Set a named parameter (used by sweep grids).
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match (self, name) {
            (NoiseSpec::Gaussian { sigma_m, .. }, "sigma_m") => sigma_m,
            (NoiseSpec::Axial { d_offset_m, .. }, "d_offset_m") => d_offset_m,
            (NoiseSpec::Axial { d_level, .. }, "d_level") => d_level,
            (NoiseSpec::Radial { sigma_m, .. }, "sigma_m") => sigma_m,
            (NoiseSpec::Motion { max_shift_px, .. }, "max_shift_px") => max_shift_px,
            (NoiseSpec::EdgePermutation { sigma_g_px, .. }, "sigma_g_px") => sigma_g_px,
            (NoiseSpec::EdgePermutation { aoe_threshold, .. }, "aoe_threshold") => aoe_threshold,
            (s @ NoiseSpec::EdgePermutation { .. }, "r_p_px") => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::parameter(format!(
                        "r_p_px must be an integer >= 1, got {value}"
                    )));
                }
                if let NoiseSpec::EdgePermutation { r_p_px, .. } = s {
                    *r_p_px = value as u32;
                }
                return Ok(());
            }
            (NoiseSpec::EdgeGaussian { sigma_g_px, .. }, "sigma_g_px") => sigma_g_px,
            (NoiseSpec::EdgeGaussian { sigma_m, .. }, "sigma_m") => sigma_m,
            (NoiseSpec::EdgeGaussian { aoe_threshold, .. }, "aoe_threshold") => aoe_threshold,
            (s, _) => {
                return Err(Error::parameter(format!(
                    "model {} has no parameter {name}",
                    s.model_name()
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if !(v.is_finite() && v > 0.0) {
                Err(Error::parameter(format!("{name} must be positive, got {v}")))
            } else {
                Ok(())
            }
        };
        match self {
            NoiseSpec::Gaussian { sigma_m, .. } => positive("sigma_m", *sigma_m),
            NoiseSpec::Axial {
                d_offset_m, d_level, ..
            } => {
                if !d_offset_m.is_finite() {
                    return Err(Error::parameter("d_offset_m must be finite"));
                }
                positive("d_level", *d_level)
            }
            NoiseSpec::Radial { sigma_m, .. } => positive("sigma_m", *sigma_m),
            NoiseSpec::Motion { max_shift_px, .. } => positive("max_shift_px", *max_shift_px),
            NoiseSpec::EdgePermutation {
                sigma_g_px,
                r_p_px,
                aoe_threshold,
                ..
            } => {
                positive("sigma_g_px", *sigma_g_px)?;
                if *r_p_px < 1 {
                    return Err(Error::parameter("r_p_px must be >= 1"));
                }
                if !(*aoe_threshold > 0.0 && *aoe_threshold < 1.0) {
                    return Err(Error::parameter(format!(
                        "aoe_threshold must lie in (0, 1), got {aoe_threshold}"
                    )));
                }
                Ok(())
            }
            NoiseSpec::EdgeGaussian {
                sigma_g_px,
                sigma_m,
                aoe_threshold,
                ..
            } => {
                positive("sigma_g_px", *sigma_g_px)?;
                positive("sigma_m", *sigma_m)?;
                if !(*aoe_threshold > 0.0 && *aoe_threshold < 1.0) {
                    return Err(Error::parameter(format!(
                        "aoe_threshold must lie in (0, 1), got {aoe_threshold}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Validate against the frame geometry this spec will be applied to.
    pub fn validate_for(&self, width: usize, height: usize) -> Result<()> {
        self.validate()?;
        if let NoiseSpec::Motion { max_shift_px, .. } = self {
            let k = max_shift_px.round() as usize;
            if k >= width.min(height) {
                return Err(Error::parameter(format!(
                    "max_shift_px {max_shift_px} reaches the frame dimension ({width}x{height})"
                )));
            }
        }
        Ok(())
    }
}

impl Serialize for NoiseSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NoiseSpec::Gaussian { sigma_m, seed } => {
                let mut s = serializer.serialize_struct("NoiseSpec", 3)?;
                s.serialize_field("type", "gaussian")?;
                s.serialize_field("sigma_m", sigma_m)?;
                s.serialize_field("seed", seed)?;
                s.end()
            }
            NoiseSpec::Axial {
                d_offset_m,
                d_level,
                seed,
            } => {
                let mut s = serializer.serialize_struct("NoiseSpec", 4)?;
                s.serialize_field("type", "axial")?;
                s.serialize_field("d_offset_m", d_offset_m)?;
                s.serialize_field("d_level", d_level)?;
                s.serialize_field("seed", seed)?;
                s.end()
            }
            NoiseSpec::Radial { sigma_m, seed } => {
                let mut s = serializer.serialize_struct("NoiseSpec", 3)?;
                s.serialize_field("type", "radial")?;
                s.serialize_field("sigma_m", sigma_m)?;
                s.serialize_field("seed", seed)?;
                s.end()
            }
            NoiseSpec::Motion { max_shift_px, seed } => {
                let mut s = serializer.serialize_struct("NoiseSpec", 3)?;
                s.serialize_field("type", "motion")?;
                s.serialize_field("max_shift_px", max_shift_px)?;
                s.serialize_field("seed", seed)?;
                s.end()
            }
            NoiseSpec::EdgePermutation {
                sigma_g_px,
                r_p_px,
                aoe_threshold,
                seed,
            } => {
                let mut s = serializer.serialize_struct("NoiseSpec", 5)?;
                s.serialize_field("type", "edge_permutation")?;
                s.serialize_field("sigma_g_px", sigma_g_px)?;
                s.serialize_field("r_p_px", r_p_px)?;
                s.serialize_field("aoe_threshold", aoe_threshold)?;
                s.serialize_field("seed", seed)?;
                s.end()
            }
            NoiseSpec::EdgeGaussian {
                sigma_g_px,
                sigma_m,
                aoe_threshold,
                seed,
            } => {
                let mut s = serializer.serialize_struct("NoiseSpec", 5)?;
                s.serialize_field("type", "edge_gaussian")?;
                s.serialize_field("sigma_g_px", sigma_g_px)?;
                s.serialize_field("sigma_m", sigma_m)?;
                s.serialize_field("aoe_threshold", aoe_threshold)?;
                s.serialize_field("seed", seed)?;
                s.end()
            }
        }
    }
}

/// Flat view of every recognized field; unknown keys are rejected here and
/// fields that do not belong to the named type are rejected below.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(rename = "type")]
    kind: String,
    sigma_m: Option<f64>,
    d_offset_m: Option<f64>,
    d_level: Option<f64>,
    max_shift_px: Option<f64>,
    sigma_g_px: Option<f64>,
    r_p_px: Option<u32>,
    aoe_threshold: Option<f64>,
    seed: Option<u64>,
}

impl RawSpec {
    fn into_spec<E: serde::de::Error>(self) -> std::result::Result<NoiseSpec, E> {
        struct Fields {
            names: &'static [&'static str],
        }
        let allowed = |kind: &str| -> Fields {
            Fields {
                names: match kind {
                    "gaussian" | "radial" => &["sigma_m"],
                    "axial" => &["d_offset_m", "d_level"],
                    "motion" => &["max_shift_px"],
                    "edge_permutation" => &["sigma_g_px", "r_p_px", "aoe_threshold"],
                    "edge_gaussian" => &["sigma_g_px", "sigma_m", "aoe_threshold"],
                    _ => &[],
                },
            }
        };
        let fields = allowed(&self.kind);
        if fields.names.is_empty() {
            return Err(E::custom(format!(
                "unknown noise type {:?}; expected one of gaussian, axial, radial, motion, \
                 edge_permutation, edge_gaussian",
                self.kind
            )));
        }
        let present: &[(&str, bool)] = &[
            ("sigma_m", self.sigma_m.is_some()),
            ("d_offset_m", self.d_offset_m.is_some()),
            ("d_level", self.d_level.is_some()),
            ("max_shift_px", self.max_shift_px.is_some()),
            ("sigma_g_px", self.sigma_g_px.is_some()),
            ("r_p_px", self.r_p_px.is_some()),
            ("aoe_threshold", self.aoe_threshold.is_some()),
        ];
        for (name, is_present) in present {
            let belongs = fields.names.contains(name);
            if *is_present && !belongs {
                return Err(E::custom(format!(
                    "field {name:?} does not apply to noise type {:?}",
                    self.kind
                )));
            }
            if !*is_present && belongs {
                return Err(E::custom(format!(
                    "noise type {:?} requires field {name:?}",
                    self.kind
                )));
            }
        }
        let seed = self.seed.unwrap_or(0);
        Ok(match self.kind.as_str() {
            "gaussian" => NoiseSpec::Gaussian {
                sigma_m: self.sigma_m.unwrap(),
                seed,
            },
            "axial" => NoiseSpec::Axial {
                d_offset_m: self.d_offset_m.unwrap(),
                d_level: self.d_level.unwrap(),
                seed,
            },
            "radial" => NoiseSpec::Radial {
                sigma_m: self.sigma_m.unwrap(),
                seed,
            },
            "motion" => NoiseSpec::Motion {
                max_shift_px: self.max_shift_px.unwrap(),
                seed,
            },
            "edge_permutation" => NoiseSpec::EdgePermutation {
                sigma_g_px: self.sigma_g_px.unwrap(),
                r_p_px: self.r_p_px.unwrap(),
                aoe_threshold: self.aoe_threshold.unwrap(),
                seed,
            },
            "edge_gaussian" => NoiseSpec::EdgeGaussian {
                sigma_g_px: self.sigma_g_px.unwrap(),
                sigma_m: self.sigma_m.unwrap(),
                aoe_threshold: self.aoe_threshold.unwrap(),
                seed,
            },
            _ => unreachable!(),
        })
    }
}

impl<'de> Deserialize<'de> for NoiseSpec {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        RawSpec::deserialize(deserializer)?.into_spec()
    }
}

// ---------------------------------------------------------------------------
// model a: Gaussian
// ---------------------------------------------------------------------------

/// Add i.i.d. Gaussian noise to every pixel, foreground and background alike.
pub fn apply_gaussian(frame: &DepthFrame, sigma_m: f64, rng: &mut impl Rng) -> DepthFrame {
    let normal = Normal::new(0.0, sigma_m).expect("sigma validated");
    let mut out = frame.clone();
    for v in out.as_mut_slice() {
        *v = (*v as f64 + normal.sample(rng)) as f32;
    }
    out
}

// ---------------------------------------------------------------------------
// model b: axial
// ---------------------------------------------------------------------------

/// Depth-dependent noise: `out = Z + eta * ((Z - d_offset) * d_level)^2`
/// with standard-normal `eta` drawn per pixel.
pub fn apply_axial(
    frame: &DepthFrame,
    d_offset_m: f64,
    d_level: f64,
    rng: &mut impl Rng,
) -> DepthFrame {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = frame.clone();
    for v in out.as_mut_slice() {
        let z = *v as f64;
        let mag = ((z - d_offset_m) * d_level).powi(2);
        *v = (z + normal.sample(rng) * mag) as f32;
    }
    out
}

// ---------------------------------------------------------------------------
// model c: radial
// ---------------------------------------------------------------------------

/// Linear radial fade: 0 at the image center pixel, 1 at the farthest
/// corner.
pub fn radial_mask_value(width: usize, height: usize, x: usize, y: usize) -> f64 {
    let cx = (width / 2) as f64;
    let cy = (height / 2) as f64;
    let r_corner = (cx * cx + cy * cy).sqrt();
    let dx = x as f64 - cx;
    let dy = y as f64 - cy;
    (dx * dx + dy * dy).sqrt() / r_corner
}

/// Gaussian noise weighted by the radial fade mask.
pub fn apply_radial(frame: &DepthFrame, sigma_m: f64, rng: &mut impl Rng) -> DepthFrame {
    let normal = Normal::new(0.0, sigma_m).expect("sigma validated");
    let (w, h) = (frame.width(), frame.height());
    let cx = (w / 2) as f64;
    let cy = (h / 2) as f64;
    let r_corner = (cx * cx + cy * cy).sqrt();
    let mut out = frame.clone();
    for y in 0..h {
        let dy = y as f64 - cy;
        for x in 0..w {
            let dx = x as f64 - cx;
            let m = (dx * dx + dy * dy).sqrt() / r_corner;
            let v = out.get(x, y) as f64 + m * normal.sample(rng);
            out.set(x, y, v as f32);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// model d: motion
// ---------------------------------------------------------------------------

/// Translate by an integer offset with edge replication.
pub fn translate_frame(frame: &DepthFrame, dx: i64, dy: i64) -> DepthFrame {
    let (w, h) = (frame.width() as i64, frame.height() as i64);
    let mut out = DepthFrame::new(frame.width(), frame.height(), 0.0);
    for y in 0..h {
        let sy = (y - dy).clamp(0, h - 1) as usize;
        for x in 0..w {
            let sx = (x - dx).clamp(0, w - 1) as usize;
            out.set(x as usize, y as usize, frame.get(sx, sy));
        }
    }
    out
}

/// Draw one (dx, dy) offset, each component uniform on {-k, ..., +k} with
/// k = round(max_shift_px).
pub fn draw_shift(max_shift_px: f64, rng: &mut impl Rng) -> (i64, i64) {
    let k = max_shift_px.round() as i64;
    if k == 0 {
        return (0, 0);
    }
    let dx = rng.gen_range(-k..=k);
    let dy = rng.gen_range(-k..=k);
    (dx, dy)
}

/// Random translation per frame; offsets are drawn frame by frame from the
/// supplied stream.
pub fn apply_motion(
    video: &DepthVideo,
    max_shift_px: f64,
    rng: &mut impl Rng,
) -> Result<DepthVideo> {
    let k = max_shift_px.round() as usize;
    if k >= video.width().min(video.height()) {
        return Err(Error::parameter(format!(
            "max_shift_px {max_shift_px} reaches the frame dimension"
        )));
    }
    let frames = video
        .frames
        .iter()
        .map(|f| {
            let (dx, dy) = draw_shift(max_shift_px, rng);
            translate_frame(f, dx, dy)
        })
        .collect();
    DepthVideo::new(frames, video.frame_rate_hz)
}

// ---------------------------------------------------------------------------
// models e/f: edge noise
// ---------------------------------------------------------------------------

/// Area-of-effect mask derived from depth edges: values in [0, 1], zero
/// wherever the smoothed edge response falls below the threshold.
#[derive(Debug, Clone)]
pub struct AoeMask {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl AoeMask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pixels with a nonzero mask.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) > 0.0 {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// Symmetric reflection for out-of-range sample indices.
#[inline]
fn reflect(mut i: i64, n: i64) -> usize {
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// 3x3 Sobel gradient magnitude with reflected borders.
fn sobel_magnitude(frame: &DepthFrame) -> Vec<f64> {
    let (w, h) = (frame.width(), frame.height());
    let data = frame.as_slice();
    let mut out = vec![0.0; w * h];
    let mag = |a: f64, b: f64, c: f64, d: f64, f: f64, g: f64, i: f64, j: f64| -> f64 {
        // corners a c g j, edges b (top) d/f (sides) i (bottom)
        let gx = -a + c - 2.0 * d + 2.0 * f - g + j;
        let gy = -a - 2.0 * b - c + g + 2.0 * i + j;
        (gx * gx + gy * gy).sqrt()
    };
    // interior: direct indexing
    for y in 1..h.saturating_sub(1) {
        let up = &data[(y - 1) * w..y * w];
        let mid = &data[y * w..(y + 1) * w];
        let dn = &data[(y + 1) * w..(y + 2) * w];
        for x in 1..w - 1 {
            out[y * w + x] = mag(
                up[x - 1] as f64,
                up[x] as f64,
                up[x + 1] as f64,
                mid[x - 1] as f64,
                mid[x + 1] as f64,
                dn[x - 1] as f64,
                dn[x] as f64,
                dn[x + 1] as f64,
            );
        }
    }
    // borders: reflected sampling
    let at = |x: i64, y: i64| -> f64 {
        data[reflect(y, h as i64) * w + reflect(x, w as i64)] as f64
    };
    let mut border = |x: i64, y: i64| {
        out[y as usize * w + x as usize] = mag(
            at(x - 1, y - 1),
            at(x, y - 1),
            at(x + 1, y - 1),
            at(x - 1, y),
            at(x + 1, y),
            at(x - 1, y + 1),
            at(x, y + 1),
            at(x + 1, y + 1),
        );
    };
    for x in 0..w as i64 {
        border(x, 0);
        border(x, h as i64 - 1);
    }
    for y in 1..h as i64 - 1 {
        border(0, y);
        border(w as i64 - 1, y);
    }
    out
}

/// One reflected-border Gaussian gather at position `i` along a strided
/// lane of length `n`.
#[inline]
fn blur_tap(lane: &[f64], stride: usize, n: i64, i: i64, kernel: &[f64], radius: i64) -> f64 {
    let mut acc = 0.0;
    if i >= radius && i + radius < n {
        let base = (i - radius) as usize * stride;
        for (ki, k) in kernel.iter().enumerate() {
            acc += k * lane[base + ki * stride];
        }
    } else {
        for (ki, k) in kernel.iter().enumerate() {
            acc += k * lane[reflect(i + ki as i64 - radius, n) * stride];
        }
    }
    acc
}

/// Separable Gaussian blur with kernel radius ceil(3 sigma) and reflected
/// borders. Edge-response inputs are zero almost everywhere, so each pass
/// only evaluates outputs within kernel reach of a nonzero input; the
/// result is bit-identical to the dense gather.
pub(crate) fn gaussian_blur(values: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for i in -radius..=radius {
        kernel.push((-((i * i) as f64) / (2.0 * sigma * sigma)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= norm;
    }

    let (w, h) = (width as i64, height as i64);
    let mut tmp = vec![0.0; values.len()];
    for y in 0..height {
        let row = &values[y * width..(y + 1) * width];
        let Some(first) = row.iter().position(|v| *v != 0.0) else {
            continue;
        };
        let last = row.iter().rposition(|v| *v != 0.0).unwrap();
        let lo = (first as i64 - radius).max(0);
        let hi = (last as i64 + radius).min(w - 1);
        for x in lo..=hi {
            tmp[y * width + x as usize] = blur_tap(row, 1, w, x, &kernel, radius);
        }
    }
    let mut out = vec![0.0; values.len()];
    for x in 0..width {
        let col_nonzero = |y: usize| tmp[y * width + x] != 0.0;
        let Some(first) = (0..height).find(|y| col_nonzero(*y)) else {
            continue;
        };
        let last = (0..height).rev().find(|y| col_nonzero(*y)).unwrap();
        let lo = (first as i64 - radius).max(0);
        let hi = (last as i64 + radius).min(h - 1);
        for y in lo..=hi {
            out[y as usize * width + x] = blur_tap(&tmp[x..], width, h, y, &kernel, radius);
        }
    }
    out
}

/// Build the area-of-effect mask: Sobel magnitude, normalized, smoothed
/// with a Gaussian of std `sigma_g_px`, renormalized to [0, 1], then zeroed
/// below `aoe_threshold`. A flat frame yields an all-zero mask.
pub fn edge_aoe(frame: &DepthFrame, sigma_g_px: f64, aoe_threshold: f64) -> AoeMask {
    let (w, h) = (frame.width(), frame.height());
    let mut mag = sobel_magnitude(frame);
    let max = mag.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return AoeMask {
            width: w,
            height: h,
            values: vec![0.0; w * h],
        };
    }
    for v in mag.iter_mut() {
        *v /= max;
    }
    let mut smooth = gaussian_blur(&mag, w, h, sigma_g_px);
    let smax = smooth.iter().cloned().fold(0.0, f64::max);
    if smax > 0.0 {
        for v in smooth.iter_mut() {
            *v /= smax;
            if *v < aoe_threshold {
                *v = 0.0;
            }
        }
    }
    AoeMask {
        width: w,
        height: h,
        values: smooth,
    }
}

/// Strong Gaussian noise weighted by the area-of-effect mask.
pub fn apply_edge_gaussian(
    frame: &DepthFrame,
    sigma_g_px: f64,
    sigma_m: f64,
    aoe_threshold: f64,
    rng: &mut impl Rng,
) -> DepthFrame {
    let mask = edge_aoe(frame, sigma_g_px, aoe_threshold);
    let normal = Normal::new(0.0, sigma_m).expect("sigma validated");
    let mut out = frame.clone();
    let (w, h) = (frame.width(), frame.height());
    for y in 0..h {
        for x in 0..w {
            let n = normal.sample(rng);
            let m = mask.get(x, y);
            if m > 0.0 {
                out.set(x, y, (out.get(x, y) as f64 + m * n) as f32);
            }
        }
    }
    out
}

/// Integer offsets within a disk of the given radius, excluding the center.
fn disk_offsets(radius: u32) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if (dx, dy) != (0, 0) && dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Permutation noise: inside the area of effect each pixel, with
/// probability equal to its mask value, takes the value of a uniformly
/// drawn neighbour within `r_p_px` (redrawn until inside the image). Source
/// values come from the input frame, so swaps do not cascade.
pub fn apply_edge_permutation(
    frame: &DepthFrame,
    sigma_g_px: f64,
    r_p_px: u32,
    aoe_threshold: f64,
    rng: &mut impl Rng,
) -> DepthFrame {
    let mask = edge_aoe(frame, sigma_g_px, aoe_threshold);
    let offsets = disk_offsets(r_p_px);
    let (w, h) = (frame.width() as i64, frame.height() as i64);
    let mut out = frame.clone();
    for y in 0..h {
        for x in 0..w {
            let m = mask.get(x as usize, y as usize);
            if m <= 0.0 {
                continue;
            }
            if rng.gen::<f64>() >= m {
                continue;
            }
            // rejection-sample an in-bounds neighbour
            let (sx, sy) = loop {
                let (dx, dy) = offsets[rng.gen_range(0..offsets.len())];
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && nx < w && ny >= 0 && ny < h {
                    break (nx as usize, ny as usize);
                }
            };
            out.set(x as usize, y as usize, frame.get(sx, sy));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// chains
// ---------------------------------------------------------------------------

/// Apply one spec to one frame, drawing from the stream keyed by
/// `(spec.seed, spec_index, frame_index)`.
pub fn apply_spec_to_frame(
    frame: &DepthFrame,
    spec: &NoiseSpec,
    spec_index: u32,
    frame_index: u32,
) -> DepthFrame {
    let mut rng = rng::frame_stream(spec.seed(), spec_index, frame_index);
    match spec {
        NoiseSpec::Gaussian { sigma_m, .. } => apply_gaussian(frame, *sigma_m, &mut rng),
        NoiseSpec::Axial {
            d_offset_m,
            d_level,
            ..
        } => apply_axial(frame, *d_offset_m, *d_level, &mut rng),
        NoiseSpec::Radial { sigma_m, .. } => apply_radial(frame, *sigma_m, &mut rng),
        NoiseSpec::Motion { max_shift_px, .. } => {
            let (dx, dy) = draw_shift(*max_shift_px, &mut rng);
            translate_frame(frame, dx, dy)
        }
        NoiseSpec::EdgePermutation {
            sigma_g_px,
            r_p_px,
            aoe_threshold,
            ..
        } => apply_edge_permutation(frame, *sigma_g_px, *r_p_px, *aoe_threshold, &mut rng),
        NoiseSpec::EdgeGaussian {
            sigma_g_px,
            sigma_m,
            aoe_threshold,
            ..
        } => apply_edge_gaussian(frame, *sigma_g_px, *sigma_m, *aoe_threshold, &mut rng),
    }
}

/// Run a whole chain over one frame. Masks and shifts are recomputed from
/// the intermediate frames, so downstream specs see upstream corruption.
pub fn corrupt_frame(frame: &DepthFrame, specs: &[NoiseSpec], frame_index: u32) -> DepthFrame {
    let mut current = frame.clone();
    for (i, spec) in specs.iter().enumerate() {
        current = apply_spec_to_frame(&current, spec, i as u32, frame_index);
    }
    current
}

/// Apply an ordered chain of noise specs to a video.
///
/// Per-frame sub-seeding makes the result independent of evaluation order;
/// frames are processed in parallel and the output is bit-identical to
/// sequential execution.
pub fn apply_chain(video: &DepthVideo, specs: &[NoiseSpec]) -> Result<DepthVideo> {
    if specs.is_empty() {
        return Err(Error::parameter("noise chain must not be empty"));
    }
    for spec in specs {
        spec.validate_for(video.width(), video.height())?;
    }
    let frames: Vec<DepthFrame> = video
        .frames
        .par_iter()
        .enumerate()
        .map(|(t, f)| corrupt_frame(f, specs, t as u32))
        .collect();
    DepthVideo::new(frames, video.frame_rate_hz)
}
