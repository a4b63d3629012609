//! Procedural torso scene and depth-video animation.
//!
//! The torso is a frontal elliptic-cylinder patch in a body frame with
//! x lateral, y anterior (toward the camera) and z superior. A chest-region
//! ellipse on the surface marks the vertices displaced by the respiratory
//! signal; displacement falls off quadratically with the distance to the
//! region's center of gravity. Frames are rendered with a pinhole z-buffer
//! rasterizer; pixels that miss the torso get the depth of a flat backdrop
//! plane one meter behind the chest apex.

use crate::error::{Error, Result};
use crate::raster::{render_frame, ViewMesh};
use crate::signals::RespSignal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Pinhole camera intrinsics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraIntrinsics {
    pub width_px: usize,
    pub height_px: usize,
    pub focal_px: f64,
    /// Principal point (cx, cy); `None` means the image center.
    pub principal_point: Option<[f64; 2]>,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            width_px: 640,
            height_px: 480,
            focal_px: 525.0,
            principal_point: None,
        }
    }
}

impl CameraIntrinsics {
    pub fn cx(&self) -> f64 {
        self.principal_point
            .map_or(self.width_px as f64 / 2.0, |p| p[0])
    }

    pub fn cy(&self) -> f64 {
        self.principal_point
            .map_or(self.height_px as f64 / 2.0, |p| p[1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_px < 8 || self.height_px < 8 {
            return Err(Error::parameter(format!(
                "intrinsics: image must be at least 8x8 pixels, got {}x{}",
                self.width_px, self.height_px
            )));
        }
        if !(self.focal_px.is_finite() && self.focal_px > 0.0) {
            return Err(Error::parameter("intrinsics: focal_px must be positive"));
        }
        let (cx, cy) = (self.cx(), self.cy());
        if cx < 0.0 || cx > self.width_px as f64 || cy < 0.0 || cy > self.height_px as f64 {
            return Err(Error::parameter(format!(
                "intrinsics: principal point ({cx}, {cy}) outside the image"
            )));
        }
        Ok(())
    }
}

/// Ellipse on the torso surface marking the displaced chest vertices.
/// Coordinates are (lateral arc, height) in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChestRegion {
    pub center_lateral_m: f64,
    pub center_vertical_m: f64,
    pub radius_lateral_m: f64,
    pub radius_vertical_m: f64,
}

impl Default for ChestRegion {
    fn default() -> Self {
        Self {
            center_lateral_m: 0.0,
            center_vertical_m: 0.05,
            radius_lateral_m: 0.15,
            radius_vertical_m: 0.24,
        }
    }
}

/// Parametric torso scene: geometry, chest region, motion and camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TorsoScene {
    /// Lateral half-axis of the elliptic cross-section, meters.
    pub half_axis_lateral_m: f64,
    /// Anteroposterior half-axis, meters.
    pub half_axis_anterior_m: f64,
    /// Torso height, meters.
    pub height_m: f64,
    /// Tessellation resolution (quads) around the arc and along the height.
    pub tess_u: usize,
    pub tess_v: usize,
    pub chest_region: ChestRegion,
    /// Displacement direction in the body frame; normalized on use.
    pub motion_dir: [f64; 3],
    /// Peak-to-peak chest excursion in meters.
    pub amplitude_m: f64,
    /// Distance from the camera to the chest apex along the optical axis.
    pub camera_distance_m: f64,
    pub intrinsics: CameraIntrinsics,
}

impl Default for TorsoScene {
    fn default() -> Self {
        Self {
            half_axis_lateral_m: 0.18,
            half_axis_anterior_m: 0.12,
            height_m: 0.6,
            tess_u: 128,
            tess_v: 128,
            chest_region: ChestRegion::default(),
            motion_dir: [0.0, 2.0 / 3.0, 1.0 / 3.0],
            amplitude_m: 0.01,
            camera_distance_m: 2.0,
            intrinsics: CameraIntrinsics::default(),
        }
    }
}

impl TorsoScene {
    /// Depth of the backdrop plane, which doubles as the background sentinel.
    pub fn sentinel_depth_m(&self) -> f64 {
        self.camera_distance_m + 1.0
    }

    /// Motion direction scaled to unit norm.
    pub fn unit_motion_dir(&self) -> Result<[f64; 3]> {
        let [x, y, z] = self.motion_dir;
        let norm = (x * x + y * y + z * z).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::parameter("motion_dir must be a nonzero vector"));
        }
        Ok([x / norm, y / norm, z / norm])
    }

    /// Chest apex: the surface point at the chest-region center. The camera
    /// is aimed here, so it projects onto the principal point.
    pub fn chest_apex(&self) -> [f64; 3] {
        let u = self.chest_region.center_lateral_m / self.half_axis_lateral_m;
        [
            self.half_axis_lateral_m * u.sin(),
            self.half_axis_anterior_m * u.cos(),
            self.chest_region.center_vertical_m,
        ]
    }

    /// Body-frame point -> camera frame (x right, y down, z along the axis).
    pub fn to_camera(&self, p: [f64; 3]) -> [f64; 3] {
        let apex = self.chest_apex();
        [
            p[0] - apex[0],
            -(p[2] - apex[2]),
            (apex[1] + self.camera_distance_m) - p[1],
        ]
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        for (name, v) in [
            ("half_axis_lateral_m", self.half_axis_lateral_m),
            ("half_axis_anterior_m", self.half_axis_anterior_m),
            ("height_m", self.height_m),
            ("amplitude_m", self.amplitude_m),
            ("camera_distance_m", self.camera_distance_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::parameter(format!("scene.{name} must be positive")));
            }
        }
        if self.tess_u < 2 || self.tess_v < 2 {
            return Err(Error::parameter(
                "scene tessellation must be at least 2x2 quads",
            ));
        }
        self.unit_motion_dir()?;
        let mesh = build_torso(self)?;
        let selected = mesh.weights.iter().filter(|w| **w > 0.0).count();
        if selected < 3 {
            return Err(Error::parameter(format!(
                "chest_region selects only {selected} vertices at tessellation {}x{}; need >= 3",
                self.tess_u, self.tess_v
            )));
        }
        Ok(())
    }
}

/// Triangle mesh of the torso patch with per-vertex displacement weights.
#[derive(Debug, Clone)]
pub struct TorsoMesh {
    /// Rest-pose vertex positions in the body frame.
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
    /// Displacement weight per vertex; zero outside the chest region.
    pub weights: Vec<f64>,
    /// Center of gravity of the chest-region vertices.
    pub region_centroid: [f64; 3],
    /// Maximum distance of a region vertex from the centroid.
    pub d_max: f64,
    /// Vertices whose distance exceeded d_max and were clamped to weight 0.
    pub clamped_vertices: usize,
}

/// Quadratic falloff weight `(1 - d/d_max)^2`, clamped to 0 past `d_max`.
pub fn displacement_weight(d: f64, d_max: f64) -> f64 {
    if d_max <= 0.0 {
        // single-point region: all mass at the centroid
        return 1.0;
    }
    if d > d_max {
        return 0.0;
    }
    let r = 1.0 - d / d_max;
    r * r
}

/// Tessellate the torso patch and compute per-vertex chest weights.
pub fn build_torso(scene: &TorsoScene) -> Result<TorsoMesh> {
    if scene.tess_u < 2 || scene.tess_v < 2 {
        return Err(Error::parameter(
            "degenerate tessellation: need at least 2x2 quads",
        ));
    }
    let (nu, nv) = (scene.tess_u, scene.tess_v);
    let (ax, ay, h) = (
        scene.half_axis_lateral_m,
        scene.half_axis_anterior_m,
        scene.height_m,
    );
    let region = &scene.chest_region;

    let mut vertices = Vec::with_capacity((nu + 1) * (nv + 1));
    let mut in_region = Vec::with_capacity(vertices.capacity());
    for j in 0..=nv {
        let v = -h / 2.0 + h * j as f64 / nv as f64;
        for i in 0..=nu {
            let u = -std::f64::consts::FRAC_PI_2
                + std::f64::consts::PI * i as f64 / nu as f64;
            vertices.push([ax * u.sin(), ay * u.cos(), v]);
            let du = (ax * u - region.center_lateral_m) / region.radius_lateral_m;
            let dv = (v - region.center_vertical_m) / region.radius_vertical_m;
            in_region.push(du * du + dv * dv <= 1.0);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nu * nv);
    let stride = (nu + 1) as u32;
    for j in 0..nv as u32 {
        for i in 0..nu as u32 {
            let p = j * stride + i;
            triangles.push([p, p + 1, p + stride]);
            triangles.push([p + 1, p + stride + 1, p + stride]);
        }
    }

    let region_count = in_region.iter().filter(|b| **b).count();
    if region_count == 0 {
        return Err(Error::parameter(
            "chest_region selects no vertices at this tessellation",
        ));
    }
    let mut centroid = [0.0; 3];
    for (v, sel) in vertices.iter().zip(&in_region) {
        if *sel {
            for k in 0..3 {
                centroid[k] += v[k];
            }
        }
    }
    for c in centroid.iter_mut() {
        *c /= region_count as f64;
    }

    let dist = |p: &[f64; 3]| -> f64 {
        let dx = p[0] - centroid[0];
        let dy = p[1] - centroid[1];
        let dz = p[2] - centroid[2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    };
    let d_max = vertices
        .iter()
        .zip(&in_region)
        .filter(|(_, sel)| **sel)
        .map(|(v, _)| dist(v))
        .fold(0.0, f64::max);

    let mut clamped = 0;
    let weights = vertices
        .iter()
        .zip(&in_region)
        .map(|(v, sel)| {
            if !*sel {
                return 0.0;
            }
            let d = dist(v);
            if d > d_max {
                clamped += 1;
            }
            displacement_weight(d, d_max)
        })
        .collect();

    Ok(TorsoMesh {
        vertices,
        triangles,
        weights,
        region_centroid: centroid,
        d_max,
        clamped_vertices: clamped,
    })
}

/// One rendered depth frame: row-major depths in meters along the optical
/// axis, background encoded as the backdrop-plane depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DepthFrame {
    pub fn new(width: usize, height: usize, fill: f32) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::data(format!(
                "frame data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }
}

/// A sequence of equally sized depth frames at a fixed frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthVideo {
    pub frames: Vec<DepthFrame>,
    pub frame_rate_hz: f64,
}

impl DepthVideo {
    pub fn new(frames: Vec<DepthFrame>, frame_rate_hz: f64) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::parameter("video must contain at least one frame"));
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(Error::parameter("frame_rate_hz must be positive"));
        }
        let (w, h) = (frames[0].width(), frames[0].height());
        if frames.iter().any(|f| f.width() != w || f.height() != h) {
            return Err(Error::parameter("all frames must share dimensions"));
        }
        Ok(Self {
            frames,
            frame_rate_hz,
        })
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }
}

/// Camera-space mesh for one frame of the animation.
pub fn displaced_view(scene: &TorsoScene, mesh: &TorsoMesh, signal_value: f64) -> ViewMesh {
    let dir = scene
        .unit_motion_dir()
        .expect("scene validated before animation");
    let scale = signal_value * scene.amplitude_m;
    let positions = mesh
        .vertices
        .iter()
        .zip(&mesh.weights)
        .map(|(v, w)| {
            let d = scale * w;
            scene.to_camera([v[0] + d * dir[0], v[1] + d * dir[1], v[2] + d * dir[2]])
        })
        .collect();
    ViewMesh {
        positions,
        triangles: mesh.triangles.clone(),
    }
}

/// Render the torso driven by `signal` (one sample per frame) into a depth
/// video at the signal's sample rate.
///
/// Frames are rendered in parallel; the result is bit-identical to
/// sequential rendering because each frame is a pure function of
/// `(scene, signal[t])`.
pub fn animate(scene: &TorsoScene, signal: &RespSignal) -> Result<DepthVideo> {
    scene.validate()?;
    if signal.len() < 2 {
        return Err(Error::parameter(
            "driving signal must provide at least 2 frames",
        ));
    }
    let mesh = build_torso(scene)?;
    let sentinel = scene.sentinel_depth_m() as f32;
    let frames: Vec<DepthFrame> = signal
        .samples()
        .par_iter()
        .map(|&s| {
            let view = displaced_view(scene, &mesh, s);
            render_frame(&view, &scene.intrinsics, sentinel)
        })
        .collect();
    DepthVideo::new(frames, signal.sample_rate_hz())
}

/// Bounding box of the rest-pose torso projection, in full-resolution pixel
/// coordinates `(x0, y0, x1, y1)` inclusive, clamped to the image.
pub fn torso_projection_bbox(scene: &TorsoScene) -> Result<(usize, usize, usize, usize)> {
    let mesh = build_torso(scene)?;
    let intr = &scene.intrinsics;
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in &mesh.vertices {
        let p = scene.to_camera(*v);
        if p[2] <= 0.0 {
            continue;
        }
        let sx = intr.cx() + intr.focal_px * p[0] / p[2];
        let sy = intr.cy() + intr.focal_px * p[1] / p[2];
        x0 = x0.min(sx);
        y0 = y0.min(sy);
        x1 = x1.max(sx);
        y1 = y1.max(sy);
    }
    if !x0.is_finite() {
        return Err(Error::parameter("torso projects entirely behind the camera"));
    }
    let clamp_x = |v: f64| v.max(0.0).min(intr.width_px as f64 - 1.0);
    let clamp_y = |v: f64| v.max(0.0).min(intr.height_px as f64 - 1.0);
    Ok((
        clamp_x(x0.ceil()) as usize,
        clamp_y(y0.ceil()) as usize,
        clamp_x(x1.floor()) as usize,
        clamp_y(y1.floor()) as usize,
    ))
}
