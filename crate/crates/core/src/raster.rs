//! Perspective z-buffer rasterizer producing per-pixel depth.
//!
//! No sampling, no anti-aliasing: pixel (x, y) is tested at the point
//! (x, y) in image coordinates, the nearest surface wins, and everything is
//! plain f64 arithmetic, so output is deterministic.

use crate::scene::{CameraIntrinsics, DepthFrame};

/// Mesh in camera coordinates (x right, y down, z along the optical axis).
#[derive(Debug, Clone)]
pub struct ViewMesh {
    pub positions: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

/// Depth of the near clip plane; geometry closer than this is dropped.
const NEAR_M: f64 = 0.05;

#[inline]
fn edge(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Rasterize `mesh` through the pinhole `intrinsics`. Pixels not covered by
/// any triangle keep the `sentinel` depth.
pub fn render_frame(mesh: &ViewMesh, intrinsics: &CameraIntrinsics, sentinel: f32) -> DepthFrame {
    let (w, h) = (intrinsics.width_px, intrinsics.height_px);
    let (cx, cy, f) = (intrinsics.cx(), intrinsics.cy(), intrinsics.focal_px);
    let mut frame = DepthFrame::new(w, h, sentinel);

    // project once
    let projected: Vec<Option<(f64, f64, f64)>> = mesh
        .positions
        .iter()
        .map(|p| {
            if p[2] <= NEAR_M {
                None
            } else {
                Some((cx + f * p[0] / p[2], cy + f * p[1] / p[2], p[2]))
            }
        })
        .collect();

    for tri in &mesh.triangles {
        let (Some(a), Some(b), Some(c)) = (
            projected[tri[0] as usize],
            projected[tri[1] as usize],
            projected[tri[2] as usize],
        ) else {
            continue;
        };

        let area2 = edge(a.0, a.1, b.0, b.1, c.0, c.1);
        if area2.abs() < 1e-12 {
            continue;
        }
        // orient so that inside tests are all >= 0
        let (b, c) = if area2 < 0.0 { (c, b) } else { (b, c) };
        let area2 = area2.abs();

        let min_x = a.0.min(b.0).min(c.0).floor().max(0.0) as usize;
        let max_x = a.0.max(b.0).max(c.0).ceil().min(w as f64 - 1.0) as usize;
        let min_y = a.1.min(b.1).min(c.1).floor().max(0.0) as usize;
        let max_y = a.1.max(b.1).max(c.1).ceil().min(h as f64 - 1.0) as usize;
        if min_x > max_x || min_y > max_y {
            continue;
        }

        let inv_z = (1.0 / a.2, 1.0 / b.2, 1.0 / c.2);
        for py in min_y..=max_y {
            let fy = py as f64;
            for px in min_x..=max_x {
                let fx = px as f64;
                let e0 = edge(b.0, b.1, c.0, c.1, fx, fy);
                let e1 = edge(c.0, c.1, a.0, a.1, fx, fy);
                let e2 = edge(a.0, a.1, b.0, b.1, fx, fy);
                if e0 < 0.0 || e1 < 0.0 || e2 < 0.0 {
                    continue;
                }
                // perspective-correct depth from screen barycentrics
                let z = area2 / (e0 * inv_z.0 + e1 * inv_z.1 + e2 * inv_z.2);
                let z32 = z as f32;
                if z32 < frame.get(px, py) {
                    frame.set(px, py, z32);
                }
            }
        }
    }
    frame
}
