//! Brute-force renderer: every pixel sorts every visible splat and composites
//! all of them in `f64`, with no tiling, no skip threshold and no early
//! termination. Used as an oracle for the tiled rasterizer.

use crate::gaussian::{project_gaussian, CameraParams, Gaussian3D};
use crate::geometry::Camera;
use crate::real::Real;

pub struct ReferenceImage {
    pub width: usize,
    pub height: usize,
    pub color: Vec<f64>,
    pub alpha: Vec<f64>,
}

pub fn render_reference<T: Real>(
    gaussians: &[Gaussian3D<T>],
    camera: &Camera,
    background: [f64; 3],
    alpha_clamp: f64,
) -> ReferenceImage {
    let params = CameraParams::<f64>::new(camera);
    let splats: Vec<_> = gaussians
        .iter()
        .map(|g| project_gaussian(&params, &g.cast::<f64>()).map(|p| p.splat))
        .collect();
    let (w, h) = (camera.width as usize, camera.height as usize);
    let mut color = vec![0.0; w * h * 3];
    let mut alpha = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut hits: Vec<(f64, usize, f64, [f64; 3])> = Vec::new();
            for (i, s) in splats.iter().enumerate() {
                let Some(s) = s else { continue };
                let dx = x as f64 - s.mean2d[0];
                let dy = y as f64 - s.mean2d[1];
                let power = -0.5 * (s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy + s.conic[2] * dy * dy);
                let a = (s.opacity * power.exp()).min(alpha_clamp);
                hits.push((s.depth, i, a, s.color));
            }
            hits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut t = 1.0;
            let mut c = [0.0; 3];
            for (_, _, a, col) in hits {
                for k in 0..3 {
                    c[k] += col[k] * a * t;
                }
                t *= 1.0 - a;
            }
            let p = y * w + x;
            for k in 0..3 {
                color[p * 3 + k] = c[k] + t * background[k];
            }
            alpha[p] = 1.0 - t;
        }
    }
    ReferenceImage {
        width: w,
        height: h,
        color,
        alpha,
    }
}
