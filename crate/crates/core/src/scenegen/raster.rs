use nalgebra::{Vector2, Vector3};

use super::mesh::Mesh;
use crate::geometry::Camera;
use crate::image::{Image, ScalarMap};

/// Near clipping distance of the ground-truth rasterizer (m).
pub const MESH_NEAR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub image: Image,
    /// Camera-space z of the surface through each pixel center, NaN for sky.
    pub depth: ScalarMap,
}

fn clip_near(poly: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(4);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ina, inb) = (a.z >= MESH_NEAR, b.z >= MESH_NEAR);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (MESH_NEAR - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * t;
            p.z = MESH_NEAR;
            out.push(p);
        }
    }
    out
}

/// Z-buffered triangle rasterization on an `ss × ss` sample grid per pixel.
///
/// Colors are box-filtered over the samples; depth comes from the sample at
/// the pixel center (present for odd `ss`, otherwise the nearest sample).
pub fn render_mesh(mesh: &Mesh, cam: &Camera, sky: [f32; 3], ss: usize) -> GroundTruth {
    let (w, h) = (cam.width as usize, cam.height as usize);
    let (sw, sh) = (w * ss, h * ss);
    let mut zbuf = vec![f64::INFINITY; sw * sh];
    let mut ids = vec![u32::MAX; sw * sh];
    let ssf = ss as f64;
    // sample (i, j) sits at pixel coordinate ((i + 0.5) / ss - 0.5, …)
    let to_sample = |p: f64| (p + 0.5) * ssf - 0.5;
    let to_pixel = |s: f64| (s + 0.5) / ssf - 0.5;

    for (tid, tri) in mesh.triangles.iter().enumerate() {
        let cam_pts: Vec<Vector3<f64>> = tri.v.iter().map(|v| cam.to_camera(v)).collect();
        if cam_pts.iter().all(|p| p.z < MESH_NEAR) {
            continue;
        }
        let poly = clip_near(&cam_pts);
        if poly.len() < 3 {
            continue;
        }
        let screen: Vec<(Vector2<f64>, f64)> = poly
            .iter()
            .map(|p| {
                // clipped vertices sit exactly on the near plane, so project by hand
                let px = Vector2::new(cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy);
                (px, p.z)
            })
            .collect();
        for k in 1..screen.len() - 1 {
            let (a, za) = screen[0];
            let (b, zb) = screen[k];
            let (c, zc) = screen[k + 1];
            let area = (b - a).perp(&(c - a));
            if area.abs() < 1e-12 {
                continue;
            }
            let minx = a.x.min(b.x).min(c.x);
            let maxx = a.x.max(b.x).max(c.x);
            let miny = a.y.min(b.y).min(c.y);
            let maxy = a.y.max(b.y).max(c.y);
            let sx0 = to_sample(minx).ceil().max(0.0);
            let sx1 = to_sample(maxx).floor().min(sw as f64 - 1.0);
            let sy0 = to_sample(miny).ceil().max(0.0);
            let sy1 = to_sample(maxy).floor().min(sh as f64 - 1.0);
            if sx0 > sx1 || sy0 > sy1 {
                continue;
            }
            let inv_area = 1.0 / area;
            for sy in sy0 as usize..=sy1 as usize {
                let py = to_pixel(sy as f64);
                for sx in sx0 as usize..=sx1 as usize {
                    let p = Vector2::new(to_pixel(sx as f64), py);
                    let l0 = (b - p).perp(&(c - p)) * inv_area;
                    let l1 = (c - p).perp(&(a - p)) * inv_area;
                    let l2 = 1.0 - l0 - l1;
                    if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                        continue;
                    }
                    let z = 1.0 / (l0 / za + l1 / zb + l2 / zc);
                    let idx = sy * sw + sx;
                    if z < zbuf[idx] {
                        zbuf[idx] = z;
                        ids[idx] = tid as u32;
                    }
                }
            }
        }
    }

    let mut image = Image::new(w, h);
    let mut depth = ScalarMap::new(w, h, f32::NAN);
    let center = ss / 2;
    let inv = 1.0 / (ss * ss) as f32;
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f32; 3];
            for j in 0..ss {
                for i in 0..ss {
                    let idx = (y * ss + j) * sw + x * ss + i;
                    let c = match ids[idx] {
                        u32::MAX => sky,
                        t => {
                            let tri = &mesh.triangles[t as usize];
                            let px = Vector2::new(to_pixel((x * ss + i) as f64), to_pixel((y * ss + j) as f64));
                            match cam.unproject_pixel(&px, zbuf[idx]) {
                                Ok(world) => mesh.shaded_color(tri, &world),
                                Err(_) => sky,
                            }
                        }
                    };
                    for k in 0..3 {
                        acc[k] += c[k];
                    }
                }
            }
            image.set_pixel(x, y, acc.map(|v| v * inv));
            let cidx = (y * ss + center) * sw + x * ss + center;
            if ids[cidx] != u32::MAX {
                depth.set(x, y, zbuf[cidx] as f32);
            }
        }
    }
    GroundTruth { image, depth }
}
