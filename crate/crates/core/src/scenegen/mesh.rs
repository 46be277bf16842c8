use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SceneSpec;

/// Surface material; albedo is a function of the world position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Material {
    Ground,
    Facade { base: [f32; 3] },
    Roof { base: [f32; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub v: [Vector3<f64>; 3],
    pub material: Material,
}

impl Triangle {
    pub fn normal(&self) -> Vector3<f64> {
        (self.v[1] - self.v[0]).cross(&(self.v[2] - self.v[0])).normalize()
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.v[1] - self.v[0]).cross(&(self.v[2] - self.v[0])).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Building {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
    pub color: [f32; 3],
}

/// Triangle mesh plus the texture parameters it is shaded with.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub triangles: Vec<Triangle>,
    pub buildings: Vec<Building>,
    pub road_half_width: f64,
    pub texture_cell: f64,
    pub dash_period: f64,
    pub crosswalks: Vec<f64>,
    pub noise_seed: u64,
    /// Ground plane bounds `(x_min, x_max, z_min, z_max)`.
    pub ground_bounds: [f64; 4],
}

const GROUND_TILE: f64 = 2.0;
const SIDEWALK: f64 = 3.0;
const LIGHT: [f64; 3] = [0.35, 0.85, -0.4];

fn hash(seed: u64, i: i64, j: i64) -> f32 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [i as u64, j as u64] {
        h ^= v.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 31)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 29;
    }
    (h >> 40) as f32 / (1u64 << 24) as f32
}

/// Bilinear value noise in `[0, 1)`.
pub fn value_noise(seed: u64, u: f64, v: f64) -> f32 {
    let (fu, fv) = (u.floor(), v.floor());
    let (i, j) = (fu as i64, fv as i64);
    let (du, dv) = ((u - fu) as f32, (v - fv) as f32);
    let a = hash(seed, i, j);
    let b = hash(seed, i + 1, j);
    let c = hash(seed, i, j + 1);
    let d = hash(seed, i + 1, j + 1);
    let top = a + (b - a) * du;
    let bottom = c + (d - c) * du;
    top + (bottom - top) * dv
}

fn mix(a: [f32; 3], b: [f32; 3], t: f32) -> [f32; 3] {
    std::array::from_fn(|i| a[i] + (b[i] - a[i]) * t)
}

impl Mesh {
    fn ground_albedo(&self, p: &Vector3<f64>) -> [f32; 3] {
        let (x, z) = (p.x, p.z);
        let n = value_noise(self.noise_seed, x / self.texture_cell, z / self.texture_cell);
        let hw = self.road_half_width;
        if x.abs() <= hw {
            let asphalt = [0.22 + 0.12 * n, 0.22 + 0.12 * n, 0.24 + 0.12 * n];
            let white = [0.92, 0.92, 0.9];
            // crosswalk bands across the road
            for &c in &self.crosswalks {
                if (z - c).abs() < 1.5 && (x + hw).rem_euclid(0.9) < 0.45 {
                    return mix(white, asphalt, 0.15 * n);
                }
            }
            // edge lines
            if (hw - x.abs()) < 0.35 && (hw - x.abs()) > 0.2 {
                return white;
            }
            // dashed center line
            if x.abs() < 0.08 && z.rem_euclid(self.dash_period) < 0.5 * self.dash_period {
                return [0.95, 0.8, 0.2];
            }
            asphalt
        } else if x.abs() <= hw + SIDEWALK {
            // paving tiles
            let gap = (x.rem_euclid(0.6) < 0.05) || (z.rem_euclid(0.6) < 0.05);
            let base = [0.62 + 0.1 * n, 0.58 + 0.1 * n, 0.52 + 0.1 * n];
            if gap {
                mix(base, [0.3, 0.3, 0.3], 0.6)
            } else {
                base
            }
        } else {
            let n2 = value_noise(self.noise_seed ^ 7, x / (4.0 * self.texture_cell), z / (4.0 * self.texture_cell));
            [0.25 + 0.15 * n2, 0.45 + 0.2 * n, 0.2 + 0.1 * n2]
        }
    }

    /// Unshaded surface color of `tri` at world point `p`.
    pub fn albedo(&self, tri: &Triangle, p: &Vector3<f64>) -> [f32; 3] {
        match tri.material {
            Material::Ground => self.ground_albedo(p),
            Material::Roof { base } => {
                let n = value_noise(self.noise_seed ^ 3, p.x / 0.5, p.z / 0.5);
                base.map(|c| c * (0.85 + 0.3 * n))
            }
            Material::Facade { base } => {
                let u = p.x + p.z;
                let window = u.rem_euclid(2.0) > 0.5 && u.rem_euclid(2.0) < 1.5;
                let floor = p.y.rem_euclid(3.0) > 1.0 && p.y.rem_euclid(3.0) < 2.2 && p.y > 0.8;
                if window && floor {
                    [0.15, 0.2, 0.3]
                } else {
                    let n = value_noise(self.noise_seed ^ 5, u / 0.4, p.y / 0.4);
                    base.map(|c| c * (0.9 + 0.2 * n))
                }
            }
        }
    }

    /// Flat Lambert factor, constant per triangle.
    pub fn shade(tri: &Triangle) -> f32 {
        let l = Vector3::from(LIGHT).normalize();
        (0.35 + 0.65 * tri.normal().dot(&l).abs()) as f32
    }

    pub fn shaded_color(&self, tri: &Triangle, p: &Vector3<f64>) -> [f32; 3] {
        let s = Self::shade(tri);
        self.albedo(tri, p).map(|c| (c * s).clamp(0.0, 1.0))
    }

    pub fn is_road(&self, p: &Vector3<f64>) -> bool {
        p.y.abs() < 1e-9 && p.x.abs() <= self.road_half_width
    }
}

fn push_quad(tris: &mut Vec<Triangle>, q: [Vector3<f64>; 4], material: Material) {
    tris.push(Triangle {
        v: [q[0], q[1], q[2]],
        material,
    });
    tris.push(Triangle {
        v: [q[0], q[2], q[3]],
        material,
    });
}

fn push_box(tris: &mut Vec<Triangle>, b: &Building) {
    let (lo, hi) = (b.min, b.max);
    let p = |x: f64, y: f64, z: f64| Vector3::new(x, y, z);
    let facade = Material::Facade { base: b.color };
    let roof = Material::Roof {
        base: b.color.map(|c| c * 0.6),
    };
    push_quad(tris, [p(lo.x, lo.y, lo.z), p(hi.x, lo.y, lo.z), p(hi.x, hi.y, lo.z), p(lo.x, hi.y, lo.z)], facade);
    push_quad(tris, [p(lo.x, lo.y, hi.z), p(lo.x, hi.y, hi.z), p(hi.x, hi.y, hi.z), p(hi.x, lo.y, hi.z)], facade);
    push_quad(tris, [p(lo.x, lo.y, lo.z), p(lo.x, hi.y, lo.z), p(lo.x, hi.y, hi.z), p(lo.x, lo.y, hi.z)], facade);
    push_quad(tris, [p(hi.x, lo.y, lo.z), p(hi.x, lo.y, hi.z), p(hi.x, hi.y, hi.z), p(hi.x, hi.y, lo.z)], facade);
    push_quad(tris, [p(lo.x, hi.y, lo.z), p(hi.x, hi.y, lo.z), p(hi.x, hi.y, hi.z), p(lo.x, hi.y, hi.z)], roof);
}

/// Ground plane tiles, crosswalks and buildings along both road sides.
pub fn build_mesh(spec: &SceneSpec) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let hw = spec.road_width / 2.0;
    let bounds = [-30.0, 30.0, -20.0, spec.road_length + 40.0];
    let mut tris = Vec::new();
    let nx = ((bounds[1] - bounds[0]) / GROUND_TILE).ceil() as usize;
    let nz = ((bounds[3] - bounds[2]) / GROUND_TILE).ceil() as usize;
    for i in 0..nx {
        for j in 0..nz {
            let x0 = bounds[0] + i as f64 * GROUND_TILE;
            let z0 = bounds[2] + j as f64 * GROUND_TILE;
            let x1 = (x0 + GROUND_TILE).min(bounds[1]);
            let z1 = (z0 + GROUND_TILE).min(bounds[3]);
            push_quad(
                &mut tris,
                [
                    Vector3::new(x0, 0.0, z0),
                    Vector3::new(x0, 0.0, z1),
                    Vector3::new(x1, 0.0, z1),
                    Vector3::new(x1, 0.0, z0),
                ],
                Material::Ground,
            );
        }
    }
    let crosswalks = vec![spec.road_length * 0.3, spec.road_length * 0.75];

    let mut buildings = Vec::new();
    let span = (spec.road_length + 30.0) / (spec.building_count.div_ceil(2).max(1)) as f64;
    for k in 0..spec.building_count {
        let side = if k % 2 == 0 { -1.0 } else { 1.0 };
        let slot = (k / 2) as f64;
        let length = rng.random_range(0.55..0.9) * span;
        let z0 = -5.0 + slot * span + rng.random_range(0.0..(span - length).max(1e-6));
        let depth = rng.random_range(5.0..9.0);
        let setback = hw + SIDEWALK + rng.random_range(0.3..1.5);
        let h = rng.random_range(spec.building_height_min..=spec.building_height_max);
        let (xa, xb) = if side < 0.0 {
            (-setback - depth, -setback)
        } else {
            (setback, setback + depth)
        };
        let color = [
            rng.random_range(0.4..0.85f32),
            rng.random_range(0.35..0.75f32),
            rng.random_range(0.3..0.7f32),
        ];
        let b = Building {
            min: Vector3::new(xa, 0.0, z0),
            max: Vector3::new(xb, h, z0 + length),
            color,
        };
        push_box(&mut tris, &b);
        buildings.push(b);
    }
    Mesh {
        triangles: tris,
        buildings,
        road_half_width: hw,
        texture_cell: spec.texture_cell,
        dash_period: spec.dash_period,
        crosswalks,
        noise_seed: spec.seed,
        ground_bounds: bounds,
    }
}

/// Möller–Trumbore; returns the ray parameter of the hit.
pub fn ray_triangle(origin: &Vector3<f64>, dir: &Vector3<f64>, tri: &Triangle) -> Option<f64> {
    let e1 = tri.v[1] - tri.v[0];
    let e2 = tri.v[2] - tri.v[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri.v[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > 0.0).then_some(t)
}

/// Nearest hit over all triangles: `(t, triangle index)`.
pub fn ray_cast(mesh: &Mesh, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, tri) in mesh.triangles.iter().enumerate() {
        if let Some(t) = ray_triangle(origin, dir, tri) {
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, i));
            }
        }
    }
    best
}
