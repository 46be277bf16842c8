//! Plane-only scene and the closed-form homography oracles.

use std::collections::HashMap;

use cvgs::geometry::Camera;
use cvgs::scenegen::{generate, SceneBundle, SceneSpec, Split};
use cvgs::uncertainty::{project_uncertainty, reproject, UncertaintyMap, TAU_OCC};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn plane_scene() -> SceneBundle {
    generate(&SceneSpec {
        building_count: 0,
        width: 120,
        height: 60,
        supersample: 1,
        ground_train: 6,
        aerial_train: 4,
        held_out: 2,
        init_points: 100,
        ..SceneSpec::default()
    })
    .unwrap()
}

fn intrinsics(c: &Camera) -> Matrix3<f64> {
    Matrix3::new(c.fx, 0.0, c.cx, 0.0, c.fy, c.cy, 0.0, 0.0, 1.0)
}

/// Homography induced by the world plane y = 0 from camera `g` to camera `a`.
pub fn plane_homography(g: &Camera, a: &Camera) -> Matrix3<f64> {
    let (rg, tg) = (g.pose.rotation_matrix(), *g.pose.translation());
    let (ra, ta) = (a.pose.rotation_matrix(), *a.pose.translation());
    let r = ra * rg.transpose();
    let t = ta - r * tg;
    let n = rg * Vector3::y();
    let d = n.dot(&tg);
    intrinsics(a) * (r + t * n.transpose() / d) * intrinsics(g).try_inverse().unwrap()
}

pub fn apply(h: &Matrix3<f64>, x: f64, y: f64) -> (f64, f64) {
    let p = h * Vector3::new(x, y, 1.0);
    (p.x / p.z, p.y / p.z)
}

pub struct ReprojectionStats {
    pub total: usize,
    pub within: usize,
    pub worst: f64,
}

impl ReprojectionStats {
    pub fn fraction(&self) -> f64 {
        self.within as f64 / self.total.max(1) as f64
    }
}

/// Compares every ground→aerial reprojection against the homography.
pub fn reprojection_stats(b: &SceneBundle, tol_px: f64) -> ReprojectionStats {
    let ground = b.split(Split::GroundTrain);
    let aerial = b.cameras(Split::AerialTrain);
    let mut s = ReprojectionStats { total: 0, within: 0, worst: 0.0 };
    for g in &ground {
        for a in &aerial {
            let h = plane_homography(&g.camera, a);
            for y in 0..g.depth.height {
                for x in 0..g.depth.width {
                    let d = g.depth.get(x, y);
                    if !d.is_finite() {
                        continue;
                    }
                    let Some(p) = reproject(&g.camera, x, y, d as f64, a).unwrap() else {
                        continue;
                    };
                    let (hx, hy) = apply(&h, x as f64, y as f64);
                    let err = (p.pixel.x - hx).hypot(p.pixel.y - hy);
                    s.worst = s.worst.max(err);
                    s.total += 1;
                    if err <= tol_px {
                        s.within += 1;
                    }
                }
            }
        }
    }
    s
}

/// Per aerial view: `(considered, agreeing)` pixels between
/// `project_uncertainty` and a brute-force homography accumulation of random
/// ground maps. Also checks that supplying the true aerial depth changes nothing.
pub fn accumulation_agreement(b: &SceneBundle, seed: u64) -> Vec<(usize, usize)> {
    let ground = b.split(Split::GroundTrain);
    let cams: Vec<Camera> = ground.iter().map(|v| v.camera).collect();
    let depths: Vec<_> = ground.iter().map(|v| v.depth.clone()).collect();
    let aerial = b.cameras(Split::AerialTrain);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps: Vec<UncertaintyMap> = ground
        .iter()
        .map(|v| {
            let n = v.depth.data.len();
            UncertaintyMap {
                width: v.depth.width,
                height: v.depth.height,
                values: (0..n).map(|_| rng.random_range(0.0..2.0)).collect(),
                valid: vec![true; n],
            }
        })
        .collect();
    let got = project_uncertainty(&maps, &cams, &depths, &aerial, None, TAU_OCC).unwrap();

    // with the true aerial depth nothing on a plane is occluded
    let aerial_depths: Vec<_> = b.split(Split::AerialTrain).iter().map(|v| v.depth.clone()).collect();
    let occl = project_uncertainty(&maps, &cams, &depths, &aerial, Some(&aerial_depths), TAU_OCC).unwrap();
    assert_eq!(got, occl);

    let mut out = Vec::new();
    for (k, a) in aerial.iter().enumerate() {
        let (w, h) = (a.width as usize, a.height as usize);
        let mut acc: HashMap<usize, Vec<f32>> = HashMap::new();
        for (gi, g) in ground.iter().enumerate() {
            let hm = plane_homography(&g.camera, a);
            for y in 0..g.depth.height {
                for x in 0..g.depth.width {
                    if !g.depth.get(x, y).is_finite() {
                        continue;
                    }
                    let (hx, hy) = apply(&hm, x as f64, y as f64);
                    let (rx, ry) = (hx.round(), hy.round());
                    if rx < 0.0 || ry < 0.0 || rx >= w as f64 || ry >= h as f64 {
                        continue;
                    }
                    acc.entry(ry as usize * w + rx as usize)
                        .or_default()
                        .push(maps[gi].values[y * g.depth.width + x]);
                }
            }
        }
        let (mut agree, mut considered) = (0usize, 0usize);
        for j in 0..w * h {
            let expect = acc.get(&j).map(|v| v.iter().map(|&u| u as f64).sum::<f64>() / v.len() as f64);
            let m = &got[k];
            if expect.is_none() && !m.valid[j] {
                continue;
            }
            considered += 1;
            if let Some(e) = expect {
                if m.valid[j] && (m.values[j] as f64 - e).abs() <= 1e-5 * e.max(1.0) {
                    agree += 1;
                }
            }
        }
        out.push((considered, agree));
    }
    out
}
