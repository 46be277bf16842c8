#![allow(dead_code)]

pub mod plane;

use cvgs::gaussian::{logit, Gaussian3D};
use cvgs::geometry::{Camera, RigidTransform};
use nalgebra::{Quaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small camera looking down +z with a slight random tilt.
pub fn small_camera(rng: &mut ChaCha8Rng, size: u32) -> Camera {
    let q = Quaternion::new(
        1.0,
        rng.random_range(-0.05..0.05),
        rng.random_range(-0.05..0.05),
        rng.random_range(-0.05..0.05),
    );
    let t = Vector3::new(
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
        rng.random_range(-0.1..0.1),
    );
    let f = size as f64;
    let c = (size as f64 - 1.0) / 2.0;
    Camera::new(f, f, c, c, size, size, RigidTransform::new(q, t)).unwrap()
}

/// Gaussians in front of [`small_camera`], sized a few pixels across.
pub fn random_gaussians(rng: &mut ChaCha8Rng, n: usize) -> Vec<Gaussian3D<f64>> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(3.0..5.0);
            Gaussian3D {
                mu: [
                    rng.random_range(-0.3..0.3) * z,
                    rng.random_range(-0.3..0.3) * z,
                    z,
                ],
                rot: [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ],
                log_scale: [
                    rng.random_range(-1.6f64..-0.6),
                    rng.random_range(-1.6f64..-0.6),
                    rng.random_range(-1.6f64..-0.6),
                ],
                opacity_logit: logit(rng.random_range(0.1..0.7)),
                color: [
                    rng.random_range(0.05..0.95),
                    rng.random_range(0.05..0.95),
                    rng.random_range(0.05..0.95),
                ],
            }
        })
        .collect()
}

pub fn random_buffer(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `‖a - b‖ / max(‖b‖, floor)`.
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(floor)
}

pub const GROUPS: [(&str, std::ops::Range<usize>); 5] = [
    ("mu", 0..3),
    ("rot", 3..7),
    ("log_scale", 7..10),
    ("opacity_logit", 10..11),
    ("color", 11..14),
];

/// Central finite differences of `f` over every parameter of every Gaussian.
pub fn finite_difference(
    gaussians: &[Gaussian3D<f64>],
    h: f64,
    f: impl Fn(&[Gaussian3D<f64>]) -> f64,
) -> Vec<[f64; 14]> {
    let mut work = gaussians.to_vec();
    let mut out = vec![[0.0; 14]; gaussians.len()];
    for i in 0..gaussians.len() {
        for p in 0..14 {
            let base = gaussians[i].to_array();
            let mut plus = base;
            plus[p] += h;
            work[i] = Gaussian3D::from_array(&plus);
            let fp = f(&work);
            let mut minus = base;
            minus[p] -= h;
            work[i] = Gaussian3D::from_array(&minus);
            let fm = f(&work);
            work[i] = gaussians[i];
            out[i][p] = (fp - fm) / (2.0 * h);
        }
    }
    out
}

/// Per-group relative error between analytic and finite-difference gradients.
pub fn group_errors(analytic: &[[f64; 14]], fd: &[[f64; 14]]) -> Vec<(&'static str, f64)> {
    GROUPS
        .iter()
        .map(|(name, range)| {
            let a: Vec<f64> = analytic.iter().flat_map(|g| g[range.clone()].to_vec()).collect();
            let b: Vec<f64> = fd.iter().flat_map(|g| g[range.clone()].to_vec()).collect();
            (*name, rel_err(&a, &b, 1e-9))
        })
        .collect()
}
