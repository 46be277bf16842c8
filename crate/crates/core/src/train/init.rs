use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::gaussian::{logit, Gaussian3D, GaussianField};

pub const INIT_OPACITY: f64 = 0.1;
/// Scale given to a lone point with no neighbors.
pub const LONE_POINT_SCALE: f64 = 0.01;
const KNN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColoredPoint {
    pub position: [f64; 3],
    pub color: [f32; 3],
}

/// Mean distance from each point to its `k` nearest neighbors (brute force).
pub fn mean_knn_distance(points: &[ColoredPoint], k: usize) -> Vec<f64> {
    let n = points.len();
    let mut out = Vec::with_capacity(n);
    let mut best: Vec<f64> = Vec::with_capacity(k + 1);
    for (i, p) in points.iter().enumerate() {
        best.clear();
        for (j, q) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let d2: f64 = (0..3).map(|c| (p.position[c] - q.position[c]).powi(2)).sum();
            if best.len() < k || d2 < best[best.len() - 1] {
                let at = best.partition_point(|&b| b <= d2);
                best.insert(at, d2);
                best.truncate(k);
            }
        }
        if best.is_empty() {
            out.push(LONE_POINT_SCALE);
        } else {
            out.push(best.iter().map(|d| d.sqrt()).sum::<f64>() / best.len() as f64);
        }
    }
    out
}

/// One isotropic Gaussian per point, jittered by `N(0, jitter²)` per axis.
pub fn init_field(points: &[ColoredPoint], jitter: f64, seed: u64) -> Result<GaussianField> {
    if points.is_empty() {
        return Err(Error::Empty("initialization point set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let normal = Normal::new(0.0, jitter.max(0.0))
        .map_err(|e| Error::InvalidArgument(format!("jitter {jitter}: {e}")))?;
    let scales = mean_knn_distance(points, KNN);
    let opacity = logit(INIT_OPACITY) as f32;
    let gaussians = points
        .iter()
        .zip(scales)
        .map(|(p, s)| {
            let mut mu = [0.0f32; 3];
            for c in 0..3 {
                let offset = if jitter > 0.0 { normal.sample(&mut rng) } else { 0.0 };
                mu[c] = (p.position[c] + offset) as f32;
            }
            let ls = s.max(1e-7).ln() as f32;
            Gaussian3D {
                mu,
                rot: [1.0, 0.0, 0.0, 0.0],
                log_scale: [ls; 3],
                opacity_logit: opacity,
                color: p.color.map(|c| c.clamp(0.0, 1.0)),
            }
        })
        .collect();
    Ok(GaussianField::new(gaussians))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, z: f64) -> ColoredPoint {
        ColoredPoint {
            position: [x, y, z],
            color: [0.5; 3],
        }
    }

    #[test]
    fn single_point() {
        let f = init_field(&[pt(0.0, 0.0, 0.0)], 0.0, 1).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.gaussians[0].mu, [0.0; 3]);
        assert_eq!(f.gaussians[0].rot, [1.0, 0.0, 0.0, 0.0]);
        assert!((f.gaussians[0].opacity() - 0.1).abs() < 1e-6);
        assert!(init_field(&[], 0.0, 1).is_err());
    }

    #[test]
    fn unit_grid_scales_are_zero_log() {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    pts.push(pt(i as f64, j as f64, k as f64));
                }
            }
        }
        let f = init_field(&pts, 0.0, 1).unwrap();
        // every grid point has at least 3 neighbors at distance exactly 1
        for g in &f.gaussians {
            assert_eq!(g.log_scale, [0.0; 3]);
        }
    }

    #[test]
    fn knn_matches_sorting_oracle() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<_> = (0..60)
            .map(|_| pt(rng.random(), rng.random(), rng.random()))
            .collect();
        let got = mean_knn_distance(&pts, 3);
        for (i, p) in pts.iter().enumerate() {
            let mut d: Vec<f64> = pts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| {
                    ((p.position[0] - q.position[0]).powi(2)
                        + (p.position[1] - q.position[1]).powi(2)
                        + (p.position[2] - q.position[2]).powi(2))
                    .sqrt()
                })
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let oracle = (d[0] + d[1] + d[2]) / 3.0;
            assert!((got[i] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn jitter_depends_on_seed_only() {
        let pts = vec![pt(0.0, 0.0, 0.0), pt(1.0, 0.0, 0.0), pt(0.0, 2.0, 0.0)];
        let a = init_field(&pts, 0.01, 3).unwrap();
        let b = init_field(&pts, 0.01, 3).unwrap();
        let c = init_field(&pts, 0.01, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (ga, gc) in a.gaussians.iter().zip(&c.gaussians) {
            assert_eq!(ga.log_scale, gc.log_scale);
            for k in 0..3 {
                assert!((ga.mu[k] - gc.mu[k]).abs() < 0.1);
            }
        }
    }
}
