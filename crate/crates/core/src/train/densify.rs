use crate::gaussian::{clamped_scale, quat_to_matrix, sigmoid, Gaussian3D, GaussianField};

use super::TrainConfig;

pub const SPLIT_SCALE_DIVISOR: f64 = 1.6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DensifyReport {
    pub cloned: usize,
    pub split: usize,
    pub pruned: usize,
}

/// Two children of `g`, shrunk by 1.6 and placed at ±0.5σ along the major axis.
pub fn split_gaussian(g: &Gaussian3D<f32>) -> [Gaussian3D<f32>; 2] {
    let s = g.log_scale.map(clamped_scale::<f32>);
    let major = (0..3)
        .max_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap().then(b.cmp(&a)))
        .unwrap_or(0);
    let r = quat_to_matrix(crate::gaussian::normalize_quat(g.rot));
    let offset: [f32; 3] = std::array::from_fn(|i| 0.5 * s[major] * r[i][major]);
    let shrink = (SPLIT_SCALE_DIVISOR as f32).ln();
    let mut a = *g;
    let mut b = *g;
    for i in 0..3 {
        a.mu[i] += offset[i];
        b.mu[i] -= offset[i];
        a.log_scale[i] -= shrink;
        b.log_scale[i] -= shrink;
    }
    [a, b]
}

/// Adaptive density control. Returns, for each output Gaussian, the index of
/// the input Gaussian whose optimizer state it inherits (`None` for new ones).
pub fn densify_and_prune(
    field: &mut GaussianField,
    config: &TrainConfig,
    scene_extent: f64,
) -> (DensifyReport, Vec<Option<usize>>) {
    let n = field.len();
    let threshold = config.densify_grad_threshold as f32;
    let split_bound = (config.percent_dense * scene_extent) as f32;
    let mut candidates: Vec<(f32, usize)> = (0..n)
        .filter_map(|i| {
            let c = field.grad_count.get(i).copied().unwrap_or(0);
            if c == 0 {
                return None;
            }
            let avg = field.grad_accum[i] / c as f32;
            (avg >= threshold).then_some((avg, i))
        })
        .collect();
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    #[derive(Clone, Copy, PartialEq)]
    enum Action {
        Keep,
        Clone,
        Split,
    }
    let mut actions = vec![Action::Keep; n];
    let mut size = n;
    for &(_, i) in &candidates {
        if size >= config.max_gaussians {
            break;
        }
        let max_scale = field.gaussians[i]
            .log_scale
            .iter()
            .map(|&l| clamped_scale(l))
            .fold(0.0f32, f32::max);
        actions[i] = if max_scale > split_bound {
            Action::Split
        } else {
            Action::Clone
        };
        size += 1;
    }

    let mut report = DensifyReport::default();
    let mut out: Vec<(Gaussian3D<f32>, Option<usize>)> = Vec::with_capacity(size);
    let mut clones = Vec::new();
    for (i, g) in field.gaussians.iter().enumerate() {
        match actions[i] {
            Action::Keep => out.push((*g, Some(i))),
            Action::Clone => {
                report.cloned += 1;
                out.push((*g, Some(i)));
                clones.push((*g, None));
            }
            Action::Split => {
                report.split += 1;
                for child in split_gaussian(g) {
                    out.push((child, None));
                }
            }
        }
    }
    out.extend(clones);
    let prune = config.prune_opacity as f32;
    let before = out.len();
    out.retain(|(g, _)| sigmoid(g.opacity_logit) >= prune);
    report.pruned = before - out.len();

    let (gaussians, origins): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    field.gaussians = gaussians;
    field.reset_stats();
    (report, origins)
}
