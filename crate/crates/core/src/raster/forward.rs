use rayon::prelude::*;

use super::{RasterSettings, TileBins, DEPTH_ALPHA_MIN};
use crate::gaussian::{project_gaussian, CameraParams, Gaussian3D, ProjectedGaussian};
use crate::geometry::Camera;
use crate::image::{Image, ScalarMap};
use crate::real::Real;

/// Result of a forward render, including the state the backward pass replays.
#[derive(Debug, Clone)]
pub struct RenderOutput<T = f32> {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB.
    pub color: Vec<T>,
    pub alpha: Vec<T>,
    /// Expected depth, NaN where alpha is at most [`DEPTH_ALPHA_MIN`].
    pub depth: Vec<T>,
    pub(crate) projected: Vec<Option<ProjectedGaussian<T>>>,
    pub(crate) bins: TileBins,
    pub(crate) camera: Camera,
    pub(crate) background: [T; 3],
    pub(crate) settings: RasterSettings,
}

impl<T: Real> RenderOutput<T> {
    pub fn gaussian_count(&self) -> usize {
        self.projected.len()
    }

    pub fn visible_count(&self) -> usize {
        self.projected.iter().filter(|p| p.is_some()).count()
    }

    pub fn settings(&self) -> &RasterSettings {
        &self.settings
    }

    /// Number of splats binned to each tile.
    pub fn tile_list_lengths(&self) -> Vec<usize> {
        self.bins.lists.iter().map(|l| l.len()).collect()
    }
}

impl RenderOutput<f32> {
    pub fn image(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.color.clone(),
        }
    }

    pub fn alpha_map(&self) -> ScalarMap {
        ScalarMap {
            width: self.width,
            height: self.height,
            data: self.alpha.clone(),
        }
    }

    pub fn depth_map(&self) -> ScalarMap {
        ScalarMap {
            width: self.width,
            height: self.height,
            data: self.depth.clone(),
        }
    }
}

/// Settings converted to the working precision.
#[derive(Clone, Copy)]
pub(crate) struct Consts<T> {
    pub alpha_clamp: T,
    pub cutoff: T,
    pub alpha_min: T,
}

impl<T: Real> Consts<T> {
    pub fn new(s: &RasterSettings) -> Self {
        Self {
            alpha_clamp: T::lit(s.alpha_clamp),
            cutoff: T::lit(s.transmittance_cutoff),
            alpha_min: T::lit(s.alpha_min),
        }
    }
}

/// Splat data needed per pixel, gathered contiguously per tile.
#[derive(Clone, Copy, Debug)]
pub(crate) struct TileSplat<T> {
    pub mean: [T; 2],
    pub conic: [T; 3],
    pub opacity: T,
    pub color: [T; 3],
    pub depth: T,
    /// Powers below this give alpha under `alpha_min`.
    pub power_min: T,
}

/// Gathers the splats of one tile list in front-to-back order.
pub(crate) fn gather_tile<T: Real>(
    list: &[u32],
    projected: &[Option<ProjectedGaussian<T>>],
    k: &Consts<T>,
) -> Vec<TileSplat<T>> {
    list.iter()
        .map(|&i| {
            let s = &projected[i as usize].as_ref().expect("binned splats are visible").splat;
            let power_min = if k.alpha_min > T::zero() {
                (k.alpha_min / s.opacity).ln()
            } else {
                T::neg_infinity()
            };
            TileSplat {
                mean: s.mean2d,
                conic: s.conic,
                opacity: s.opacity,
                color: s.color,
                depth: s.depth,
                power_min,
            }
        })
        .collect()
}

/// One splat's contribution at one pixel, as seen by the backward pass.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Contribution<T> {
    /// Position in the tile list.
    pub slot: usize,
    pub alpha: T,
    /// Unclamped Gaussian falloff `exp(power)`.
    pub falloff: T,
    pub transmittance: T,
    pub clamped: bool,
    pub dx: T,
    pub dy: T,
}

pub(crate) struct PixelResult<T> {
    pub color: [T; 3],
    pub depth_sum: T,
    pub transmittance: T,
}

/// Front-to-back compositing of one pixel over a tile's sorted splats.
#[inline(always)]
pub(crate) fn composite_pixel<T: Real>(
    px: T,
    py: T,
    splats: &[TileSplat<T>],
    k: &Consts<T>,
    mut visit: impl FnMut(Contribution<T>),
) -> PixelResult<T> {
    let mut color = [T::zero(); 3];
    let mut depth_sum = T::zero();
    let mut trans = T::one();
    let half = T::lit(0.5);
    for (slot, s) in splats.iter().enumerate() {
        let dx = px - s.mean[0];
        let dy = py - s.mean[1];
        let power = -half * (s.conic[0] * dx * dx + s.conic[2] * dy * dy) - s.conic[1] * dx * dy;
        if power > T::zero() || power < s.power_min {
            continue;
        }
        let falloff = power.exp();
        let raw = s.opacity * falloff;
        let clamped = raw > k.alpha_clamp;
        let alpha = if clamped { k.alpha_clamp } else { raw };
        if alpha < k.alpha_min {
            continue;
        }
        let w = alpha * trans;
        for c in 0..3 {
            color[c] = color[c] + s.color[c] * w;
        }
        depth_sum = depth_sum + s.depth * w;
        visit(Contribution {
            slot,
            alpha,
            falloff,
            transmittance: trans,
            clamped,
            dx,
            dy,
        });
        trans = trans * (T::one() - alpha);
        if trans < k.cutoff {
            break;
        }
    }
    PixelResult {
        color,
        depth_sum,
        transmittance: trans,
    }
}

/// Minimum of `dᵀ Q d` over `d` in the rectangle `[x0, x1] × [y0, y1]`
/// (offsets from the splat mean), for a positive definite `Q = [[a, b], [b, c]]`.
pub(crate) fn min_quadratic_over_rect(q: [f64; 3], x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    if x0 <= 0.0 && 0.0 <= x1 && y0 <= 0.0 && 0.0 <= y1 {
        return 0.0;
    }
    let [a, b, c] = q;
    let f = |x: f64, y: f64| a * x * x + 2.0 * b * x * y + c * y * y;
    let mut best = f64::INFINITY;
    for x in [x0, x1] {
        let y = (-b * x / c).clamp(y0, y1);
        best = best.min(f(x, y));
    }
    for y in [y0, y1] {
        let x = (-b * y / a).clamp(x0, x1);
        best = best.min(f(x, y));
    }
    best
}

pub(crate) fn project_all<T: Real>(
    gaussians: &[Gaussian3D<T>],
    camera: &Camera,
) -> Vec<Option<ProjectedGaussian<T>>> {
    let params = CameraParams::<T>::new(camera);
    gaussians
        .par_iter()
        .map(|g| project_gaussian(&params, g))
        .collect()
}

pub(crate) fn bin_splats<T: Real>(
    projected: &[Option<ProjectedGaussian<T>>],
    width: usize,
    height: usize,
    settings: &RasterSettings,
) -> TileBins {
    let ts = settings.tile_size.max(1);
    let tiles_x = width.div_ceil(ts);
    let tiles_y = height.div_ceil(ts);
    let mut lists: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
    for (idx, p) in projected.iter().enumerate() {
        let Some(p) = p else { continue };
        let s = &p.splat;
        let opacity = s.opacity.to_f64();
        if opacity < settings.alpha_min {
            continue;
        }
        // alpha >= alpha_min only inside the ellipse of Mahalanobis radius k
        let k = if settings.alpha_min > 0.0 {
            (2.0 * (opacity / settings.alpha_min).ln()).max(0.0).sqrt()
        } else {
            f64::INFINITY
        };
        let ex = k * s.cov2d[0].to_f64().sqrt() + 1.0;
        let ey = k * s.cov2d[2].to_f64().sqrt() + 1.0;
        let (mx, my) = (s.mean2d[0].to_f64(), s.mean2d[1].to_f64());
        let x0 = (mx - ex).ceil().max(0.0);
        let y0 = (my - ey).ceil().max(0.0);
        let x1 = (mx + ex).floor().min(width as f64 - 1.0);
        let y1 = (my + ey).floor().min(height as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let (tx0, tx1) = (x0 as usize / ts, x1 as usize / ts);
        let (ty0, ty1) = (y0 as usize / ts, y1 as usize / ts);
        let conic = s.conic.map(|v| v.to_f64());
        // generous slack so the per-pixel test, not the binning, decides
        let limit = k * k * (1.0 + 1e-4) + 1e-3;
        for ty in ty0..=ty1 {
            for tx in tx0..=tx1 {
                if k.is_finite() && (tx1 > tx0 || ty1 > ty0) {
                    let px0 = (tx * ts) as f64 - mx;
                    let px1 = ((tx * ts + ts).min(width) - 1) as f64 - mx;
                    let py0 = (ty * ts) as f64 - my;
                    let py1 = ((ty * ts + ts).min(height) - 1) as f64 - my;
                    if min_quadratic_over_rect(conic, px0, px1, py0, py1) > limit {
                        continue;
                    }
                }
                lists[ty * tiles_x + tx].push(idx as u32);
            }
        }
    }
    let depth_of = |i: u32| projected[i as usize].as_ref().unwrap().splat.depth;
    lists.par_iter_mut().for_each(|list| {
        list.sort_unstable_by(|&a, &b| {
            depth_of(a)
                .partial_cmp(&depth_of(b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        })
    });
    TileBins {
        tile_size: ts,
        tiles_x,
        lists,
    }
}

/// Renders `gaussians` from `camera` at the working precision `T`.
pub fn rasterize<T: Real>(
    gaussians: &[Gaussian3D<T>],
    camera: &Camera,
    background: [T; 3],
    settings: &RasterSettings,
) -> RenderOutput<T> {
    let width = camera.width as usize;
    let height = camera.height as usize;
    let projected = project_all(gaussians, camera);
    let bins = bin_splats(&projected, width, height, settings);
    let k = Consts::<T>::new(settings);

    let tiles: Vec<Vec<(usize, PixelResult<T>)>> = (0..bins.lists.len())
        .into_par_iter()
        .map(|tile| {
            let (x0, y0, x1, y1) = bins.tile_bounds(tile, width, height);
            let splats = gather_tile(&bins.lists[tile], &projected, &k);
            let mut out = Vec::with_capacity((x1 - x0) * (y1 - y0));
            for y in y0..y1 {
                for x in x0..x1 {
                    let r = composite_pixel(T::lit(x as f64), T::lit(y as f64), &splats, &k, |_| {});
                    out.push((y * width + x, r));
                }
            }
            out
        })
        .collect();

    let mut color = vec![T::zero(); width * height * 3];
    let mut alpha = vec![T::zero(); width * height];
    let mut depth = vec![T::nan(); width * height];
    let depth_min = T::lit(DEPTH_ALPHA_MIN);
    for (i, r) in tiles.into_iter().flatten() {
        for c in 0..3 {
            color[i * 3 + c] = r.color[c] + r.transmittance * background[c];
        }
        let a = T::one() - r.transmittance;
        alpha[i] = a;
        if a > depth_min {
            depth[i] = r.depth_sum / a;
        }
    }
    RenderOutput {
        width,
        height,
        color,
        alpha,
        depth,
        projected,
        bins,
        camera: *camera,
        background,
        settings: *settings,
    }
}

#[cfg(test)]
mod tests {
    use super::min_quadratic_over_rect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rect_minimum_matches_dense_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a: f64 = rng.random_range(0.01..2.0);
            let c: f64 = rng.random_range(0.01..2.0);
            let b = rng.random_range(-0.95..0.95) * (a * c).sqrt();
            let x0: f64 = rng.random_range(-20.0..20.0);
            let y0: f64 = rng.random_range(-20.0..20.0);
            let (x1, y1) = (x0 + rng.random_range(0.0..15.0), y0 + rng.random_range(0.0..15.0));
            let got = min_quadratic_over_rect([a, b, c], x0, x1, y0, y1);
            let mut dense = f64::INFINITY;
            for i in 0..=300 {
                for j in 0..=300 {
                    let x = x0 + (x1 - x0) * i as f64 / 300.0;
                    let y = y0 + (y1 - y0) * j as f64 / 300.0;
                    dense = dense.min(a * x * x + 2.0 * b * x * y + c * y * y);
                }
            }
            assert!(got <= dense + 1e-9, "{got} > {dense}");
            assert!(got >= dense - 1e-2 * (1.0 + dense), "{got} << {dense}");
        }
    }
}
