//! Ensemble-based rendering uncertainty on ground views and its transfer to
//! aerial views.
//!
//! Pipeline: render every ensemble member at each ground camera, take the
//! per-channel population variance, fuse channels as `mean_c log(σ²_c + 1)`,
//! carry each ground pixel's value into the aerial cameras through its
//! ensemble-mean depth, average values that land on the same aerial pixel,
//! and finally normalize all aerial maps jointly as `(U / (max − min))^(1/n)`.

use std::path::Path;

use nalgebra::Vector2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::GaussianField;
use crate::geometry::{Camera, Projection};
use crate::image::{Image, ScalarMap};
use crate::losses::WeightMap;
use crate::raster::{render_with, RasterSettings};

/// Depth slack before a reprojected ground point counts as occluded in the
/// aerial view (meters).
pub const TAU_OCC: f64 = 0.1;
pub const DEFAULT_ROOT: f64 = 6.0;

/// Per-pixel nonnegative uncertainty with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
    pub valid: Vec<bool>,
}

impl UncertaintyMap {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
            valid: vec![false; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// NaN-encoded scalar map for `UCMAP001` storage.
    pub fn to_scalar_map(&self) -> ScalarMap {
        ScalarMap {
            width: self.width,
            height: self.height,
            data: self
                .values
                .iter()
                .zip(&self.valid)
                .map(|(&v, &ok)| if ok { v } else { f32::NAN })
                .collect(),
        }
    }

    pub fn from_scalar_map(map: &ScalarMap) -> Self {
        Self {
            width: map.width,
            height: map.height,
            values: map.data.iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect(),
            valid: map.data.iter().map(|v| !v.is_nan()).collect(),
        }
    }
}

/// Per-pixel, per-channel population mean and variance of `M ≥ 2` renders.
pub fn ensemble_stats(renders: &[Image]) -> Result<(Image, Image)> {
    if renders.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "ensemble statistics need at least 2 members, got {}",
            renders.len()
        )));
    }
    let first = &renders[0];
    for r in &renders[1..] {
        first.ensure_same_dims(r)?;
    }
    let m = renders.len() as f64;
    let len = first.data.len();
    let mut mean = Image::new(first.width, first.height);
    let mut var = Image::new(first.width, first.height);
    for i in 0..len {
        let mu = renders.iter().map(|r| r.data[i] as f64).sum::<f64>() / m;
        let v = renders
            .iter()
            .map(|r| {
                let d = r.data[i] as f64 - mu;
                d * d
            })
            .sum::<f64>()
            / m;
        mean.data[i] = mu as f32;
        var.data[i] = v as f32;
    }
    Ok((mean, var))
}

/// `u(p) = (1/3) Σ_c ln(σ²_c(p) + 1)`.
pub fn fuse_channels(variance: &Image) -> Result<UncertaintyMap> {
    if let Some(v) = variance.data.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative or NaN variance {v}")));
    }
    let n = variance.width * variance.height;
    let values = (0..n)
        .map(|i| {
            let s: f64 = (0..3)
                .map(|c| (variance.data[i * 3 + c] as f64).ln_1p())
                .sum();
            (s / 3.0) as f32
        })
        .collect();
    Ok(UncertaintyMap {
        width: variance.width,
        height: variance.height,
        values,
        valid: vec![true; n],
    })
}

/// Ground uncertainty values gathered at each pixel of one aerial image.
#[derive(Debug, Clone)]
pub struct MatchSet {
    pub width: usize,
    pub height: usize,
    /// Indexed by aerial pixel; empty when nothing landed there.
    pub contributions: Vec<Vec<f32>>,
}

impl MatchSet {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            contributions: vec![Vec::new(); width * height],
        }
    }

    pub fn matched_pixels(&self) -> impl Iterator<Item = (usize, &[f32])> {
        self.contributions
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(i, c)| (i, c.as_slice()))
    }

    /// Arithmetic mean per matched pixel; unmatched pixels are invalid zeros.
    pub fn average(&self) -> UncertaintyMap {
        let mut out = UncertaintyMap::empty(self.width, self.height);
        for (i, c) in self.matched_pixels() {
            let sum: f64 = c.iter().map(|&v| v as f64).sum();
            out.values[i] = (sum / c.len() as f64) as f32;
            out.valid[i] = true;
        }
        out
    }
}

fn check_frame(cam: &Camera, dims: (usize, usize), what: &str) -> Result<()> {
    if (cam.width as usize, cam.height as usize) != dims {
        return Err(Error::InvalidArgument(format!(
            "frame mismatch: {what} is {}x{} but its camera is {}x{}",
            dims.0, dims.1, cam.width, cam.height
        )));
    }
    Ok(())
}

/// Where ground pixel `(x, y)` at camera depth `depth` lands in the aerial
/// camera (continuous pixel coordinates), if it lands inside the image.
pub fn reproject(
    ground_cam: &Camera,
    x: usize,
    y: usize,
    depth: f64,
    aerial_cam: &Camera,
) -> Result<Option<Projection>> {
    let world = ground_cam.unproject_pixel(&Vector2::new(x as f64, y as f64), depth)?;
    let proj = aerial_cam.project_point(&world);
    Ok((!proj.behind && aerial_cam.contains(&proj.pixel)).then_some(proj))
}

/// Collects the ground-pixel matches landing in one aerial camera.
///
/// Every valid ground pixel is lifted to 3D at its depth and projected into
/// the aerial camera; it lands on the nearest pixel. When an aerial depth map
/// is given, contributions farther than `aerial depth + tau_occ` are dropped.
pub fn collect_matches(
    ground_maps: &[UncertaintyMap],
    ground_cams: &[Camera],
    ground_depths: &[ScalarMap],
    aerial_cam: &Camera,
    aerial_depth: Option<&ScalarMap>,
    tau_occ: f64,
) -> Result<MatchSet> {
    if ground_maps.len() != ground_cams.len() {
        return Err(Error::InvalidArgument(format!(
            "{} ground maps for {} ground cameras",
            ground_maps.len(),
            ground_cams.len()
        )));
    }
    if ground_depths.len() != ground_cams.len() {
        return Err(Error::Missing(format!(
            "depth maps: {} for {} ground cameras",
            ground_depths.len(),
            ground_cams.len()
        )));
    }
    let (aw, ah) = (aerial_cam.width as usize, aerial_cam.height as usize);
    if let Some(d) = aerial_depth {
        check_frame(aerial_cam, d.dims(), "aerial depth")?;
    }
    let mut set = MatchSet::new(aw, ah);
    for ((map, cam), depth) in ground_maps.iter().zip(ground_cams).zip(ground_depths) {
        check_frame(cam, map.dims(), "ground uncertainty map")?;
        check_frame(cam, depth.dims(), "ground depth map")?;
        for y in 0..map.height {
            for x in 0..map.width {
                let i = y * map.width + x;
                let d = depth.data[i];
                if !map.valid[i] || !(d > 0.0) {
                    continue;
                }
                let Some(proj) = reproject(cam, x, y, d as f64, aerial_cam)? else {
                    continue;
                };
                let ax = proj.pixel.x.round() as usize;
                let ay = proj.pixel.y.round() as usize;
                let j = ay * aw + ax;
                if let Some(ad) = aerial_depth {
                    let occluder = ad.data[j];
                    if occluder.is_finite() && proj.depth > occluder as f64 + tau_occ {
                        continue;
                    }
                }
                set.contributions[j].push(map.values[i]);
            }
        }
    }
    Ok(set)
}

/// Raw (unnormalized) aerial uncertainty maps, one per aerial camera.
pub fn project_uncertainty(
    ground_maps: &[UncertaintyMap],
    ground_cams: &[Camera],
    ground_depths: &[ScalarMap],
    aerial_cams: &[Camera],
    aerial_depths: Option<&[ScalarMap]>,
    tau_occ: f64,
) -> Result<Vec<UncertaintyMap>> {
    if let Some(d) = aerial_depths {
        if d.len() != aerial_cams.len() {
            return Err(Error::Missing(format!(
                "aerial depth maps: {} for {} aerial cameras",
                d.len(),
                aerial_cams.len()
            )));
        }
    }
    aerial_cams
        .par_iter()
        .enumerate()
        .map(|(k, cam)| {
            collect_matches(
                ground_maps,
                ground_cams,
                ground_depths,
                cam,
                aerial_depths.map(|d| &d[k]),
                tau_occ,
            )
            .map(|m| m.average())
        })
        .collect()
}

/// Joint normalization `U′ = clamp((U / (max − min))^(1/n), 0, 1)` with the
/// statistics taken over the valid pixels of all maps.
pub fn normalize_maps(raw: &[UncertaintyMap], n: f64) -> Result<Vec<WeightMap>> {
    if raw.is_empty() {
        return Err(Error::Empty("uncertainty map set"));
    }
    if !(n >= 1.0) {
        return Err(Error::InvalidArgument(format!("root exponent must be >= 1, got {n}")));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for m in raw {
        for (&v, &ok) in m.values.iter().zip(&m.valid) {
            if ok {
                lo = lo.min(v as f64);
                hi = hi.max(v as f64);
            }
        }
    }
    let range = hi - lo;
    if !(range > 0.0) {
        log::warn!("uncertainty maps are constant (max = min); emitting all-zero weights");
        return Ok(raw
            .iter()
            .map(|m| WeightMap {
                width: m.width,
                height: m.height,
                data: vec![0.0; m.width * m.height],
            })
            .collect());
    }
    let inv_n = 1.0 / n;
    Ok(raw
        .iter()
        .map(|m| WeightMap {
            width: m.width,
            height: m.height,
            data: m
                .values
                .iter()
                .zip(&m.valid)
                .map(|(&v, &ok)| {
                    if !ok {
                        return 0.0;
                    }
                    ((v as f64 / range).max(0.0).powf(inv_n)).min(1.0) as f32
                })
                .collect(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossViewSettings {
    pub root_n: f64,
    pub tau_occ: f64,
    pub background: [f32; 3],
    pub raster: RasterSettings,
}

impl Default for CrossViewSettings {
    fn default() -> Self {
        Self {
            root_n: DEFAULT_ROOT,
            tau_occ: TAU_OCC,
            background: [0.0; 3],
            raster: RasterSettings::default(),
        }
    }
}

/// Everything produced by [`build_cross_view_weights`].
#[derive(Debug, Clone)]
pub struct CrossViewWeights {
    pub ground_uncertainty: Vec<UncertaintyMap>,
    pub ground_depths: Vec<ScalarMap>,
    pub aerial_raw: Vec<UncertaintyMap>,
    pub weights: Vec<WeightMap>,
}

/// Mean depth over members, valid where more than half the members see something.
pub fn mean_depth(depths: &[ScalarMap]) -> ScalarMap {
    let first = &depths[0];
    let mut out = ScalarMap::new(first.width, first.height, f32::NAN);
    for i in 0..first.data.len() {
        let (mut sum, mut count) = (0.0f64, 0usize);
        for d in depths {
            let v = d.data[i];
            if v.is_finite() {
                sum += v as f64;
                count += 1;
            }
        }
        if 2 * count > depths.len() {
            out.data[i] = (sum / count as f64) as f32;
        }
    }
    out
}

/// Renders the ensemble at a camera: colors and ensemble-mean depth.
fn ensemble_views(ensemble: &[GaussianField], cam: &Camera, s: &CrossViewSettings) -> (Vec<Image>, ScalarMap) {
    let outs: Vec<_> = ensemble
        .iter()
        .map(|f| render_with(f, cam, s.background, &s.raster))
        .collect();
    let depths: Vec<ScalarMap> = outs.iter().map(|o| o.depth_map()).collect();
    (outs.iter().map(|o| o.image()).collect(), mean_depth(&depths))
}

/// Full ground → aerial weighting pipeline for a trained ensemble.
pub fn build_cross_view_weights(
    ensemble: &[GaussianField],
    ground_cams: &[Camera],
    aerial_cams: &[Camera],
    settings: &CrossViewSettings,
) -> Result<CrossViewWeights> {
    if ensemble.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "ensemble needs at least 2 members, got {}",
            ensemble.len()
        )));
    }
    let ground: Vec<(UncertaintyMap, ScalarMap)> = ground_cams
        .par_iter()
        .map(|cam| {
            let (images, depth) = ensemble_views(ensemble, cam, settings);
            let (_, var) = ensemble_stats(&images)?;
            Ok((fuse_channels(&var)?, depth))
        })
        .collect::<Result<_>>()?;
    let (ground_uncertainty, ground_depths): (Vec<_>, Vec<_>) = ground.into_iter().unzip();
    let aerial_depths: Vec<ScalarMap> = aerial_cams
        .par_iter()
        .map(|cam| ensemble_views(ensemble, cam, settings).1)
        .collect();
    let aerial_raw = project_uncertainty(
        &ground_uncertainty,
        ground_cams,
        &ground_depths,
        aerial_cams,
        Some(&aerial_depths),
        settings.tau_occ,
    )?;
    let weights = normalize_maps(&aerial_raw, settings.root_n)?;
    Ok(CrossViewWeights {
        ground_uncertainty,
        ground_depths,
        aerial_raw,
        weights,
    })
}

impl CrossViewWeights {
    /// Writes `aerial_XXXX.ucmap` weight maps plus PNG visualizations and the
    /// ground uncertainty maps into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (k, w) in self.weights.iter().enumerate() {
            let map = weight_to_scalar(w);
            map.save(dir.join(format!("aerial_{k:04}.ucmap")))?;
            map.save_visualization(dir.join(format!("aerial_{k:04}.png")), 0.0, 1.0)?;
        }
        let hi = self
            .ground_uncertainty
            .iter()
            .flat_map(|m| m.values.iter().copied())
            .fold(0.0f32, f32::max);
        for (k, u) in self.ground_uncertainty.iter().enumerate() {
            let map = u.to_scalar_map();
            map.save(dir.join(format!("ground_{k:04}.ucmap")))?;
            map.save_visualization(dir.join(format!("ground_{k:04}.png")), 0.0, hi)?;
        }
        Ok(())
    }

    /// Loads the aerial weight maps written by [`CrossViewWeights::save`].
    pub fn load_weights(dir: impl AsRef<Path>, count: usize) -> Result<Vec<WeightMap>> {
        let dir = dir.as_ref();
        (0..count)
            .map(|k| {
                let path = dir.join(format!("aerial_{k:04}.ucmap"));
                if !path.exists() {
                    return Err(Error::Missing(format!(
                        "weight map {} (run the uncertainty stage first)",
                        path.display()
                    )));
                }
                let m = ScalarMap::load(&path)?;
                WeightMap::new(
                    m.width,
                    m.height,
                    m.data.iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect(),
                )
            })
            .collect()
    }
}

pub fn weight_to_scalar(w: &WeightMap) -> ScalarMap {
    ScalarMap {
        width: w.width,
        height: w.height,
        data: w.data.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RigidTransform;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map(values: Vec<f32>, w: usize, h: usize) -> UncertaintyMap {
        let n = values.len();
        UncertaintyMap {
            width: w,
            height: h,
            values,
            valid: vec![true; n],
        }
    }

    #[test]
    fn stats_examples() {
        let a = Image::filled(2, 2, [0.3, 0.5, 0.7]);
        let (mean, var) = ensemble_stats(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert_eq!(mean.data, a.data);
        assert!(var.data.iter().all(|&v| v == 0.0));

        let (mean, var) =
            ensemble_stats(&[Image::filled(1, 1, [0.0; 3]), Image::filled(1, 1, [1.0; 3])]).unwrap();
        assert_eq!(mean.data, vec![0.5; 3]);
        assert_eq!(var.data, vec![0.25; 3]);
        assert!(ensemble_stats(&[a.clone()]).is_err());
        assert!(ensemble_stats(&[a, Image::new(3, 2)]).is_err());
    }

    #[test]
    fn stats_match_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let imgs: Vec<Image> = (0..4)
            .map(|_| Image::from_fn(6, 5, |_, _| [rng.random(), rng.random(), rng.random()]))
            .collect();
        let (mean, var) = ensemble_stats(&imgs).unwrap();
        for i in 0..imgs[0].data.len() {
            let vals: Vec<f64> = imgs.iter().map(|im| im.data[i] as f64).collect();
            let mut s = 0.0;
            for v in &vals {
                s += v;
            }
            let mu = s / 4.0;
            let mut ss = 0.0;
            for v in &vals {
                ss += (v - mu) * (v - mu);
            }
            assert!((mean.data[i] as f64 - mu).abs() < 1e-7);
            assert!((var.data[i] as f64 - ss / 4.0).abs() < 1e-7);
        }
    }

    #[test]
    fn stats_ignore_member_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let imgs: Vec<Image> = (0..5)
            .map(|_| Image::from_fn(4, 4, |_, _| [rng.random(), rng.random(), rng.random()]))
            .collect();
        let mut rev = imgs.clone();
        rev.reverse();
        let (_, a) = ensemble_stats(&imgs).unwrap();
        let (_, b) = ensemble_stats(&rev).unwrap();
        assert_eq!(fuse_channels(&a).unwrap(), fuse_channels(&b).unwrap());
    }

    #[test]
    fn fuse_examples() {
        let z = fuse_channels(&Image::filled(1, 1, [0.0; 3])).unwrap();
        assert_eq!(z.values, vec![0.0]);
        let e = std::f32::consts::E - 1.0;
        let one = fuse_channels(&Image::filled(1, 1, [e; 3])).unwrap();
        assert!((one.values[0] - 1.0).abs() < 1e-6);
        let mixed = fuse_channels(&Image::filled(1, 1, [0.1, 0.2, 0.3])).unwrap();
        let oracle = ((1.1f64).ln() + (1.2f64).ln() + (1.3f64).ln()) / 3.0;
        assert!((mixed.values[0] as f64 - oracle).abs() < 1e-7);
        assert!((mixed.values[0] - 0.1799).abs() < 1e-4);
        assert!(fuse_channels(&Image::filled(1, 1, [-0.1, 0.0, 0.0])).is_err());
        // zero exactly where all channels are zero
        let partial = fuse_channels(&Image::filled(1, 1, [0.0, 0.0, 1e-6])).unwrap();
        assert!(partial.values[0] > 0.0);
    }

    #[test]
    fn normalize_examples() {
        let m = map(vec![0.0, 0.5, 1.0, 2.0], 4, 1);
        for n in [1.0, 2.0, 6.0, 10.0] {
            let w = normalize_maps(std::slice::from_ref(&m), n).unwrap();
            assert_eq!(w[0].data[3], 1.0);
            assert_eq!(w[0].data[0], 0.0);
        }
        let w1 = normalize_maps(std::slice::from_ref(&m), 1.0).unwrap();
        assert_eq!(w1[0].data[1], 0.25);
        let w6 = normalize_maps(std::slice::from_ref(&m), 6.0).unwrap();
        assert!((w6[0].data[1] as f64 - 0.25f64.powf(1.0 / 6.0)).abs() < 1e-7);
        assert!((w6[0].data[1] - 0.7937).abs() < 1e-4);
        assert!(normalize_maps(&[], 6.0).is_err());
        assert!(normalize_maps(std::slice::from_ref(&m), 0.5).is_err());
    }

    #[test]
    fn normalize_is_joint_and_respects_mask() {
        let a = map(vec![1.0, 2.0], 2, 1);
        let mut b = map(vec![3.0, 100.0], 2, 1);
        b.valid[1] = false;
        b.values[1] = 0.0;
        let w = normalize_maps(&[a, b], 1.0).unwrap();
        // range = 3 - 1 = 2 over valid pixels of both maps; no min subtraction
        assert_eq!(w[0].data, vec![0.5, 1.0]);
        assert_eq!(w[1].data, vec![1.0, 0.0]);
    }

    #[test]
    fn normalize_degenerate_is_zero() {
        let a = map(vec![0.4; 6], 3, 2);
        let w = normalize_maps(&[a.clone(), a], 6.0).unwrap();
        assert!(w.iter().all(|m| m.data.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn normalize_monotone_in_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = map((0..50).map(|_| rng.random_range(0.0..3.0)).collect(), 10, 5);
        let mut prev: Option<Vec<f32>> = None;
        for n in [1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0] {
            let w = normalize_maps(std::slice::from_ref(&m), n).unwrap().remove(0).data;
            assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
            if let Some(p) = &prev {
                for (a, b) in p.iter().zip(&w) {
                    if *a > 0.0 && *a < 1.0 {
                        assert!(b >= a);
                    }
                }
            }
            prev = Some(w);
        }
    }

    fn down_camera(center: [f64; 3], w: u32, h: u32) -> Camera {
        Camera::looking(
            20.0,
            20.0,
            (w as f64 - 1.0) / 2.0,
            (h as f64 - 1.0) / 2.0,
            w,
            h,
            center.into(),
            nalgebra::Vector3::new(0.0, -1.0, 0.0),
            nalgebra::Vector3::new(0.0, 0.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn single_and_multi_match_averaging() {
        // identical cameras: ground pixel (x, y) lands on aerial (x, y)
        let cam = down_camera([0.0, 5.0, 0.0], 5, 5);
        let mut gmap = UncertaintyMap::empty(5, 5);
        let mut depth = ScalarMap::new(5, 5, f32::NAN);
        gmap.values[12] = 0.7;
        gmap.valid[12] = true;
        depth.data[12] = 5.0;
        let set = collect_matches(&[gmap.clone()], &[cam], &[depth.clone()], &cam, None, TAU_OCC).unwrap();
        let avg = set.average();
        assert_eq!(avg.values[12], 0.7);
        assert_eq!(avg.valid_count(), 1);

        let mut g2 = UncertaintyMap::empty(5, 5);
        g2.values[12] = 0.2;
        g2.valid[12] = true;
        let mut g3 = g2.clone();
        g3.values[12] = 0.4;
        let avg = project_uncertainty(&[g2, g3], &[cam, cam], &[depth.clone(), depth.clone()], &[cam], None, TAU_OCC)
            .unwrap()
            .remove(0);
        assert!((avg.values[12] - 0.3).abs() < 1e-7);
        assert!(!avg.valid[0]);
        assert_eq!(avg.values[0], 0.0);
    }

    #[test]
    fn occluded_contributions_dropped() {
        let cam = down_camera([0.0, 5.0, 0.0], 5, 5);
        let mut gmap = UncertaintyMap::empty(5, 5);
        gmap.values[12] = 0.7;
        gmap.valid[12] = true;
        let mut depth = ScalarMap::new(5, 5, f32::NAN);
        depth.data[12] = 5.0;
        let mut roof = ScalarMap::new(5, 5, f32::NAN);
        roof.data[12] = 2.0;
        let set = collect_matches(&[gmap.clone()], &[cam], &[depth.clone()], &cam, Some(&roof), TAU_OCC).unwrap();
        assert_eq!(set.matched_pixels().count(), 0);
        roof.data[12] = 4.95;
        let set = collect_matches(&[gmap], &[cam], &[depth], &cam, Some(&roof), TAU_OCC).unwrap();
        assert_eq!(set.matched_pixels().count(), 1);
    }

    #[test]
    fn projection_errors() {
        let cam = down_camera([0.0, 5.0, 0.0], 5, 5);
        let gmap = UncertaintyMap::empty(5, 5);
        let depth = ScalarMap::new(5, 5, 1.0);
        assert!(collect_matches(&[gmap.clone()], &[cam], &[], &cam, None, TAU_OCC).is_err());
        let wrong = ScalarMap::new(4, 5, 1.0);
        assert!(collect_matches(&[gmap.clone()], &[cam], &[wrong], &cam, None, TAU_OCC).is_err());
        let other = Camera::new(1.0, 1.0, 0.0, 0.0, 3, 3, RigidTransform::identity()).unwrap();
        assert!(collect_matches(&[gmap], &[other], &[depth], &cam, None, TAU_OCC).is_err());
    }
}
