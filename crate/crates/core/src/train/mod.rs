//! Optimization of a [`GaussianField`] against posed images.

mod adam;
mod config;
mod densify;
mod init;

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use adam::{lr_layout, Adam, BETA1, BETA2, EPS};
pub use config::{TrainConfig, PIPELINE_ALPHA_MIN};
pub use densify::{densify_and_prune, split_gaussian, DensifyReport, SPLIT_SCALE_DIVISOR};
pub use init::{init_field, mean_knn_distance, ColoredPoint, INIT_OPACITY, LONE_POINT_SCALE};

use crate::error::{Error, Result};
use crate::gaussian::GaussianField;
use crate::geometry::Camera;
use crate::image::Image;
use crate::losses::{total_loss, Rgb, WeightMap};
use crate::raster::{render_backward, render_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViewClass {
    Ground,
    Aerial,
}

impl ViewClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ViewClass::Ground => "ground",
            ViewClass::Aerial => "aerial",
        }
    }
}

/// How aerial views enter training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    /// Ground views only.
    Ground,
    /// Ground and aerial views with equal weight.
    Joint,
    /// Aerial pixels weighted by cross-view uncertainty.
    Uncertainty,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Ground, Regime::Joint, Regime::Uncertainty];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Ground => "ground",
            Regime::Joint => "joint",
            Regime::Uncertainty => "uc",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground" => Ok(Regime::Ground),
            "joint" => Ok(Regime::Joint),
            "uc" | "uncertainty" => Ok(Regime::Uncertainty),
            other => Err(Error::InvalidArgument(format!(
                "unknown regime `{other}` (expected ground, joint or uc)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingView {
    pub name: String,
    pub camera: Camera,
    pub image: Image,
    pub class: ViewClass,
    pub weights: Option<WeightMap>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    pub views: Vec<TrainingView>,
}

impl TrainingSet {
    pub fn new(views: Vec<TrainingView>) -> Result<Self> {
        let set = Self { views };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        for v in &self.views {
            let dims = (v.camera.width as usize, v.camera.height as usize);
            if v.image.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    got: v.image.dims(),
                });
            }
            if let Some(w) = &v.weights {
                if v.class != ViewClass::Aerial {
                    return Err(Error::InvalidArgument(format!(
                        "view {}: weight maps apply to aerial views only",
                        v.name
                    )));
                }
                if w.dims() != dims {
                    return Err(Error::DimensionMismatch {
                        expected: dims,
                        got: w.dims(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn ground_only(&self) -> TrainingSet {
        TrainingSet {
            views: self
                .views
                .iter()
                .filter(|v| v.class == ViewClass::Ground)
                .cloned()
                .collect(),
        }
    }

    /// Radius of the camera centers around their mean, padded by 10%.
    pub fn camera_extent(&self) -> f64 {
        if self.views.is_empty() {
            return 1.0;
        }
        let centers: Vec<_> = self.views.iter().map(|v| v.camera.center()).collect();
        let mean = centers.iter().sum::<nalgebra::Vector3<f64>>() / centers.len() as f64;
        let r = centers.iter().map(|c| (c - mean).norm()).fold(0.0, f64::max);
        if r > 0.0 {
            1.1 * r
        } else {
            1.0
        }
    }
}

/// One row of the loss trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iter: u64,
    pub l_color: f32,
    pub l_ssim: f32,
    pub l_vol: f32,
    pub total: f32,
}

pub fn write_trace_csv(trace: &[LossRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "l_color", "l_ssim", "l_vol", "total"])?;
    for r in trace {
        w.write_record([
            r.iter.to_string(),
            r.l_color.to_string(),
            r.l_ssim.to_string(),
            r.l_vol.to_string(),
            r.total.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

pub fn save_trace_csv(trace: &[LossRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_csv(trace, std::io::BufWriter::new(f))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub field: GaussianField,
    pub trace: Vec<LossRecord>,
    pub densify: Vec<DensifyReport>,
}

/// Runs `config.iterations` steps of Adam on `field`.
///
/// Views are visited in a fresh seeded permutation each epoch. Views with a
/// weight map use it for both photometric terms; all others are unweighted.
pub fn train(field: GaussianField, set: &TrainingSet, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    set.validate()?;
    if set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if field.is_empty() {
        return Err(Error::Empty("field"));
    }
    let mut field = field;
    field.reset_stats();
    let extent = set.camera_extent();
    let lambdas = config.loss_weights();
    let settings = config.raster();
    let mut adam = Adam::new(field.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(2);
    let mut order: Vec<usize> = Vec::new();
    let mut trace = Vec::with_capacity(config.iterations as usize);
    let mut densify = Vec::new();
    let stop = config.densify_stop_iter();

    for iter in 1..=config.iterations {
        if order.is_empty() {
            order = (0..set.len()).collect();
            order.shuffle(&mut rng);
            order.reverse();
        }
        let view = &set.views[order.pop().expect("nonempty order")];

        let out = render_with(&field, &view.camera, config.background, &settings);
        let loss = total_loss(
            view.weights.as_ref(),
            Rgb::new(out.width, out.height, &out.color),
            Rgb::from(&view.image),
            &field.gaussians,
            lambdas,
        )?;
        if !loss.total.is_finite() {
            return Err(Error::NonFiniteLoss {
                iteration: iter as usize,
                view: view.name.clone(),
            });
        }
        let mut grads = render_backward(&field, &view.camera, &out, &loss.d_color, &loss.d_alpha)?;
        for (g, dv) in grads.params.iter_mut().zip(&loss.d_log_scale) {
            for k in 0..3 {
                g.log_scale[k] += dv[k];
            }
        }
        if !grads.all_finite() {
            return Err(Error::NonFiniteLoss {
                iteration: iter as usize,
                view: view.name.clone(),
            });
        }
        // densification statistic in normalized device coordinates
        let (sx, sy) = (0.5 * out.width as f32, 0.5 * out.height as f32);
        for (i, p) in out.projected.iter().enumerate() {
            if p.is_some() {
                let [gx, gy] = grads.mean2d[i];
                field.grad_accum[i] += (gx * sx).hypot(gy * sy);
                field.grad_count[i] += 1;
            }
        }

        let lr = lr_layout(
            config.lr_mu_at(iter) * extent,
            config.lr_rot,
            config.lr_log_scale,
            config.lr_opacity,
            config.lr_color,
        );
        adam.step(&mut field.gaussians, &grads.params, &lr);
        for g in &mut field.gaussians {
            g.renormalize();
        }
        field.iteration = iter;
        trace.push(LossRecord {
            iter,
            l_color: loss.l_color,
            l_ssim: loss.l_ssim,
            l_vol: loss.l_vol,
            total: loss.total,
        });

        if iter >= config.densify_start && iter < stop && iter % config.densify_interval == 0 {
            let (report, origins) = densify_and_prune(&mut field, config, extent);
            adam.remap(&origins);
            log::debug!("iter {iter}: {report:?}, {} gaussians", field.len());
            densify.push(report);
            if field.is_empty() {
                return Err(Error::Empty("field after pruning"));
            }
        }
    }
    log::info!(
        "trained {} iterations, {} gaussians, final loss {:.5}",
        config.iterations,
        field.len(),
        trace.last().map_or(f32::NAN, |r| r.total)
    );
    Ok(TrainOutcome { field, trace, densify })
}

/// Initializes from `points` with the config's seed and trains.
pub fn train_from_points(points: &[ColoredPoint], set: &TrainingSet, config: &TrainConfig) -> Result<TrainOutcome> {
    let field = init_field(points, config.init_jitter, config.seed)?;
    train(field, set, config)
}

/// Seeds used by [`train_ensemble`]: `seed, seed + 1, …`.
pub fn member_seeds(config: &TrainConfig) -> Vec<u64> {
    (0..config.members as u64)
        .map(|k| config.seed.wrapping_add(k))
        .collect()
}

/// Trains one member per seed on the ground views of `set`; output follows seed order.
pub fn train_members(
    points: &[ColoredPoint],
    set: &TrainingSet,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<Vec<TrainOutcome>> {
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "an ensemble needs at least 2 members, got {}",
            seeds.len()
        )));
    }
    let ground = set.ground_only();
    seeds
        .par_iter()
        .enumerate()
        .map(|(k, &seed)| {
            let cfg = TrainConfig {
                seed,
                ..config.clone()
            };
            train_from_points(points, &ground, &cfg).map_err(|e| Error::Member {
                member: k,
                source: Box::new(e),
            })
        })
        .collect()
}

/// `config.members` independently seeded members trained on ground views only.
pub fn train_ensemble(points: &[ColoredPoint], set: &TrainingSet, config: &TrainConfig) -> Result<Vec<GaussianField>> {
    config.validate()?;
    Ok(train_members(points, set, config, &member_seeds(config))?
        .into_iter()
        .map(|o| o.field)
        .collect())
}
