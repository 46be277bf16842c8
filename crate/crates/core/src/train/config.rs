use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::raster::RasterSettings;
use crate::uncertainty::{CrossViewSettings, DEFAULT_ROOT, TAU_OCC};

/// Alpha skip used by training, uncertainty and evaluation renders (1/255).
pub const PIPELINE_ALPHA_MIN: f64 = 1.0 / 255.0;

/// Training hyperparameters. Read from flat `key = value` files.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: u64,
    /// Position learning rate per unit of camera extent.
    pub lr_mu: f64,
    /// Final multiplier of the exponential position learning-rate decay.
    pub lr_mu_final: f64,
    pub lr_rot: f64,
    pub lr_log_scale: f64,
    pub lr_opacity: f64,
    pub lr_color: f64,
    pub lambda_ssim: f64,
    pub lambda_vol: f64,
    pub root_n: f64,
    pub members: usize,
    pub densify_interval: u64,
    pub densify_start: u64,
    /// Densification stops after this fraction of the run.
    pub densify_stop: f64,
    /// Mean screen-space positional gradient norm, in normalized device
    /// coordinates, above which a Gaussian densifies.
    pub densify_grad_threshold: f64,
    /// Split instead of clone above this fraction of the scene extent.
    pub percent_dense: f64,
    pub prune_opacity: f64,
    pub max_gaussians: usize,
    pub init_jitter: f64,
    pub tau_occ: f64,
    pub seed: u64,
    pub background: [f32; 3],
    pub alpha_clamp: f64,
    pub transmittance_cutoff: f64,
    /// Per-pixel alpha below which a splat is skipped in pipeline renders.
    pub alpha_min: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 15_000,
            lr_mu: 1.6e-4,
            lr_mu_final: 0.01,
            lr_rot: 1e-3,
            lr_log_scale: 5e-3,
            lr_opacity: 5e-2,
            lr_color: 2.5e-3,
            lambda_ssim: crate::losses::LAMBDA_SSIM,
            lambda_vol: crate::losses::LAMBDA_VOL,
            root_n: DEFAULT_ROOT,
            members: 4,
            densify_interval: 100,
            densify_start: 500,
            densify_stop: 0.6,
            densify_grad_threshold: 2e-4,
            percent_dense: 0.01,
            prune_opacity: 0.005,
            max_gaussians: 60_000,
            init_jitter: 0.01,
            tau_occ: TAU_OCC,
            seed: 0,
            background: [0.0; 3],
            alpha_clamp: 0.99,
            transmittance_cutoff: 1e-4,
            alpha_min: PIPELINE_ALPHA_MIN,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("config: {what}")));
        if self.iterations < 1 {
            return bad("iterations must be >= 1");
        }
        if self.members < 2 {
            return bad("members must be >= 2");
        }
        if !(self.root_n >= 1.0) {
            return bad("root_n must be >= 1");
        }
        if self.densify_interval == 0 {
            return bad("densify_interval must be >= 1");
        }
        let lrs = [
            self.lr_mu,
            self.lr_rot,
            self.lr_log_scale,
            self.lr_opacity,
            self.lr_color,
            self.lr_mu_final,
        ];
        if lrs.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return bad("learning rates must be finite and >= 0");
        }
        if !(self.alpha_clamp > 0.0 && self.alpha_clamp < 1.0)
            || !(self.transmittance_cutoff >= 0.0 && self.transmittance_cutoff < 1.0)
            || !(self.alpha_min >= 0.0 && self.alpha_min < self.alpha_clamp)
        {
            return bad("need 0 < alpha_clamp < 1, 0 <= transmittance_cutoff < 1, 0 <= alpha_min < alpha_clamp");
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return bad("background must lie in [0, 1]");
        }
        self.loss_weights().validate()
    }

    pub fn raster(&self) -> RasterSettings {
        RasterSettings {
            alpha_clamp: self.alpha_clamp,
            transmittance_cutoff: self.transmittance_cutoff,
            alpha_min: self.alpha_min,
            ..RasterSettings::default()
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            lambda_ssim: self.lambda_ssim,
            lambda_vol: self.lambda_vol,
        }
    }

    pub fn cross_view(&self) -> CrossViewSettings {
        CrossViewSettings {
            root_n: self.root_n,
            tau_occ: self.tau_occ,
            background: self.background,
            raster: self.raster(),
        }
    }

    /// Position learning rate at `iter`, decaying exponentially to `lr_mu * lr_mu_final`.
    pub fn lr_mu_at(&self, iter: u64) -> f64 {
        let t = (iter as f64 / self.iterations.max(1) as f64).min(1.0);
        self.lr_mu * self.lr_mu_final.powf(t)
    }

    pub fn densify_stop_iter(&self) -> u64 {
        (self.densify_stop * self.iterations as f64) as u64
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let err = |e: &dyn std::fmt::Display| {
            Error::InvalidArgument(format!("config key `{key}`: cannot parse `{value}`: {e}"))
        };
        macro_rules! parse {
            () => {
                value.parse().map_err(|e| err(&e))?
            };
        }
        match key.trim() {
            "iterations" => self.iterations = parse!(),
            "lr_mu" => self.lr_mu = parse!(),
            "lr_mu_final" => self.lr_mu_final = parse!(),
            "lr_rot" => self.lr_rot = parse!(),
            "lr_log_scale" => self.lr_log_scale = parse!(),
            "lr_opacity" => self.lr_opacity = parse!(),
            "lr_color" => self.lr_color = parse!(),
            "lambda_ssim" => self.lambda_ssim = parse!(),
            "lambda_vol" => self.lambda_vol = parse!(),
            "root_n" => self.root_n = parse!(),
            "members" => self.members = parse!(),
            "densify_interval" => self.densify_interval = parse!(),
            "densify_start" => self.densify_start = parse!(),
            "densify_stop" => self.densify_stop = parse!(),
            "densify_grad_threshold" => self.densify_grad_threshold = parse!(),
            "percent_dense" => self.percent_dense = parse!(),
            "prune_opacity" => self.prune_opacity = parse!(),
            "max_gaussians" => self.max_gaussians = parse!(),
            "init_jitter" => self.init_jitter = parse!(),
            "tau_occ" => self.tau_occ = parse!(),
            "seed" => self.seed = parse!(),
            "alpha_clamp" => self.alpha_clamp = parse!(),
            "transmittance_cutoff" => self.transmittance_cutoff = parse!(),
            "alpha_min" => self.alpha_min = parse!(),
            "background" => {
                let parts: Vec<f32> = value
                    .split(',')
                    .map(|s| s.trim().parse::<f32>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(&e))?;
                if parts.len() != 3 {
                    return Err(err(&"expected r,g,b"));
                }
                self.background = [parts[0], parts[1], parts[2]];
            }
            other => {
                return Err(Error::InvalidArgument(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("config line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let b = self.background;
        let _ = write!(
            s,
            "iterations = {}\nlr_mu = {}\nlr_mu_final = {}\nlr_rot = {}\nlr_log_scale = {}\n\
             lr_opacity = {}\nlr_color = {}\nlambda_ssim = {}\nlambda_vol = {}\nroot_n = {}\n\
             members = {}\ndensify_interval = {}\ndensify_start = {}\ndensify_stop = {}\n\
             densify_grad_threshold = {}\npercent_dense = {}\nprune_opacity = {}\n\
             max_gaussians = {}\ninit_jitter = {}\ntau_occ = {}\nseed = {}\nbackground = {},{},{}\n\
             alpha_clamp = {}\ntransmittance_cutoff = {}\nalpha_min = {}\n",
            self.iterations,
            self.lr_mu,
            self.lr_mu_final,
            self.lr_rot,
            self.lr_log_scale,
            self.lr_opacity,
            self.lr_color,
            self.lambda_ssim,
            self.lambda_vol,
            self.root_n,
            self.members,
            self.densify_interval,
            self.densify_start,
            self.densify_stop,
            self.densify_grad_threshold,
            self.percent_dense,
            self.prune_opacity,
            self.max_gaussians,
            self.init_jitter,
            self.tau_occ,
            self.seed,
            b[0],
            b[1],
            b[2],
            self.alpha_clamp,
            self.transmittance_cutoff,
            self.alpha_min
        );
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
