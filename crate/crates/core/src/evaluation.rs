//! Three-regime comparison protocol and the root-exponent ablation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::GaussianField;
use crate::losses::{psnr, ssim, WeightMap};
use crate::raster::{render_with, RasterSettings};
use crate::scenegen::{SceneBundle, SceneView, Split};
use crate::train::{
    member_seeds, train_from_points, LossRecord, Regime, TrainConfig, TrainOutcome, TrainingSet, TrainingView,
    ViewClass,
};
use crate::uncertainty::{build_cross_view_weights, normalize_maps, CrossViewWeights, UncertaintyMap};

/// Published held-out PSNR gains of uncertainty weighting over equal-weight
/// joint training on the NYC and SF street scenes, for context in reports.
pub const REFERENCE_HELD_OUT_GAIN: [(&str, f64); 2] = [("NYC", 0.66), ("SF", 0.59)];

/// Root exponents swept by default.
pub const DEFAULT_N_VALUES: [f64; 7] = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0];

/// Gap between consecutive protocol seeds. Ensemble members of seed `s` use
/// `s..s + M`, so seeds closer than `M` would share members.
pub const SEED_STRIDE: u64 = 1000;

/// `count` protocol seeds starting at `base`.
pub fn protocol_seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| base + k * SEED_STRIDE).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewMetrics {
    pub psnr: f64,
    pub ssim: f64,
}

/// Renders `field` at every view and scores it against the stored ground truth.
pub fn evaluate_views(
    field: &GaussianField,
    views: &[&SceneView],
    background: [f32; 3],
    settings: &RasterSettings,
) -> Result<Vec<ViewMetrics>> {
    views
        .iter()
        .map(|v| {
            let img = render_with(field, &v.camera, background, settings).image();
            Ok(ViewMetrics {
                psnr: psnr(&img, &v.image)?,
                ssim: ssim(&img, &v.image)?,
            })
        })
        .collect()
}

pub fn mean_metrics(m: &[ViewMetrics]) -> ViewMetrics {
    let n = m.len().max(1) as f64;
    ViewMetrics {
        psnr: m.iter().map(|v| v.psnr).sum::<f64>() / n,
        ssim: m.iter().map(|v| v.ssim).sum::<f64>() / n,
    }
}

/// Mean metrics of `field` on one split of the bundle.
pub fn evaluate_split(
    field: &GaussianField,
    bundle: &SceneBundle,
    split: Split,
    settings: &RasterSettings,
) -> Result<ViewMetrics> {
    let views = bundle.split(split);
    if views.is_empty() {
        return Err(Error::Missing(format!("split {} has no views", split.tag())));
    }
    Ok(mean_metrics(&evaluate_views(field, &views, bundle.spec.sky, settings)?))
}

fn training_view(v: &SceneView, class: ViewClass, weights: Option<WeightMap>) -> TrainingView {
    TrainingView {
        name: v.id.clone(),
        camera: v.camera,
        image: v.image.clone(),
        class,
        weights,
    }
}

/// Training set for a regime. Ground-train views always; aerial-train views
/// for the joint regimes, carrying `weights` (one per aerial view) in the
/// uncertainty regime.
pub fn training_set(bundle: &SceneBundle, regime: Regime, weights: Option<&[WeightMap]>) -> Result<TrainingSet> {
    let ground = bundle.split(Split::GroundTrain);
    let aerial = bundle.split(Split::AerialTrain);
    if ground.is_empty() {
        return Err(Error::Missing("split ground_train has no views".into()));
    }
    let mut views: Vec<TrainingView> = ground
        .iter()
        .map(|v| training_view(v, ViewClass::Ground, None))
        .collect();
    match regime {
        Regime::Ground => {}
        Regime::Joint => views.extend(aerial.iter().map(|v| training_view(v, ViewClass::Aerial, None))),
        Regime::Uncertainty => {
            let w = weights.ok_or_else(|| {
                Error::Missing("uncertainty regime needs aerial weight maps (run the uncertainty stage first)".into())
            })?;
            if w.len() != aerial.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} weight maps for {} aerial views",
                    w.len(),
                    aerial.len()
                )));
            }
            views.extend(
                aerial
                    .iter()
                    .zip(w)
                    .map(|(v, w)| training_view(v, ViewClass::Aerial, Some(w.clone()))),
            );
        }
    }
    if regime != Regime::Ground && aerial.is_empty() {
        return Err(Error::Missing("split aerial_train has no views".into()));
    }
    TrainingSet::new(views)
}

/// Runs `jobs` with at most `workers` of them in flight. Results keep job order.
pub fn run_jobs<J, R, F>(jobs: Vec<J>, workers: usize, f: F) -> Result<Vec<R>>
where
    J: Send,
    R: Send,
    F: Fn(J) -> Result<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| jobs.into_par_iter().map(&f).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    /// Concurrent trainers.
    pub workers: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            seeds: protocol_seeds(0, 3),
            workers: 1,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Empty("seed list"));
        }
        Ok(())
    }

    /// Training config for one run; the scene sky is the background.
    fn run_config(&self, bundle: &SceneBundle, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            background: bundle.spec.sky,
            ..self.train.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub regime: String,
    pub split: String,
    pub seed: u64,
    pub psnr: f64,
    pub ssim: f64,
}

/// Everything one seed of the protocol produced.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub fields: BTreeMap<Regime, GaussianField>,
    pub traces: BTreeMap<Regime, Vec<LossRecord>>,
    pub weights: CrossViewWeights,
}

#[derive(Debug, Clone)]
pub struct ProtocolResults {
    pub rows: Vec<ResultRow>,
    pub runs: Vec<SeedRun>,
}

fn ensure_splits(bundle: &SceneBundle) -> Result<()> {
    for s in Split::ALL {
        if bundle.split(s).is_empty() {
            return Err(Error::Missing(format!("split {} has no views", s.tag())));
        }
    }
    Ok(())
}

enum StageOne {
    Regime(u64, Regime),
    Member(u64, u64),
}

/// Ground run, joint run and ensemble for every seed, then the weight maps
/// and the uncertainty-weighted run. Member 0 of each ensemble is the
/// ground-regime run itself: same seed, same data, same config.
fn train_seeds(bundle: &SceneBundle, config: &ProtocolConfig) -> Result<Vec<(u64, TrainOutcome, TrainOutcome, CrossViewWeights)>> {
    config.validate()?;
    ensure_splits(bundle)?;
    let ground_set = training_set(bundle, Regime::Ground, None)?;
    let joint_set = training_set(bundle, Regime::Joint, None)?;

    let mut jobs = Vec::new();
    for &seed in &config.seeds {
        jobs.push(StageOne::Regime(seed, Regime::Ground));
        jobs.push(StageOne::Regime(seed, Regime::Joint));
        let cfg = config.run_config(bundle, seed);
        for m in member_seeds(&cfg).into_iter().skip(1) {
            jobs.push(StageOne::Member(seed, m));
        }
    }
    let outcomes = run_jobs(jobs, config.workers, |job| match job {
        StageOne::Regime(seed, regime) => {
            let set = if regime == Regime::Ground { &ground_set } else { &joint_set };
            log::info!("seed {seed}: training {} regime", regime.as_str());
            train_from_points(&bundle.points, set, &config.run_config(bundle, seed))
        }
        StageOne::Member(seed, m) => {
            log::info!("seed {seed}: training ensemble member with seed {m}");
            let cfg = TrainConfig {
                seed: m,
                ..config.run_config(bundle, seed)
            };
            train_from_points(&bundle.points, &ground_set, &cfg)
        }
    })?;

    let per_seed = 2 + config.train.members - 1;
    let ground_cams = bundle.cameras(Split::GroundTrain);
    let aerial_cams = bundle.cameras(Split::AerialTrain);
    let mut out = Vec::new();
    let mut it = outcomes.into_iter();
    for &seed in &config.seeds {
        let chunk: Vec<TrainOutcome> = it.by_ref().take(per_seed).collect();
        let mut chunk = chunk.into_iter();
        let ground = chunk.next().expect("ground run");
        let joint = chunk.next().expect("joint run");
        let mut ensemble = vec![ground.field.clone()];
        ensemble.extend(chunk.map(|o| o.field));
        let cv = config.run_config(bundle, seed).cross_view();
        let weights = build_cross_view_weights(&ensemble, &ground_cams, &aerial_cams, &cv)?;
        out.push((seed, ground, joint, weights));
    }
    Ok(out)
}

/// Trains all three regimes per seed and scores them on the test splits.
pub fn run_protocol(bundle: &SceneBundle, config: &ProtocolConfig) -> Result<ProtocolResults> {
    let staged = train_seeds(bundle, config)?;
    let jobs: Vec<_> = staged.iter().map(|(seed, _, _, w)| (*seed, w)).collect();
    let uc_runs = run_jobs(jobs, config.workers, |(seed, w)| {
        log::info!("seed {seed}: training uncertainty-weighted regime");
        let set = training_set(bundle, Regime::Uncertainty, Some(&w.weights))?;
        train_from_points(&bundle.points, &set, &config.run_config(bundle, seed))
    })?;

    let settings = config.train.raster();
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for ((seed, ground, joint, weights), uc) in staged.into_iter().zip(uc_runs) {
        let mut fields = BTreeMap::new();
        let mut traces = BTreeMap::new();
        for (regime, outcome) in [(Regime::Ground, ground), (Regime::Joint, joint), (Regime::Uncertainty, uc)] {
            for split in Split::TEST {
                let m = evaluate_split(&outcome.field, bundle, split, &settings)?;
                rows.push(ResultRow {
                    regime: regime.as_str().to_string(),
                    split: split.tag().to_string(),
                    seed,
                    psnr: m.psnr,
                    ssim: m.ssim,
                });
            }
            fields.insert(regime, outcome.field);
            traces.insert(regime, outcome.trace);
        }
        runs.push(SeedRun {
            seed,
            fields,
            traces,
            weights,
        });
    }
    Ok(ProtocolResults { rows, runs })
}

/// Mean, min and max of a metric over the rows matching a predicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Spread> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        Some(Spread {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    fn fmt(&self, digits: usize) -> String {
        format!(
            "{:.d$} ± {:.d$}",
            self.mean,
            0.5 * (self.max - self.min),
            d = digits
        )
    }
}

fn write_rows_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["regime", "split", "seed", "psnr", "ssim"])?;
    for r in rows {
        w.write_record([
            r.regime.clone(),
            r.split.clone(),
            r.seed.to_string(),
            format!("{:.6}", r.psnr),
            format!("{:.6}", r.ssim),
        ])?;
    }
    w.flush().map_err(|e| Error::io("results.csv", e))?;
    Ok(())
}

impl ProtocolResults {
    pub fn metric(&self, regime: Regime, split: Split, f: impl Fn(&ResultRow) -> f64) -> Option<Spread> {
        Spread::of(
            self.rows
                .iter()
                .filter(|r| r.regime == regime.as_str() && r.split == split.tag())
                .map(f),
        )
    }

    pub fn psnr(&self, regime: Regime, split: Split, seed: u64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.regime == regime.as_str() && r.split == split.tag() && r.seed == seed)
            .map(|r| r.psnr)
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.runs.iter().map(|r| r.seed).collect()
    }

    /// Per-seed held-out PSNR of the uncertainty regime minus the joint regime.
    pub fn held_out_gain(&self) -> Vec<f64> {
        self.seeds()
            .into_iter()
            .filter_map(|s| {
                Some(self.psnr(Regime::Uncertainty, Split::HeldOut, s)? - self.psnr(Regime::Joint, Split::HeldOut, s)?)
            })
            .collect()
    }

    /// Per-seed PSNR drop from held-out to shifted+rotated for a regime.
    pub fn rotation_drop(&self, regime: Regime) -> Vec<f64> {
        self.seeds()
            .into_iter()
            .filter_map(|s| Some(self.psnr(regime, Split::HeldOut, s)? - self.psnr(regime, Split::ShiftedRotated, s)?))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows_csv(&self.rows, out)
    }

    /// Text table: one row per
    /// regime, PSNR/SSIM per test split as mean ± half-range over seeds.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let seeds = self.seeds();
        let _ = writeln!(s, "seeds: {seeds:?}");
        let _ = write!(s, "{:<8}", "regime");
        for split in Split::TEST {
            let _ = write!(s, " | {:^33}", split.tag());
        }
        let _ = writeln!(s);
        let _ = write!(s, "{:<8}", "");
        for _ in Split::TEST {
            let _ = write!(s, " | {:^16} {:^16}", "PSNR", "SSIM");
        }
        let _ = writeln!(s);
        for regime in Regime::ALL {
            let _ = write!(s, "{:<8}", regime.as_str());
            for split in Split::TEST {
                let p = self.metric(regime, split, |r| r.psnr);
                let q = self.metric(regime, split, |r| r.ssim);
                let cell = |x: Option<Spread>, d| x.map_or("-".to_string(), |x| x.fmt(d));
                let _ = write!(s, " | {:^16} {:^16}", cell(p, 2), cell(q, 4));
            }
            let _ = writeln!(s);
        }
        let _ = writeln!(s);
        if let Some(g) = Spread::of(self.held_out_gain()) {
            let _ = writeln!(
                s,
                "held-out PSNR gain, uc - joint: mean {:+.3} (min {:+.3}, max {:+.3})",
                g.mean, g.min, g.max
            );
        }
        for regime in Regime::ALL {
            if let Some(d) = Spread::of(self.rotation_drop(regime)) {
                let _ = writeln!(
                    s,
                    "PSNR drop held-out -> shifted_rotated, {}: mean {:.3}",
                    regime.as_str(),
                    d.mean
                );
            }
        }
        let reference: Vec<String> = REFERENCE_HELD_OUT_GAIN
            .iter()
            .map(|(scene, g)| format!("{scene} {g:+.2}"))
            .collect();
        let _ = writeln!(s, "published reference gains, uc - joint: {}", reference.join(", "));
        s
    }

    /// Writes `results.csv` and `summary.txt`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("results.csv");
        let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let path = dir.join("summary.txt");
        std::fs::write(&path, self.summary()).map_err(|e| Error::io(&path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub n: f64,
    pub split: String,
    pub seed: u64,
    pub psnr: f64,
    pub ssim: f64,
}

/// Range and mean of the normalized aerial weights for one exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightStats {
    pub n: f64,
    pub seed: u64,
    pub min: f32,
    pub max: f32,
    pub mean: f32,
}

#[derive(Debug, Clone)]
pub struct AblationResults {
    pub rows: Vec<AblationRow>,
    pub weight_stats: Vec<WeightStats>,
    /// Normalized maps per `(seed, n)`, aerial view order.
    pub maps: Vec<(u64, f64, Vec<WeightMap>)>,
}

fn weight_stats(n: f64, seed: u64, maps: &[WeightMap]) -> WeightStats {
    let all = maps.iter().flat_map(|m| m.data.iter().copied());
    let (mut lo, mut hi, mut sum, mut count) = (f32::INFINITY, f32::NEG_INFINITY, 0.0f64, 0usize);
    for v in all {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v as f64;
        count += 1;
    }
    WeightStats {
        n,
        seed,
        min: lo,
        max: hi,
        mean: (sum / count.max(1) as f64) as f32,
    }
}

fn check_ns(ns: &[f64]) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::Empty("n list"));
    }
    if let Some(n) = ns.iter().find(|n| !(**n >= 1.0)) {
        return Err(Error::InvalidArgument(format!("root exponent must be >= 1, got {n}")));
    }
    Ok(())
}

/// Uncertainty-weighted training with everything fixed except the root exponent.
pub fn run_n_ablation(bundle: &SceneBundle, config: &ProtocolConfig, ns: &[f64]) -> Result<AblationResults> {
    check_ns(ns)?;
    config.validate()?;
    ensure_splits(bundle)?;
    let ground_set = training_set(bundle, Regime::Ground, None)?;
    let mut jobs = Vec::new();
    for &seed in &config.seeds {
        for m in member_seeds(&config.run_config(bundle, seed)) {
            jobs.push((seed, m));
        }
    }
    let members = run_jobs(jobs, config.workers, |(seed, m)| {
        log::info!("seed {seed}: training ensemble member with seed {m}");
        let cfg = TrainConfig {
            seed: m,
            ..config.run_config(bundle, seed)
        };
        train_from_points(&bundle.points, &ground_set, &cfg).map(|o| o.field)
    })?;

    let ground_cams = bundle.cameras(Split::GroundTrain);
    let aerial_cams = bundle.cameras(Split::AerialTrain);
    let mut raw = Vec::new();
    for (&seed, ensemble) in config.seeds.iter().zip(members.chunks(config.train.members)) {
        let cv = config.run_config(bundle, seed).cross_view();
        raw.push((seed, build_cross_view_weights(ensemble, &ground_cams, &aerial_cams, &cv)?.aerial_raw));
    }
    ablate_raw_maps(bundle, config, &raw, ns)
}

/// The training half of [`run_n_ablation`]: normalizes already projected raw
/// aerial maps (one list per seed) for every `n` and trains on each.
pub fn ablate_raw_maps(
    bundle: &SceneBundle,
    config: &ProtocolConfig,
    raw: &[(u64, Vec<UncertaintyMap>)],
    ns: &[f64],
) -> Result<AblationResults> {
    check_ns(ns)?;
    config.validate()?;
    ensure_splits(bundle)?;
    let mut maps = Vec::new();
    for (seed, r) in raw {
        for &n in ns {
            maps.push((*seed, n, normalize_maps(r, n)?));
        }
    }

    let jobs: Vec<_> = maps.iter().collect();
    let settings = config.train.raster();
    let scored = run_jobs(jobs, config.workers, |(seed, n, w)| {
        log::info!("seed {seed}: training with n = {n}");
        let set = training_set(bundle, Regime::Uncertainty, Some(w))?;
        let field = train_from_points(&bundle.points, &set, &config.run_config(bundle, *seed))?.field;
        Split::TEST
            .iter()
            .map(|&split| Ok((split, evaluate_split(&field, bundle, split, &settings)?)))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    let mut stats = Vec::new();
    for ((seed, n, w), per_split) in maps.iter().zip(scored) {
        stats.push(weight_stats(*n, *seed, w));
        for (split, m) in per_split {
            rows.push(AblationRow {
                n: *n,
                split: split.tag().to_string(),
                seed: *seed,
                psnr: m.psnr,
                ssim: m.ssim,
            });
        }
    }
    Ok(AblationResults {
        rows,
        weight_stats: stats,
        maps,
    })
}

impl AblationResults {
    pub fn n_values(&self) -> Vec<f64> {
        let mut ns: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !ns.contains(&r.n) {
                ns.push(r.n);
            }
        }
        ns
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "split", "seed", "psnr", "ssim"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.split.clone(),
                r.seed.to_string(),
                format!("{:.6}", r.psnr),
                format!("{:.6}", r.ssim),
            ])?;
        }
        w.flush().map_err(|e| Error::io("ablation.csv", e))?;
        Ok(())
    }

    /// Metric-vs-n table, PSNR mean over seeds per test split.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:>4}", "n");
        for split in Split::TEST {
            let _ = write!(s, " | {:^17}", split.tag());
        }
        let _ = writeln!(s, " | {:^15}", "mean weight");
        for n in self.n_values() {
            let _ = write!(s, "{n:>4}");
            for split in Split::TEST {
                let p = Spread::of(
                    self.rows
                        .iter()
                        .filter(|r| r.n == n && r.split == split.tag())
                        .map(|r| r.psnr),
                );
                let _ = write!(s, " | {:^17}", p.map_or("-".into(), |p| p.fmt(2)));
            }
            let w = Spread::of(
                self.weight_stats
                    .iter()
                    .filter(|w| w.n == n)
                    .map(|w| w.mean as f64),
            );
            let _ = writeln!(s, " | {:^15}", w.map_or("-".into(), |w| format!("{:.4}", w.mean)));
        }
        s
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("ablation.csv");
        let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let path = dir.join("ablation.txt");
        std::fs::write(&path, self.summary()).map_err(|e| Error::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_stats() {
        let s = Spread::of([1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.min, s.max), (2.0, 1.0, 3.0));
        assert!(Spread::of(Vec::<f64>::new()).is_none());
    }

    #[test]
    fn jobs_keep_order_and_propagate_errors() {
        let out = run_jobs((0..20).collect(), 3, |k: i32| Ok(k * k)).unwrap();
        assert_eq!(out, (0..20).map(|k| k * k).collect::<Vec<_>>());
        let err = run_jobs((0..5).collect(), 2, |k: i32| {
            if k == 3 {
                Err(Error::Empty("job"))
            } else {
                Ok(k)
            }
        });
        assert!(err.is_err());
    }

    #[test]
    fn weight_stats_range() {
        let w = WeightMap::new(2, 1, vec![0.25, 0.75]).unwrap();
        let s = weight_stats(6.0, 0, &[w]);
        assert_eq!((s.min, s.max, s.mean), (0.25, 0.75, 0.5));
    }
}
