//! `cvgs`: scene generation, training, cross-view uncertainty and evaluation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cvgs::evaluation::{
    evaluate_views, mean_metrics, run_n_ablation, run_protocol, training_set, ProtocolConfig, DEFAULT_N_VALUES,
};
use cvgs::raster::render_with;
use cvgs::scenegen::{generate, SceneBundle, SceneSpec, Split};
use cvgs::train::{save_trace_csv, train_from_points, train_members, Regime, TrainConfig};
use cvgs::uncertainty::{build_cross_view_weights, CrossViewWeights};
use cvgs::GaussianField;

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "cvgs", version, about = "Cross-view uncertainty-weighted Gaussian splatting")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Random seed; overrides the seed in the config or scene spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only print warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Training config, flat `key = value` text.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Config override, `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic road scene and write its manifest.
    GenerateScene {
        /// Scene spec, flat `key = value` text (defaults when omitted).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one regime and write a checkpoint.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// ground, joint or uc.
        #[arg(long)]
        regime: Regime,
        /// Weight maps from the uncertainty stage (default: `<scene>/uncertainty`).
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Loss trace CSV (default: next to the checkpoint).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Train the ground-only ensemble used for uncertainty estimation.
    TrainEnsemble {
        #[arg(long)]
        manifest: PathBuf,
        /// Ensemble size (default from config).
        #[arg(long)]
        members: Option<usize>,
        /// Output directory for `member_XX.gsuc` checkpoints.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build cross-view weight maps for the aerial views from an ensemble.
    Uncertainty {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory written by `train-ensemble`.
        #[arg(long)]
        ensemble: PathBuf,
        /// Output directory (default: `<scene>/uncertainty`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a checkpoint at one of the scene cameras.
    Render {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        /// Camera id from the manifest, e.g. `h003`.
        #[arg(long)]
        camera: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write the expected-depth map (UCMAP001).
        #[arg(long)]
        depth: Option<PathBuf>,
    },
    /// PSNR/SSIM of a checkpoint on one split.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        /// held_out, shifted, shifted_rotated, ground_train or aerial_train.
        #[arg(long)]
        split: Split,
    },
    /// Full three-regime comparison over several seeds.
    Protocol {
        #[arg(long)]
        manifest: PathBuf,
        /// Number of seeds: `--seed`, `--seed` + 1000, ...
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        /// Concurrent trainers.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Output directory for results.csv and summary.txt.
        #[arg(long, default_value = "protocol")]
        out: PathBuf,
    },
    /// Uncertainty-weighted training across root exponents.
    AblateN {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_N_VALUES.to_vec())]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value = "ablation")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.common.quiet {
            log::LevelFilter::Warn
        } else {
            log::LevelFilter::Info
        })
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.common.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn train_config(common: &Common) -> Result<TrainConfig> {
    let mut cfg = match &common.config {
        Some(p) => TrainConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => TrainConfig::default(),
    };
    for kv in &common.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects KEY=VALUE, got `{kv}`");
        };
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_scene(manifest: &Path) -> Result<SceneBundle> {
    SceneBundle::load(manifest).with_context(|| format!("loading scene {}", manifest.display()))
}

/// Training config for a scene: the sky is the background.
fn scene_config(common: &Common, scene: &SceneBundle) -> Result<TrainConfig> {
    Ok(TrainConfig {
        background: scene.spec.sky,
        ..train_config(common)?
    })
}

fn scene_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn default_weights_dir(manifest: &Path) -> PathBuf {
    scene_dir(manifest).join("uncertainty")
}

fn member_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("member_{k:02}.gsuc"))
}

fn load_ensemble(dir: &Path) -> Result<Vec<GaussianField>> {
    let mut fields = Vec::new();
    while member_path(dir, fields.len()).exists() {
        fields.push(GaussianField::load(member_path(dir, fields.len()))?);
    }
    if fields.len() < 2 {
        bail!(
            "{} holds {} ensemble member(s); run `cvgs train-ensemble --out {}` first",
            dir.display(),
            fields.len(),
            dir.display()
        );
    }
    Ok(fields)
}

fn protocol_config(common: &Common, seeds: usize, workers: usize) -> Result<ProtocolConfig> {
    if seeds == 0 {
        bail!("--seeds must be positive");
    }
    let train = train_config(common)?;
    let base = common.seed.unwrap_or(0);
    Ok(ProtocolConfig {
        train,
        seeds: cvgs::evaluation::protocol_seeds(base, seeds),
        workers,
    })
}

fn run(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::GenerateScene { spec, out } => {
            let mut s = match spec {
                Some(p) => SceneSpec::load(p).with_context(|| format!("loading spec {}", p.display()))?,
                None => SceneSpec::default(),
            };
            if let Some(seed) = common.seed {
                s.seed = seed;
            }
            let bundle = generate(&s)?;
            let manifest = bundle.save(out)?;
            log::info!("wrote {} views to {}", bundle.views.len(), manifest.display());
            println!("{}", manifest.display());
        }
        Command::Train {
            manifest,
            regime,
            weights,
            out,
            trace,
        } => {
            let scene = load_scene(manifest)?;
            let cfg = scene_config(common, &scene)?;
            let maps = if *regime == Regime::Uncertainty {
                let dir = weights.clone().unwrap_or_else(|| default_weights_dir(manifest));
                let n = scene.split(Split::AerialTrain).len();
                Some(CrossViewWeights::load_weights(&dir, n).context(
                    "the uc regime needs aerial weight maps; run `cvgs train-ensemble` then `cvgs uncertainty`",
                )?)
            } else {
                None
            };
            let set = training_set(&scene, *regime, maps.as_deref())?;
            let outcome = train_from_points(&scene.points, &set, &cfg)?;
            outcome.field.save(out)?;
            let trace_path = trace.clone().unwrap_or_else(|| out.with_extension("trace.csv"));
            save_trace_csv(&outcome.trace, &trace_path)?;
            log::info!("wrote {} ({} gaussians)", out.display(), outcome.field.len());
        }
        Command::TrainEnsemble { manifest, members, out } => {
            let scene = load_scene(manifest)?;
            let mut cfg = scene_config(common, &scene)?;
            if let Some(m) = members {
                cfg.members = *m;
            }
            cfg.validate()?;
            let set = training_set(&scene, Regime::Ground, None)?;
            let seeds = cvgs::train::member_seeds(&cfg);
            let outcomes = train_members(&scene.points, &set, &cfg, &seeds)?;
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            for (k, o) in outcomes.iter().enumerate() {
                o.field.save(member_path(out, k))?;
            }
            log::info!("wrote {} members to {}", outcomes.len(), out.display());
        }
        Command::Uncertainty { manifest, ensemble, out } => {
            let scene = load_scene(manifest)?;
            let cfg = scene_config(common, &scene)?;
            let fields = load_ensemble(ensemble)?;
            let weights = build_cross_view_weights(
                &fields,
                &scene.cameras(Split::GroundTrain),
                &scene.cameras(Split::AerialTrain),
                &cfg.cross_view(),
            )?;
            let dir = out.clone().unwrap_or_else(|| default_weights_dir(manifest));
            weights.save(&dir)?;
            log::info!("wrote {} aerial weight maps to {}", weights.weights.len(), dir.display());
        }
        Command::Render {
            manifest,
            ckpt,
            camera,
            out,
            depth,
        } => {
            let scene = load_scene(manifest)?;
            let cfg = scene_config(common, &scene)?;
            let view = scene
                .view(camera)
                .with_context(|| format!("no camera `{camera}` in {}", manifest.display()))?;
            let field = GaussianField::load(ckpt)?;
            let r = render_with(&field, &view.camera, cfg.background, &cfg.raster());
            r.image().save_png(out)?;
            if let Some(d) = depth {
                r.depth_map().save(d)?;
            }
        }
        Command::Evaluate { manifest, ckpt, split } => {
            let scene = load_scene(manifest)?;
            let cfg = scene_config(common, &scene)?;
            let field = GaussianField::load(ckpt)?;
            let views = scene.split(*split);
            if views.is_empty() {
                bail!("split {} has no views", split.tag());
            }
            let metrics = evaluate_views(&field, &views, cfg.background, &cfg.raster())?;
            println!("view,psnr,ssim");
            for (v, m) in views.iter().zip(&metrics) {
                println!("{},{:.4},{:.5}", v.id, m.psnr, m.ssim);
            }
            let mean = mean_metrics(&metrics);
            println!("mean,{:.4},{:.5}", mean.psnr, mean.ssim);
        }
        Command::Protocol {
            manifest,
            seeds,
            workers,
            out,
        } => {
            let scene = load_scene(manifest)?;
            let cfg = protocol_config(common, *seeds, *workers)?;
            let results = run_protocol(&scene, &cfg)?;
            results.save(out)?;
            print!("{}", results.summary());
        }
        Command::AblateN {
            manifest,
            values,
            seeds,
            workers,
            out,
        } => {
            let scene = load_scene(manifest)?;
            let cfg = protocol_config(common, *seeds, *workers)?;
            let results = run_n_ablation(&scene, &cfg, values)?;
            results.save(out)?;
            print!("{}", results.summary());
        }
    }
    Ok(())
}
