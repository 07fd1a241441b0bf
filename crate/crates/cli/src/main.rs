use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use radar_annotate::annotate::View;
use radar_annotate::clustering::BandwidthGrid;
use radar_annotate::io::{self, load_config, PipelineConfig, SequenceStore};
use radar_annotate::pipeline::{self, EvalMode, SeedPlan, SeedRequest, SeedSource, TrackSet};
use radar_annotate::Scene;

/// Exit status when the run finished but some seeded instance was not tracked.
const EXIT_UNTRACKED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "radar-annotate", version, about = "Semi-automatic radar annotation pipeline")]
struct Cli {
    /// Pipeline configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Sequence directory holding all stage outputs.
    #[arg(long, global = true, default_value = ".")]
    seq: PathBuf,

    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize raw radar cubes for every scene frame.
    Simulate(SimulateArgs),
    /// Turn raw cubes into range-Doppler and range-angle maps.
    Process,
    /// CFAR detection and DoA-Doppler point clouds.
    Detect(DetectArgs),
    /// Seed, track and annotate instances.
    Annotate(AnnotateArgs),
    /// Compare predicted annotations with a reference.
    Eval(EvalArgs),
    /// Summarize the annotated sequence.
    Report,
    /// All stages from simulation to report.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario file copied into the sequence directory.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Complex noise standard deviation per raw sample.
    #[arg(long)]
    noise_sigma: Option<f64>,
}

#[derive(Debug, Args, Default)]
struct DetectArgs {
    #[arg(long)]
    cfar_pfa: Option<f64>,
    /// Training cells per side and axis.
    #[arg(long)]
    cfar_train: Option<usize>,
    /// Guard cells per side and axis.
    #[arg(long)]
    cfar_guard: Option<usize>,
}

#[derive(Debug, Args, Default)]
struct AnnotateArgs {
    /// Frame of an explicit seed (pairs with --seed-instance).
    #[arg(long)]
    seed_frame: Vec<usize>,
    /// Instance of an explicit seed (pairs with --seed-frame).
    #[arg(long)]
    seed_instance: Vec<u32>,
    /// Seed from camera detections instead of scene ground truth.
    #[arg(long)]
    from_detections: bool,
    /// Camera calibration (overrides paths.calibration).
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Comma-separated bandwidths, or `lo:hi:count` for a geometric grid.
    #[arg(long)]
    bandwidth_grid: Option<String>,
    #[arg(long)]
    mc_samples: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    simulate: SimulateArgs,
    #[command(flatten)]
    detect: DetectArgs,
    #[command(flatten)]
    annotate: AnnotateArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ViewArg {
    Rd,
    Ra,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Dense,
    Sparse,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Predicted annotations (JSON lines). Defaults to the sequence's annotations.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Reference annotations (JSON lines). Defaults to scene ground truth.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dense")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "rd")]
    view: ViewArg,
    /// Write the metric report as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_grid(text: &str) -> Result<BandwidthGrid> {
    let grid = if let Some((lo, rest)) = text.split_once(':') {
        let (hi, n) = rest.split_once(':').context("geometric grid must be lo:hi:count")?;
        BandwidthGrid::geometric(lo.trim().parse()?, hi.trim().parse()?, n.trim().parse()?)?
    } else {
        let values = text
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .context("bandwidth grid must be comma-separated numbers")?;
        BandwidthGrid::new(values)?
    };
    Ok(grid)
}

fn load(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.root_seed = seed;
    }
    Ok(config)
}

fn apply_detect(config: &mut PipelineConfig, args: &DetectArgs) {
    if let Some(p) = args.cfar_pfa {
        config.cfar.probability_false_alarm = p;
    }
    if let Some(t) = args.cfar_train {
        config.cfar.train_cells = t;
    }
    if let Some(g) = args.cfar_guard {
        config.cfar.guard_cells = g;
    }
}

fn apply_annotate(config: &mut PipelineConfig, args: &AnnotateArgs) -> Result<SeedPlan> {
    if let Some(text) = &args.bandwidth_grid {
        config.clustering.bandwidth_grid = parse_grid(text)?;
    }
    if let Some(n) = args.mc_samples {
        config.clustering.mc_samples = n;
    }
    if let Some(c) = &args.calibration {
        config.paths.calibration = Some(c.clone());
    }
    if args.seed_frame.len() != args.seed_instance.len() {
        bail!("--seed-frame and --seed-instance must be given the same number of times");
    }
    Ok(SeedPlan {
        source: if args.from_detections {
            SeedSource::CameraDetections
        } else {
            SeedSource::Scene
        },
        requests: args
            .seed_frame
            .iter()
            .zip(&args.seed_instance)
            .map(|(&frame, &instance_id)| SeedRequest { frame, instance_id })
            .collect(),
    })
}

fn apply_simulate(config: &mut PipelineConfig, store: &SequenceStore, args: &SimulateArgs) -> Result<()> {
    if let Some(sigma) = args.noise_sigma {
        config.noise_sigma = sigma;
    }
    if let Some(path) = &args.scene {
        let scene: Scene = io::read_json(path).with_context(|| format!("reading scene {}", path.display()))?;
        store.write_scene(&scene)?;
    }
    Ok(())
}

fn summarize(set: &TrackSet) -> ExitCode {
    for t in &set.tracks {
        println!(
            "instance {} ({}): {} of {} frames annotated",
            t.instance_id,
            t.category.name(),
            t.annotated().count(),
            t.frames.len()
        );
    }
    for f in &set.failures {
        println!("instance {}: seed at frame {} failed: {}", f.instance_id, f.frame, f.reason);
    }
    if set.all_tracked() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_UNTRACKED)
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("RADAR_ANNOTATE_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("RADAR_ANNOTATE_THREADS={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    let mut config = load(&cli)?;
    let store = SequenceStore::create(&cli.seq)?;
    let code = match &cli.command {
        Command::Simulate(args) => {
            apply_simulate(&mut config, &store, args)?;
            config.validate()?;
            let n = pipeline::simulate(&store, &config)?;
            println!("simulated {n} frames into {}", store.root().display());
            ExitCode::SUCCESS
        }
        Command::Process => {
            let n = pipeline::process(&store, &config)?;
            println!("processed {n} frames");
            ExitCode::SUCCESS
        }
        Command::Detect(args) => {
            apply_detect(&mut config, args);
            config.validate()?;
            let n = pipeline::detect(&store, &config)?;
            println!("detected {n} frames -> {}", store.clouds_path().display());
            ExitCode::SUCCESS
        }
        Command::Annotate(args) => {
            let plan = apply_annotate(&mut config, args)?;
            config.validate()?;
            let set = pipeline::annotate(&store, &config, &plan)?;
            summarize(&set)
        }
        Command::Eval(args) => {
            let scene = store.scene_path().exists().then(|| store.read_scene()).transpose()?;
            let radar = pipeline::effective_radar(&config, scene.as_ref());
            let pred_path = args.pred.clone().unwrap_or_else(|| store.annotations_path());
            let pred = pipeline::read_annotations(&pred_path)
                .with_context(|| format!("reading predictions {}", pred_path.display()))?;
            let truth = match (&args.truth, &scene) {
                (Some(p), _) => {
                    pipeline::read_annotations(p).with_context(|| format!("reading reference {}", p.display()))?
                }
                (None, Some(scene)) => pipeline::ground_truth_annotations(scene, &radar, &config)?,
                (None, None) => bail!("no --truth given and {} has no scene.json", store.root().display()),
            };
            let (view, view_name) = match args.view {
                ViewArg::Rd => (View::RangeDoppler, "range-Doppler"),
                ViewArg::Ra => (View::RangeAngle, "range-angle"),
            };
            let (mode, mode_name) = match args.mode {
                ModeArg::Dense => (EvalMode::Dense, "dense"),
                ModeArg::Sparse => (EvalMode::Sparse, "sparse"),
            };
            let report = pipeline::evaluate(&pred, &truth, view, mode, &radar)?;
            print!("{}", report.to_table(&format!("{view_name} ({mode_name})")));
            if let Some(out) = &args.json {
                io::write_json(out, &report)?;
            }
            ExitCode::SUCCESS
        }
        Command::Report => {
            let report = pipeline::report(&store)?;
            print!("{}", report.to_text());
            ExitCode::SUCCESS
        }
        Command::Run(args) => {
            apply_simulate(&mut config, &store, &args.simulate)?;
            apply_detect(&mut config, &args.detect);
            let plan = apply_annotate(&mut config, &args.annotate)?;
            config.validate()?;
            let (set, report) = pipeline::run_pipeline(&store, &config, &plan)?;
            print!("{}", report.to_text());
            summarize(&set)
        }
    };
    info!("done");
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
