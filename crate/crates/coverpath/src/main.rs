//! Command-line entry point: plan, evaluate, simulate, experiment, render.
//!
//! Exit codes follow the sysexits convention: 64 usage, 65 bad data, 66
//! missing input, 69 provider unavailable. `plan` exits 2 when the iteration
//! budget runs out and `evaluate` exits 1 on a rejected path.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coverpath::grid::{parse_map, CellCoord, GridMap};
use coverpath::harness::{
    self, load_experiment_config, render_path, summary_table, HarnessError,
};
use coverpath::llm::{ChatProvider, LlmError, ProviderConfig, ProviderKind, ScriptedOracle};
use coverpath::metrics::Thresholds;
use coverpath::nav::{self, FollowerConfig, FollowerMethod, NavError};
use coverpath::planner::{
    evaluate, parse_waypoints, PlanError, PlannerConfig, PlannerRegistry, PromptTemplate,
};
use coverpath::sim::{write_trajectory_log, MotionLimits, OdometryNoise, World};

const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_NOINPUT: u8 = 66;
const EX_UNAVAILABLE: u8 = 69;

#[derive(Parser)]
#[command(
    name = "coverpath",
    version,
    about = "Coverage path planning with LLM-proposed waypoints: plan, evaluate, simulate, run experiments, render"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propose a coverage path for a map and print it as col,row|col,row|...
    Plan(PlanArgs),
    /// Score a waypoint string against a map and exit 0/1 by verdict.
    Evaluate(EvaluateArgs),
    /// Drive a waypoint string in the simulator and report executed coverage.
    Simulate(SimulateArgs),
    /// Run a config-driven batch of seeded episodes and write reports.
    Experiment(ExperimentArgs),
    /// Draw a map, a waypoint path, and an optional trajectory to SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct ThresholdFlags {
    /// Minimum coverage fraction for acceptance.
    #[arg(long, default_value_t = Thresholds::DEFAULT_MIN_COVERAGE)]
    min_coverage: f64,
    /// Maximum accepted turns; default 2*(width+height).
    #[arg(long)]
    max_turns: Option<u32>,
    /// Maximum accepted length as a multiple of the shortest coverage length.
    #[arg(long, default_value_t = Thresholds::DEFAULT_MAX_LENGTH_RATIO)]
    max_length_ratio: f64,
}

impl ThresholdFlags {
    fn for_map(&self, map: &GridMap) -> Thresholds {
        Thresholds {
            min_coverage: self.min_coverage,
            max_turns: self.max_turns.unwrap_or(2 * (map.width() + map.height())),
            max_length_ratio: self.max_length_ratio,
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    /// Map file (text grid, '.' free and '#' obstacle).
    #[arg(long)]
    map: PathBuf,
    /// Start cell as col,row; omitted: drawn from --seed.
    #[arg(long)]
    start: Option<String>,
    /// Strategy: lawnmower | spiral | square | wallmow | llm.
    #[arg(long, default_value = "llm")]
    planner: String,
    /// Model id sent to the provider.
    #[arg(long, default_value = "gpt-4o")]
    model: String,
    /// Sampling temperature in [0, 2].
    #[arg(long, default_value_t = PlannerConfig::DEFAULT_TEMPERATURE)]
    temperature: f64,
    /// Iteration budget for the propose-evaluate loop.
    #[arg(long, default_value_t = PlannerConfig::DEFAULT_MAX_ITERATIONS)]
    max_iters: u32,
    /// Provider kind for --planner llm: openai | gemini | anthropic | scripted.
    #[arg(long, default_value = "openai")]
    provider: String,
    /// Override the provider endpoint URL.
    #[arg(long)]
    provider_url: Option<String>,
    /// Scripted-oracle response file (implies --provider scripted).
    #[arg(long)]
    script: Option<PathBuf>,
    /// Directory with system_prompt.txt and user_prompt.txt overrides.
    #[arg(long)]
    template_dir: Option<PathBuf>,
    /// Optional final cell appended to the task.
    #[arg(long)]
    target: Option<String>,
    /// Do not re-prompt with rejection feedback.
    #[arg(long)]
    no_feedback: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    thresholds: ThresholdFlags,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    map: PathBuf,
    /// Waypoint list as col,row|col,row|...
    #[arg(long)]
    waypoints: String,
    /// Start cell; defaults to the first waypoint.
    #[arg(long)]
    start: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    thresholds: ThresholdFlags,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    waypoints: String,
    /// Start cell; defaults to the first waypoint.
    #[arg(long)]
    start: Option<String>,
    /// Follower: turn_and_drive | dog_curve.
    #[arg(long, default_value = "turn_and_drive")]
    follower: String,
    /// Write the trajectory log (one JSON record per step) here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Odometry noise sigma for x/y, meters.
    #[arg(long, default_value_t = 0.0)]
    noise_xy: f64,
    /// Odometry noise sigma for heading, radians.
    #[arg(long, default_value_t = 0.0)]
    noise_heading: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for records, reports, and renders.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's episode count.
    #[arg(long)]
    episodes: Option<u32>,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's worker count.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    waypoints: String,
    /// Trajectory log to overlay.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Output SVG file.
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EX_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Plan(args) => cmd_plan(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Render(args) => cmd_render(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn load_map(path: &Path) -> Result<GridMap, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EX_NOINPUT, format!("{}: {e}", path.display())))?;
    parse_map(&text).map_err(|e| Failure::new(EX_DATAERR, format!("{}: {e}", path.display())))
}

fn parse_cell(text: &str, flag: &str) -> Result<CellCoord, Failure> {
    text.parse::<CellCoord>()
        .map_err(|e| Failure::new(EX_USAGE, format!("{flag}: {e}")))
}

fn seeded_start(map: &GridMap, seed: u64) -> CellCoord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<CellCoord> = map.free_cells().collect();
    free[rng.random_range(0..free.len())]
}

fn resolve_start(
    flag: &Option<String>,
    map: &GridMap,
    seed: u64,
    fallback: Option<CellCoord>,
) -> Result<CellCoord, Failure> {
    match flag {
        Some(text) => {
            let cell = parse_cell(text, "--start")?;
            if !map.is_free(cell) {
                return Err(Failure::new(
                    EX_DATAERR,
                    format!("--start {cell} is not a free cell"),
                ));
            }
            Ok(cell)
        }
        None => Ok(fallback.unwrap_or_else(|| seeded_start(map, seed))),
    }
}

fn build_provider(args: &PlanArgs) -> Result<Arc<dyn ChatProvider>, Failure> {
    if let Some(script) = &args.script {
        let oracle = ScriptedOracle::from_file(script).map_err(|e| match e {
            LlmError::ScriptFile(msg) => Failure::new(EX_NOINPUT, msg),
            other => Failure::new(EX_DATAERR, other.to_string()),
        })?;
        return Ok(Arc::new(oracle));
    }
    let kind: ProviderKind = args
        .provider
        .parse()
        .map_err(|e: String| Failure::new(EX_USAGE, e))?;
    if kind == ProviderKind::Scripted {
        return Err(Failure::new(
            EX_USAGE,
            "--provider scripted needs --script FILE",
        ));
    }
    let mut config = ProviderConfig::new(kind);
    config.base_url = args.provider_url.clone();
    let provider = config
        .build()
        .map_err(|e| Failure::new(EX_UNAVAILABLE, e.to_string()))?;
    Ok(Arc::from(provider))
}

fn cmd_plan(args: PlanArgs) -> CmdResult {
    let map = load_map(&args.map)?;
    let start = resolve_start(&args.start, &map, args.seed, None)?;

    let mut cfg = PlannerConfig::new(&args.model, args.thresholds.for_map(&map));
    cfg.max_iterations = args.max_iters;
    cfg.temperature = args.temperature;
    cfg.feedback_on_reject = !args.no_feedback;
    if let Some(target) = &args.target {
        cfg.target = Some(parse_cell(target, "--target")?);
    }
    if let Some(dir) = &args.template_dir {
        cfg.template = PromptTemplate::from_dir(dir)
            .map_err(|e| Failure::new(EX_NOINPUT, format!("{}: {e}", dir.display())))?;
    }

    let registry = if args.planner == "llm" {
        PlannerRegistry::with_llm(build_provider(&args)?)
    } else {
        PlannerRegistry::with_patterns()
    };
    let planner = registry
        .get(&args.planner)
        .map_err(|e| Failure::new(EX_USAGE, e.to_string()))?;

    match planner.plan(&map, start, &cfg) {
        Ok(outcome) => {
            println!("{}", outcome.path.to_bar_string());
            eprintln!("{}", outcome.report);
            eprintln!("attempts:        {}", outcome.attempts);
            eprintln!("inference_secs:  {:.3}", outcome.inference_seconds);
            Ok(0)
        }
        Err(PlanError::Exhausted {
            attempts,
            last_report,
        }) => {
            eprintln!("no accepted path after {attempts} attempts");
            if let Some(report) = last_report {
                eprintln!("{report}");
            }
            Ok(2)
        }
        Err(PlanError::Provider(e)) => Err(Failure::new(EX_UNAVAILABLE, e.to_string())),
        Err(e) => Err(Failure::new(EX_DATAERR, e.to_string())),
    }
}

fn parse_waypoints_arg(text: &str, map: &GridMap) -> Result<coverpath::WaypointPath, Failure> {
    parse_waypoints(text, map).map_err(|e| Failure::new(EX_DATAERR, e.to_string()))
}

fn cmd_evaluate(args: EvaluateArgs) -> CmdResult {
    let map = load_map(&args.map)?;
    let path = parse_waypoints_arg(&args.waypoints, &map)?;
    let start = resolve_start(&args.start, &map, args.seed, Some(path.first()))?;
    let report = evaluate(&map, start, &path, &args.thresholds.for_map(&map))
        .map_err(|e| Failure::new(EX_DATAERR, e.to_string()))?;
    println!("{report}");
    Ok(if report.accepted { 0 } else { 1 })
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let map = load_map(&args.map)?;
    let path = parse_waypoints_arg(&args.waypoints, &map)?;
    let start = resolve_start(&args.start, &map, args.seed, Some(path.first()))?;
    let method: FollowerMethod = args
        .follower
        .parse()
        .map_err(|e: String| Failure::new(EX_USAGE, e))?;

    let mut world = World::at_cell(map.clone(), start, 0.0)
        .map_err(|e| Failure::new(EX_DATAERR, e.to_string()))?;
    world.noise = OdometryNoise {
        sigma_xy: args.noise_xy,
        sigma_heading: args.noise_heading,
    };
    world.seed_noise(args.seed);
    let cfg = FollowerConfig::for_map(method, &map);
    let limits = MotionLimits::default();

    let (outcome, stopped) = match nav::follow(&mut world, &path, &cfg, &limits) {
        Ok(outcome) => (outcome, None),
        Err(NavError::SafetyStop {
            pose,
            range,
            partial,
        }) => (*partial, Some(format!("safety stop at {pose}, range {range:.3} m"))),
        Err(NavError::StalledProgress {
            target,
            steps,
            partial,
        }) => (
            *partial,
            Some(format!("stalled after {steps} steps short of {target}")),
        ),
        Err(e) => return Err(Failure::new(EX_DATAERR, e.to_string())),
    };

    let visited = nav::visited_cells(&outcome.trajectory, &map, cfg.reach_threshold);
    let executed_cr = visited.iter().filter(|c| map.is_free(**c)).count() as f64
        / map.free_cell_count() as f64;
    println!("executed_coverage: {:.4}", executed_cr);
    println!("driving_seconds:   {:.2}", outcome.driving_seconds);
    println!("steps:             {}", outcome.trajectory.len() - 1);
    if let Some(out) = &args.out {
        write_trajectory_log(out, &outcome.trajectory)
            .map_err(|e| Failure::new(EX_NOINPUT, format!("{}: {e}", out.display())))?;
        println!("trajectory:        {}", out.display());
    }
    match stopped {
        Some(reason) => {
            eprintln!("{reason}");
            Ok(1)
        }
        None => Ok(0),
    }
}

fn cmd_experiment(args: ExperimentArgs) -> CmdResult {
    if args.episodes == Some(0) {
        return Err(Failure::new(EX_USAGE, "--episodes must be at least 1"));
    }
    let mut plan = load_experiment_config(&args.config).map_err(map_harness_error)?;
    if let Some(episodes) = args.episodes {
        plan.episodes_per_cell = episodes;
    }
    if let Some(seed) = args.seed {
        plan.base_seed = seed;
    }
    if let Some(workers) = args.workers {
        plan.workers = workers.max(1);
    }
    let output = harness::run_experiment(&plan).map_err(map_harness_error)?;
    harness::write_outputs(&args.out, &output)
        .map_err(|e| Failure::new(EX_NOINPUT, e.to_string()))?;
    print!("{}", summary_table(&output.summary));
    eprintln!(
        "wrote {} episodes, {} renders, summary.csv under {}",
        output.records.len(),
        output.renders.len(),
        args.out.display()
    );
    Ok(0)
}

fn map_harness_error(err: HarnessError) -> Failure {
    match err {
        HarnessError::Io(e) => Failure::new(EX_NOINPUT, e.to_string()),
        HarnessError::Llm(e) => Failure::new(EX_UNAVAILABLE, e.to_string()),
        HarnessError::Plan(PlanError::Provider(e)) => {
            Failure::new(EX_UNAVAILABLE, e.to_string())
        }
        other => Failure::new(EX_DATAERR, other.to_string()),
    }
}

fn cmd_render(args: RenderArgs) -> CmdResult {
    let map = load_map(&args.map)?;
    let path = parse_waypoints_arg(&args.waypoints, &map)?;
    let trajectory = match &args.trajectory {
        Some(file) => Some(coverpath::sim::read_trajectory_log(file).map_err(|e| {
            Failure::new(EX_NOINPUT, format!("{}: {e}", file.display()))
        })?),
        None => None,
    };
    let svg = render_path(&map, &path, trajectory.as_deref());
    std::fs::write(&args.out, svg)
        .map_err(|e| Failure::new(EX_NOINPUT, format!("{}: {e}", args.out.display())))?;
    println!("{}", args.out.display());
    Ok(0)
}
