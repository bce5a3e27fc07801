//! Episode orchestration: seeded random starts, the plan-evaluate-drive
//! pipeline, batch experiments over (map x provider) cells, metric and
//! timing aggregation, and report emission.
//!
//! Reported times follow the split used throughout: `t_inference` is wall
//! clock spent on provider calls plus evaluation, `t_drive` is simulated
//! driving seconds, and `t_total` is their sum plus the (wall clock)
//! orchestration overhead around them. The artifact has no real robot, so
//! mixing the two clocks is deliberate and both parts are reported.

mod config;
pub mod maps;
mod render;

pub use config::{load_experiment_config, parse_experiment_config};
pub use render::render_path;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CellCoord, GridError, GridMap};
use crate::llm::{ChatProvider, LlmError, ProviderConfig, ProviderKind, ScriptedOracle};
use crate::metrics::{self, EvaluationReport, MetricsError, Thresholds};
use crate::nav::{self, FollowerConfig, FollowerMethod, NavError};
use crate::planner::{
    parse_waypoints, PathPlanner, PlanError, PlannerConfig, PlannerRegistry, PromptTemplate,
};
use crate::sim::{MotionLimits, TrajectorySample, World};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Where each episode's robot starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartMode {
    /// Drawn uniformly from the map's free cells using the episode seed.
    Random,
    Fixed(CellCoord),
}

/// One provider column of the experiment grid.
#[derive(Debug, Clone)]
pub struct ProviderSpec {
    pub kind: ProviderKind,
    pub model: String,
    pub base_url: Option<String>,
    pub script: Option<PathBuf>,
    /// Per-map script files; takes precedence over `script`.
    pub scripts: BTreeMap<String, PathBuf>,
}

impl ProviderSpec {
    /// Build a fresh provider for one episode. Scripted oracles get a fresh
    /// cursor so episodes stay independent under any execution order.
    pub fn instantiate(&self, map_id: &str) -> Result<Arc<dyn ChatProvider>, LlmError> {
        match self.kind {
            ProviderKind::Scripted => {
                let path = self
                    .scripts
                    .get(map_id)
                    .or(self.script.as_ref())
                    .ok_or_else(|| {
                        LlmError::ScriptFile(format!("no script configured for map {map_id:?}"))
                    })?;
                Ok(Arc::new(ScriptedOracle::from_file(path)?))
            }
            kind => {
                let mut config = ProviderConfig::new(kind);
                config.base_url = self.base_url.clone();
                Ok(Arc::from(config.build()?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureKind {
    ExhaustedIterations,
    SafetyStop,
    StalledProgress,
    Provider,
    Other,
}

/// Everything one episode produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub map_id: String,
    pub model_id: String,
    pub seed: u64,
    pub start: CellCoord,
    /// Accepted waypoint list in bar form, absent when planning failed.
    pub path: Option<String>,
    pub report: Option<EvaluationReport>,
    pub shortest_length: f64,
    /// Coverage actually driven, from the trajectory.
    pub executed_cr: f64,
    /// Distance actually driven, in meters.
    pub executed_length: f64,
    pub attempts: u32,
    pub t_inference: f64,
    pub t_drive: f64,
    pub t_total: f64,
    pub success: bool,
    pub failure_kind: Option<FailureKind>,
}

impl EpisodeRecord {
    /// (coverage, shortest, actual) tuple for the batch score. Clean episodes
    /// score their evaluated path; failures score what was actually driven.
    pub fn cpl_tuple(&self) -> (f64, f64, f64) {
        match (&self.report, self.failure_kind) {
            (Some(report), None) => (
                report.coverage_rate,
                report.shortest_length,
                report.path_length,
            ),
            _ => (self.executed_cr, self.shortest_length, self.executed_length),
        }
    }

    pub fn coverage_value(&self) -> f64 {
        match (&self.report, self.failure_kind) {
            (Some(report), None) => report.coverage_rate,
            _ => self.executed_cr,
        }
    }

    pub fn length_value(&self) -> f64 {
        match (&self.report, self.failure_kind) {
            (Some(report), None) => report.path_length,
            _ => self.executed_length,
        }
    }
}

/// Run one seeded episode: draw a start, plan through the strategy, execute
/// on a fresh world, measure. Episode-level failures land in `failure_kind`,
/// never abort the batch.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    map_id: &str,
    model_id: &str,
    map: &GridMap,
    planner: &dyn PathPlanner,
    planner_cfg: &PlannerConfig,
    follower_cfg: &FollowerConfig,
    limits: &MotionLimits,
    seed: u64,
    start_mode: StartMode,
) -> (EpisodeRecord, Option<Vec<TrajectorySample>>) {
    let episode_started = Instant::now();
    let start = match start_mode {
        StartMode::Fixed(cell) => cell,
        StartMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let free: Vec<CellCoord> = map.free_cells().collect();
            free[rng.random_range(0..free.len())]
        }
    };
    let shortest_length =
        metrics::shortest_coverage_length(map, start).expect("start is a free cell");
    let free_count = map.free_cell_count() as f64;

    let plan_started = Instant::now();
    let setup_wall = (plan_started - episode_started).as_secs_f64();
    let planned = planner.plan(map, start, planner_cfg);
    let plan_wall = plan_started.elapsed().as_secs_f64();

    match planned {
        Ok(outcome) => {
            let executed = World::at_cell(map.clone(), start, 0.0)
                .map_err(|e| NavError::InvalidPath(e.to_string()))
                .and_then(|mut world| {
                    world.seed_noise(seed);
                    nav::follow(&mut world, &outcome.path, follower_cfg, limits)
                });

            let (trajectory, t_drive, failure) = match executed {
                Ok(out) => (out.trajectory, out.driving_seconds, None),
                Err(NavError::SafetyStop { partial, .. }) => (
                    partial.trajectory,
                    partial.driving_seconds,
                    Some(FailureKind::SafetyStop),
                ),
                Err(NavError::StalledProgress { partial, .. }) => (
                    partial.trajectory,
                    partial.driving_seconds,
                    Some(FailureKind::StalledProgress),
                ),
                Err(_) => (Vec::new(), 0.0, Some(FailureKind::Other)),
            };

            let visited = nav::visited_cells(&trajectory, map, follower_cfg.reach_threshold);
            let executed_cr =
                visited.iter().filter(|c| map.is_free(**c)).count() as f64 / free_count;
            let executed_length: f64 = trajectory
                .windows(2)
                .map(|w| w[1].v.abs() * (w[1].t - w[0].t))
                .sum();

            let t_inference = outcome.inference_seconds;
            // orchestration overhead: wall time through planning beyond the
            // measured inference/evaluation, plus episode setup; the analysis
            // after driving is reporting, not part of the run
            let overhead = setup_wall + (plan_wall - t_inference).max(0.0);
            let success = failure.is_none()
                && outcome.report.accepted
                && executed_cr >= planner_cfg.thresholds.min_coverage;
            let record = EpisodeRecord {
                map_id: map_id.to_string(),
                model_id: model_id.to_string(),
                seed,
                start,
                path: Some(outcome.path.to_bar_string()),
                report: Some(outcome.report),
                shortest_length,
                executed_cr,
                executed_length,
                attempts: outcome.attempts,
                t_inference,
                t_drive,
                t_total: t_inference + t_drive + overhead,
                success,
                failure_kind: failure,
            };
            (record, Some(trajectory))
        }
        Err(err) => {
            let (failure, attempts, report) = match err {
                PlanError::Exhausted {
                    attempts,
                    last_report,
                } => (FailureKind::ExhaustedIterations, attempts, last_report),
                PlanError::Provider(_) => (FailureKind::Provider, 0, None),
                _ => (FailureKind::Other, 0, None),
            };
            // the robot never moved; it still occupies its start cell
            let executed_cr = 1.0 / free_count;
            let record = EpisodeRecord {
                map_id: map_id.to_string(),
                model_id: model_id.to_string(),
                seed,
                start,
                path: None,
                report,
                shortest_length,
                executed_cr,
                executed_length: 0.0,
                attempts,
                t_inference: plan_wall,
                t_drive: 0.0,
                t_total: setup_wall + plan_wall,
                success: false,
                failure_kind: Some(failure),
            };
            (record, None)
        }
    }
}

/// A fully resolved experiment: maps, providers, tuning, and seeds.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub maps: Vec<(String, GridMap)>,
    pub providers: Vec<ProviderSpec>,
    pub planner_name: String,
    pub episodes_per_cell: u32,
    pub base_seed: u64,
    pub start: StartMode,
    pub max_iterations: u32,
    pub temperature: f64,
    pub feedback_on_reject: bool,
    pub min_coverage: f64,
    pub max_length_ratio: f64,
    pub max_turns: Option<u32>,
    pub template: PromptTemplate,
    pub follower_method: FollowerMethod,
    pub workers: usize,
}

impl ExperimentPlan {
    fn thresholds_for(&self, map: &GridMap) -> Thresholds {
        Thresholds {
            min_coverage: self.min_coverage,
            max_turns: self
                .max_turns
                .unwrap_or(2 * (map.width() + map.height())),
            max_length_ratio: self.max_length_ratio,
        }
    }

    fn planner_config(&self, map: &GridMap, model: &str) -> PlannerConfig {
        let mut cfg = PlannerConfig::new(model, self.thresholds_for(map));
        cfg.max_iterations = self.max_iterations;
        cfg.temperature = self.temperature;
        cfg.feedback_on_reject = self.feedback_on_reject;
        cfg.template = self.template.clone();
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct RenderArtifact {
    pub filename: String,
    pub svg: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<EpisodeRecord>,
    pub summary: ExperimentSummary,
    pub renders: Vec<RenderArtifact>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub map_id: String,
    pub model_id: String,
    pub episodes: u32,
    pub cpl: f64,
    pub mean_pl: f64,
    pub mean_cr_pct: f64,
    pub success_rate: f64,
    pub mean_t: f64,
    pub mean_ti: f64,
    pub mean_td: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub rows: Vec<SummaryRow>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one episode, decorrelated across the experiment grid.
pub fn episode_seed(base_seed: u64, job_index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(job_index.wrapping_add(1)))
}

struct Job {
    index: usize,
    map_idx: usize,
    provider_idx: usize,
    episode: u32,
}

/// Run the full (maps x providers x episodes) grid and aggregate.
///
/// With the same plan and base seed the records' deterministic fields and the
/// summary CSV are identical across runs. Episodes are independent; `workers`
/// only controls how many run at once.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentOutput, HarnessError> {
    let mut jobs = Vec::new();
    for map_idx in 0..plan.maps.len() {
        for provider_idx in 0..plan.providers.len() {
            for episode in 0..plan.episodes_per_cell {
                jobs.push(Job {
                    index: jobs.len(),
                    map_idx,
                    provider_idx,
                    episode,
                });
            }
        }
    }

    let run_job = |job: &Job| -> Result<(EpisodeRecord, Option<RenderArtifact>), HarnessError> {
        let (map_id, map) = &plan.maps[job.map_idx];
        let spec = &plan.providers[job.provider_idx];
        let registry = if plan.planner_name == "llm" {
            PlannerRegistry::with_llm(spec.instantiate(map_id)?)
        } else {
            PlannerRegistry::with_patterns()
        };
        let planner = registry.get(&plan.planner_name)?;
        let planner_cfg = plan.planner_config(map, &spec.model);
        let follower_cfg = FollowerConfig::for_map(plan.follower_method, map);
        let limits = MotionLimits::default();
        let seed = episode_seed(plan.base_seed, job.index as u64);
        let (record, trajectory) = run_episode(
            map_id,
            &spec.model,
            map,
            planner,
            &planner_cfg,
            &follower_cfg,
            &limits,
            seed,
            plan.start,
        );
        let render = record.path.as_ref().map(|bar| {
            let path = parse_waypoints(bar, map).expect("record paths are valid");
            RenderArtifact {
                filename: format!(
                    "{}_{}_{:03}.svg",
                    sanitize(map_id),
                    sanitize(&spec.model),
                    job.episode
                ),
                svg: render_path(map, &path, trajectory.as_deref()),
            }
        });
        Ok((record, render))
    };

    let mut results: Vec<Option<(EpisodeRecord, Option<RenderArtifact>)>> =
        (0..jobs.len()).map(|_| None).collect();
    if plan.workers <= 1 {
        for job in &jobs {
            results[job.index] = Some(run_job(job)?);
        }
    } else {
        let next = AtomicUsize::new(0);
        let slots = Mutex::new(&mut results);
        let first_error: Mutex<Option<HarnessError>> = Mutex::new(None);
        std::thread::scope(|scope| {
            for _ in 0..plan.workers.min(jobs.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= jobs.len() {
                        break;
                    }
                    match run_job(&jobs[i]) {
                        Ok(done) => {
                            slots.lock().expect("slot lock")[i] = Some(done);
                        }
                        Err(err) => {
                            let mut guard = first_error.lock().expect("error lock");
                            guard.get_or_insert(err);
                            break;
                        }
                    }
                });
            }
        });
        if let Some(err) = first_error.into_inner().expect("error lock") {
            return Err(err);
        }
    }

    let mut records = Vec::with_capacity(jobs.len());
    let mut renders = Vec::new();
    for slot in results {
        let (record, render) = slot.expect("every job ran");
        records.push(record);
        renders.extend(render);
    }
    let summary = summarize(&records)?;
    Ok(ExperimentOutput {
        records,
        summary,
        renders,
    })
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Aggregate per (map, model) cell, in first-appearance order. Means are
/// plain arithmetic means over all episodes of the cell, failures included.
pub fn summarize(records: &[EpisodeRecord]) -> Result<ExperimentSummary, HarnessError> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<&EpisodeRecord>> = BTreeMap::new();
    for record in records {
        let key = (record.map_id.clone(), record.model_id.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(record);
    }
    let mut rows = Vec::new();
    for key in order {
        let group = &groups[&key];
        let n = group.len() as f64;
        let tuples: Vec<(f64, f64, f64)> = group.iter().map(|r| r.cpl_tuple()).collect();
        let cpl = metrics::cpl(&tuples)?;
        rows.push(SummaryRow {
            map_id: key.0,
            model_id: key.1,
            episodes: group.len() as u32,
            cpl,
            mean_pl: group.iter().map(|r| r.length_value()).sum::<f64>() / n,
            mean_cr_pct: group.iter().map(|r| r.coverage_value()).sum::<f64>() / n * 100.0,
            success_rate: group.iter().filter(|r| r.success).count() as f64 / n,
            mean_t: group.iter().map(|r| r.t_total).sum::<f64>() / n,
            mean_ti: group.iter().map(|r| r.t_inference).sum::<f64>() / n,
            mean_td: group.iter().map(|r| r.t_drive).sum::<f64>() / n,
        });
    }
    Ok(ExperimentSummary { rows })
}

/// CSV report, one row per (map, model) cell.
///
/// Fixed-precision formatting keeps reruns byte-identical: the time columns
/// use two decimals so the microsecond-scale wall overhead inside T and Ti
/// sits far from any rounding boundary, and simulated driving time lands on
/// the integration grid exactly.
pub fn summary_csv(summary: &ExperimentSummary) -> String {
    let mut out = String::from("map,model,N,CPL,PL,CR,success_rate,T,Ti,Td\n");
    for row in &summary.rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.3},{:.2},{:.3},{:.2},{:.2},{:.2}\n",
            row.map_id,
            row.model_id,
            row.episodes,
            row.cpl,
            row.mean_pl,
            row.mean_cr_pct,
            row.success_rate,
            row.mean_t,
            row.mean_ti,
            row.mean_td,
        ));
    }
    out
}

/// Human-readable aligned table with the same columns as the CSV.
pub fn summary_table(summary: &ExperimentSummary) -> String {
    let mut out = format!(
        "{:<12} {:<22} {:>4} {:>8} {:>9} {:>7} {:>6} {:>9} {:>7} {:>9}\n",
        "map", "model", "N", "CPL", "PL", "CR%", "SR", "T", "Ti", "Td"
    );
    for row in &summary.rows {
        out.push_str(&format!(
            "{:<12} {:<22} {:>4} {:>8.4} {:>9.3} {:>7.2} {:>6.3} {:>9.2} {:>7.2} {:>9.2}\n",
            row.map_id,
            row.model_id,
            row.episodes,
            row.cpl,
            row.mean_pl,
            row.mean_cr_pct,
            row.success_rate,
            row.mean_t,
            row.mean_ti,
            row.mean_td,
        ));
    }
    out
}

/// Persist an experiment: `episodes.jsonl`, `summary.csv`, `summary.txt`, and
/// one SVG per rendered episode under `renders/`.
pub fn write_outputs(dir: impl AsRef<Path>, output: &ExperimentOutput) -> std::io::Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut jsonl = String::new();
    for record in &output.records {
        jsonl.push_str(&serde_json::to_string(record).expect("records serialize"));
        jsonl.push('\n');
    }
    std::fs::write(dir.join("episodes.jsonl"), jsonl)?;
    std::fs::write(dir.join("summary.csv"), summary_csv(&output.summary))?;
    std::fs::write(dir.join("summary.txt"), summary_table(&output.summary))?;
    let render_dir = dir.join("renders");
    std::fs::create_dir_all(&render_dir)?;
    for artifact in &output.renders {
        std::fs::write(render_dir.join(&artifact.filename), &artifact.svg)?;
    }
    Ok(())
}
