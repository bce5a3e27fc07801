//! Experiment configuration file handling.
//!
//! Config files are TOML; relative paths inside them (map files, script
//! files, template dirs) resolve against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::grid::{parse_map, CellCoord, GridMap};
use crate::llm::ProviderKind;
use crate::nav::FollowerMethod;
use crate::planner::{PlannerConfig, PromptTemplate};

use super::maps::builtin_map;
use super::{ExperimentPlan, HarnessError, ProviderSpec, StartMode};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_episodes")]
    episodes: u32,
    #[serde(default = "default_workers")]
    workers: usize,
    /// "random" or a fixed "col,row" start cell.
    #[serde(default = "default_start")]
    start: String,
    #[serde(default)]
    planner: RawPlanner,
    #[serde(default)]
    follower: RawFollower,
    maps: Vec<RawMap>,
    providers: Vec<RawProvider>,
}

fn default_seed() -> u64 {
    0
}

fn default_episodes() -> u32 {
    10
}

fn default_workers() -> usize {
    1
}

fn default_start() -> String {
    "random".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlanner {
    #[serde(default = "default_planner_name")]
    name: String,
    #[serde(default = "default_max_iterations")]
    max_iterations: u32,
    #[serde(default = "default_temperature")]
    temperature: f64,
    #[serde(default = "default_feedback")]
    feedback_on_reject: bool,
    #[serde(default = "default_min_coverage")]
    min_coverage: f64,
    #[serde(default = "default_max_length_ratio")]
    max_length_ratio: f64,
    /// Omitted: defaults to 2*(width+height) per map.
    max_turns: Option<u32>,
    template_dir: Option<PathBuf>,
}

impl Default for RawPlanner {
    fn default() -> Self {
        RawPlanner {
            name: default_planner_name(),
            max_iterations: default_max_iterations(),
            temperature: default_temperature(),
            feedback_on_reject: default_feedback(),
            min_coverage: default_min_coverage(),
            max_length_ratio: default_max_length_ratio(),
            max_turns: None,
            template_dir: None,
        }
    }
}

fn default_planner_name() -> String {
    "llm".to_string()
}

fn default_max_iterations() -> u32 {
    PlannerConfig::DEFAULT_MAX_ITERATIONS
}

fn default_temperature() -> f64 {
    PlannerConfig::DEFAULT_TEMPERATURE
}

fn default_feedback() -> bool {
    true
}

fn default_min_coverage() -> f64 {
    crate::metrics::Thresholds::DEFAULT_MIN_COVERAGE
}

fn default_max_length_ratio() -> f64 {
    crate::metrics::Thresholds::DEFAULT_MAX_LENGTH_RATIO
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFollower {
    #[serde(default = "default_method")]
    method: String,
}

impl Default for RawFollower {
    fn default() -> Self {
        RawFollower {
            method: default_method(),
        }
    }
}

fn default_method() -> String {
    "turn_and_drive".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    id: String,
    builtin: Option<String>,
    file: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProvider {
    kind: String,
    model: String,
    base_url: Option<String>,
    /// Single script file for every map.
    script: Option<PathBuf>,
    /// Per-map script files, keyed by map id.
    #[serde(default)]
    scripts: BTreeMap<String, PathBuf>,
}

/// Parse and resolve a config file into a runnable plan.
pub fn load_experiment_config(path: impl AsRef<Path>) -> Result<ExperimentPlan, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    parse_experiment_config(&text, &base_dir)
}

pub fn parse_experiment_config(
    text: &str,
    base_dir: &Path,
) -> Result<ExperimentPlan, HarnessError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    if raw.episodes == 0 {
        return Err(HarnessError::Config("episodes must be at least 1".into()));
    }
    if raw.maps.is_empty() {
        return Err(HarnessError::Config("at least one map is required".into()));
    }
    if raw.providers.is_empty() {
        return Err(HarnessError::Config(
            "at least one provider is required".into(),
        ));
    }

    let resolve = |p: &PathBuf| -> PathBuf {
        if p.is_absolute() {
            p.clone()
        } else {
            base_dir.join(p)
        }
    };

    let mut maps: Vec<(String, GridMap)> = Vec::new();
    for m in &raw.maps {
        let map = match (&m.builtin, &m.file) {
            (Some(name), None) => builtin_map(name)
                .ok_or_else(|| HarnessError::Config(format!("unknown builtin map {name:?}")))?,
            (None, Some(file)) => {
                let text = std::fs::read_to_string(resolve(file))?;
                parse_map(&text)?
            }
            _ => {
                return Err(HarnessError::Config(format!(
                    "map {:?} must set exactly one of builtin or file",
                    m.id
                )))
            }
        };
        maps.push((m.id.clone(), map));
    }

    let mut providers = Vec::new();
    for p in &raw.providers {
        let kind: ProviderKind = p
            .kind
            .parse()
            .map_err(HarnessError::Config)?;
        if kind == ProviderKind::Scripted && p.script.is_none() && p.scripts.is_empty() {
            return Err(HarnessError::Config(format!(
                "scripted provider {:?} needs a script or scripts table",
                p.model
            )));
        }
        providers.push(ProviderSpec {
            kind,
            model: p.model.clone(),
            base_url: p.base_url.clone(),
            script: p.script.as_ref().map(&resolve),
            scripts: p
                .scripts
                .iter()
                .map(|(k, v)| (k.clone(), resolve(v)))
                .collect(),
        });
    }

    let start = match raw.start.as_str() {
        "random" => StartMode::Random,
        text => StartMode::Fixed(
            text.parse::<CellCoord>()
                .map_err(|e| HarnessError::Config(format!("bad start: {e}")))?,
        ),
    };

    let follower_method: FollowerMethod = raw
        .follower
        .method
        .parse()
        .map_err(HarnessError::Config)?;

    let template = match &raw.planner.template_dir {
        Some(dir) => PromptTemplate::from_dir(resolve(dir))?,
        None => PromptTemplate::default(),
    };

    Ok(ExperimentPlan {
        maps,
        providers,
        planner_name: raw.planner.name.clone(),
        episodes_per_cell: raw.episodes,
        base_seed: raw.seed,
        start,
        max_iterations: raw.planner.max_iterations,
        temperature: raw.planner.temperature,
        feedback_on_reject: raw.planner.feedback_on_reject,
        min_coverage: raw.planner.min_coverage,
        max_length_ratio: raw.planner.max_length_ratio,
        max_turns: raw.planner.max_turns,
        template,
        follower_method,
        workers: raw.workers.max(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
episodes = 2

[[maps]]
id = "m"
builtin = "free5x5"

[[providers]]
kind = "scripted"
model = "demo"
script = "responses.txt"
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let plan = parse_experiment_config(MINIMAL, Path::new("/tmp/cfg")).unwrap();
        assert_eq!(plan.base_seed, 7);
        assert_eq!(plan.episodes_per_cell, 2);
        assert_eq!(plan.planner_name, "llm");
        assert_eq!(plan.max_iterations, 5);
        assert_eq!(plan.temperature, 0.6);
        assert_eq!(plan.follower_method, FollowerMethod::TurnAndDrive);
        assert_eq!(plan.workers, 1);
        assert!(matches!(plan.start, StartMode::Random));
        // relative script path resolves against the config dir
        assert_eq!(
            plan.providers[0].script.as_deref().unwrap(),
            Path::new("/tmp/cfg/responses.txt")
        );
    }

    #[test]
    fn fixed_start_and_bad_values_are_validated() {
        let fixed = MINIMAL.replace("seed = 7", "seed = 7\nstart = \"2,3\"");
        let plan = parse_experiment_config(&fixed, Path::new(".")).unwrap();
        assert!(matches!(
            plan.start,
            StartMode::Fixed(CellCoord { col: 2, row: 3 })
        ));

        let zero = MINIMAL.replace("episodes = 2", "episodes = 0");
        assert!(matches!(
            parse_experiment_config(&zero, Path::new(".")),
            Err(HarnessError::Config(_))
        ));

        let bad_map = MINIMAL.replace("builtin = \"free5x5\"", "builtin = \"never\"");
        assert!(parse_experiment_config(&bad_map, Path::new(".")).is_err());

        let scriptless = MINIMAL.replace("script = \"responses.txt\"", "");
        assert!(parse_experiment_config(&scriptless, Path::new(".")).is_err());
    }
}
