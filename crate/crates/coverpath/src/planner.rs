//! The global-planning layer: prompt construction, bar-separated waypoint
//! parsing, the propose-evaluate-accept loop, and the planner registry used
//! by the CLI and harness to select a strategy by name.
//!
//! The loop asks a provider for a waypoint list, parses it, evaluates it
//! against the thresholds, and either returns the first accepted path or
//! re-prompts with the rejection reasons, up to `max_iterations` provider
//! calls. The evaluator is a total gate: nothing unaccepted ever reaches
//! navigation.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::grid::{CellCoord, GridMap, WaypointPath};
use crate::llm::{ChatProvider, ChatRequest, LlmError};
use crate::metrics::{self, EvaluationReport, MetricsError, Thresholds};
use crate::patterns::{self, PatternError};

const DEFAULT_SYSTEM_TEMPLATE: &str = include_str!("../templates/system_prompt.txt");
const DEFAULT_USER_TEMPLATE: &str = include_str!("../templates/user_prompt.txt");

pub const DEFAULT_TASK_TEXT: &str =
    "visit every free cell of the grid at least once, starting from the start cell.";
pub const DEFAULT_FORMAT_INSTRUCTION: &str = "Respond with only the waypoint list: cells written \
as \"col,row\" and separated by \"|\", for example \"0,0|0,1|1,1\". No explanations, no code \
fences, no other text.";

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("empty response")]
    EmptyResponse,
    #[error("malformed token {token:?} at index {index}")]
    MalformedToken { token: String, index: usize },
    #[error("waypoint {0} is out of bounds")]
    OutOfBounds(CellCoord),
    #[error("waypoint {0} is an obstacle")]
    OnObstacle(CellCoord),
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid planner config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Provider(#[from] LlmError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("no accepted path after {attempts} attempts")]
    Exhausted {
        attempts: u32,
        last_report: Option<EvaluationReport>,
    },
    #[error("unknown planner {0:?}")]
    UnknownPlanner(String),
}

/// Prompt pair with named placeholders: `{width}`, `{height}`, `{obstacles}`,
/// `{start}`, `{task}`, `{format}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            system: DEFAULT_SYSTEM_TEMPLATE.to_string(),
            user: DEFAULT_USER_TEMPLATE.to_string(),
        }
    }
}

impl PromptTemplate {
    /// Load `system_prompt.txt` and `user_prompt.txt` from a directory.
    pub fn from_dir(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let dir = dir.as_ref();
        Ok(PromptTemplate {
            system: std::fs::read_to_string(dir.join("system_prompt.txt"))?,
            user: std::fs::read_to_string(dir.join("user_prompt.txt"))?,
        })
    }
}

/// Everything the prompt needs to describe one planning problem.
#[derive(Debug, Clone)]
pub struct PromptContext<'a> {
    pub map: &'a GridMap,
    pub start: CellCoord,
    pub task_text: String,
    pub format_instruction: String,
}

impl<'a> PromptContext<'a> {
    pub fn new(map: &'a GridMap, start: CellCoord) -> Result<Self, PlanError> {
        if !map.is_free(start) {
            return Err(PlanError::InvalidConfig(format!(
                "start cell {start} is not a free cell"
            )));
        }
        Ok(PromptContext {
            map,
            start,
            task_text: DEFAULT_TASK_TEXT.to_string(),
            format_instruction: DEFAULT_FORMAT_INSTRUCTION.to_string(),
        })
    }
}

/// Render the (system, user) prompt pair. Deterministic: the same context
/// always yields identical strings.
pub fn build_prompt(template: &PromptTemplate, ctx: &PromptContext<'_>) -> (String, String) {
    let obstacles = if ctx.map.obstacles().next().is_none() {
        "none".to_string()
    } else {
        ctx.map
            .obstacles()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    };
    let render = |text: &str| {
        text.replace("{width}", &ctx.map.width().to_string())
            .replace("{height}", &ctx.map.height().to_string())
            .replace("{obstacles}", &obstacles)
            .replace("{start}", &ctx.start.to_string())
            .replace("{task}", &ctx.task_text)
            .replace("{format}", &ctx.format_instruction)
    };
    (render(&template.system), render(&template.user))
}

/// Parse a bar-separated waypoint response against a map.
///
/// Tolerates surrounding whitespace and stray line breaks inside the
/// sequence, skips empty tokens from leading/trailing bars, and collapses
/// consecutive duplicate cells.
pub fn parse_waypoints(text: &str, map: &GridMap) -> Result<WaypointPath, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ParseError::EmptyResponse);
    }
    let mut cells: Vec<CellCoord> = Vec::new();
    for (index, raw) in trimmed.split('|').enumerate() {
        let token = raw.trim();
        if token.is_empty() {
            continue;
        }
        let compact: String = token.chars().filter(|c| !c.is_whitespace()).collect();
        let cell = parse_token(&compact).ok_or_else(|| ParseError::MalformedToken {
            token: token.to_string(),
            index,
        })?;
        if !map.in_bounds(cell) {
            return Err(ParseError::OutOfBounds(cell));
        }
        if map.is_obstacle(cell) {
            return Err(ParseError::OnObstacle(cell));
        }
        if cells.last() != Some(&cell) {
            cells.push(cell);
        }
    }
    if cells.is_empty() {
        return Err(ParseError::EmptyResponse);
    }
    Ok(WaypointPath::new(cells, map).expect("tokens were validated cell by cell"))
}

fn parse_token(compact: &str) -> Option<CellCoord> {
    let (col, row) = compact.split_once(',')?;
    Some(CellCoord::new(col.parse().ok()?, row.parse().ok()?))
}

/// Evaluate a proposed path from `start`: the start cell is prepended when
/// missing (bridged like any other gap) so the report reflects real travel.
pub fn evaluate(
    map: &GridMap,
    start: CellCoord,
    path: &WaypointPath,
    th: &Thresholds,
) -> Result<EvaluationReport, MetricsError> {
    if !map.is_free(start) {
        return Err(MetricsError::StartOnObstacle(start));
    }
    let anchored = path
        .with_start(start, map)
        .map_err(|e| MetricsError::InvalidPath(e.to_string()))?;
    metrics::evaluate_path(map, start, &anchored, th)
}

/// Loop configuration: iteration budget, thresholds, sampling temperature,
/// model, optional target cell appended to the task, and whether rejected
/// attempts re-prompt with feedback.
#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub max_iterations: u32,
    pub thresholds: Thresholds,
    pub temperature: f64,
    pub model_id: String,
    pub target: Option<CellCoord>,
    pub feedback_on_reject: bool,
    pub template: PromptTemplate,
}

impl PlannerConfig {
    pub const DEFAULT_MAX_ITERATIONS: u32 = 5;
    pub const DEFAULT_TEMPERATURE: f64 = 0.6;

    pub fn new(model_id: impl Into<String>, thresholds: Thresholds) -> Self {
        PlannerConfig {
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            thresholds,
            temperature: Self::DEFAULT_TEMPERATURE,
            model_id: model_id.into(),
            target: None,
            feedback_on_reject: true,
            template: PromptTemplate::default(),
        }
    }

    fn validate(&self) -> Result<(), PlanError> {
        if self.max_iterations < 1 {
            return Err(PlanError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(PlanError::InvalidConfig(format!(
                "temperature must be in [0, 2], got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// Result of a successful planning run.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub path: WaypointPath,
    pub report: EvaluationReport,
    pub attempts: u32,
    /// Cumulative provider latency plus evaluation time, in wall seconds.
    pub inference_seconds: f64,
}

enum Rejection {
    Unparseable(ParseError),
    Evaluated(EvaluationReport),
}

fn feedback_message(rejection: &Rejection, previous: &str) -> String {
    let problems = match rejection {
        Rejection::Unparseable(err) => format!("the response could not be parsed: {err}"),
        Rejection::Evaluated(report) => {
            let reasons: Vec<String> = report
                .reasons
                .iter()
                .map(|r| r.to_string())
                .collect();
            format!(
                "the path was rejected: {} (coverage {:.3}, length {:.2}, turns {}, shortest {:.2})",
                reasons.join(", "),
                report.coverage_rate,
                report.path_length,
                report.turn_count,
                report.shortest_length,
            )
        }
    };
    format!(
        "Your previous response was rejected.\nPrevious response:\n{previous}\nProblem: \
{problems}\nSend a corrected waypoint list in the required format."
    )
}

/// Run the propose-evaluate-accept loop against a provider.
///
/// Makes at most `cfg.max_iterations` provider calls. Every returned path has
/// an accepted report; exhaustion is an error carrying the last report.
/// Provider failures propagate after the provider's own retries.
pub fn plan(
    map: &GridMap,
    start: CellCoord,
    provider: &dyn ChatProvider,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    cfg.validate()?;
    let mut ctx = PromptContext::new(map, start)?;
    if let Some(target) = cfg.target {
        ctx.task_text = format!("{} End at cell {target}.", ctx.task_text);
    }
    let (system, initial_user) = build_prompt(&cfg.template, &ctx);
    let mut user_messages = vec![initial_user];
    let mut inference_seconds = 0.0;
    let mut last_report = None;

    for attempt in 1..=cfg.max_iterations {
        let request = ChatRequest::new(
            system.clone(),
            user_messages.clone(),
            cfg.temperature,
            cfg.model_id.clone(),
        )?;
        let response = provider.complete(&request)?;
        inference_seconds += response.latency.as_secs_f64();

        let eval_started = Instant::now();
        let rejection = match parse_waypoints(&response.text, map) {
            Ok(path) => {
                let report = evaluate(map, start, &path, &cfg.thresholds)?;
                if report.accepted {
                    let anchored = path
                        .with_start(start, map)
                        .expect("evaluate already anchored this path");
                    inference_seconds += eval_started.elapsed().as_secs_f64();
                    return Ok(PlanOutcome {
                        path: anchored,
                        report,
                        attempts: attempt,
                        inference_seconds,
                    });
                }
                last_report = Some(report.clone());
                Rejection::Evaluated(report)
            }
            Err(err) => Rejection::Unparseable(err),
        };
        inference_seconds += eval_started.elapsed().as_secs_f64();

        if cfg.feedback_on_reject && attempt < cfg.max_iterations {
            user_messages.push(feedback_message(&rejection, &response.text));
        }
    }
    Err(PlanError::Exhausted {
        attempts: cfg.max_iterations,
        last_report,
    })
}

/// A planning strategy selectable by name.
pub trait PathPlanner: Send + Sync {
    fn name(&self) -> &'static str;
    fn plan(
        &self,
        map: &GridMap,
        start: CellCoord,
        cfg: &PlannerConfig,
    ) -> Result<PlanOutcome, PlanError>;
}

/// LLM-backed strategy: the full propose-evaluate-accept loop.
pub struct LlmPlanner {
    provider: Arc<dyn ChatProvider>,
}

impl LlmPlanner {
    pub fn new(provider: Arc<dyn ChatProvider>) -> Self {
        LlmPlanner { provider }
    }
}

impl PathPlanner for LlmPlanner {
    fn name(&self) -> &'static str {
        "llm"
    }

    fn plan(
        &self,
        map: &GridMap,
        start: CellCoord,
        cfg: &PlannerConfig,
    ) -> Result<PlanOutcome, PlanError> {
        plan(map, start, self.provider.as_ref(), cfg)
    }
}

/// Deterministic pattern generator behind the same gate as the LLM loop.
struct PatternPlanner {
    name: &'static str,
    generate: fn(&GridMap, CellCoord) -> Result<WaypointPath, PatternError>,
}

impl PathPlanner for PatternPlanner {
    fn name(&self) -> &'static str {
        self.name
    }

    fn plan(
        &self,
        map: &GridMap,
        start: CellCoord,
        cfg: &PlannerConfig,
    ) -> Result<PlanOutcome, PlanError> {
        let started = Instant::now();
        let path = (self.generate)(map, start)?;
        let report = evaluate(map, start, &path, &cfg.thresholds)?;
        let outcome = PlanOutcome {
            path,
            report: report.clone(),
            attempts: 1,
            inference_seconds: started.elapsed().as_secs_f64(),
        };
        if !report.accepted {
            return Err(PlanError::Exhausted {
                attempts: 1,
                last_report: Some(report),
            });
        }
        Ok(outcome)
    }
}

/// Name-indexed collection of planning strategies.
pub struct PlannerRegistry {
    entries: Vec<Box<dyn PathPlanner>>,
}

impl PlannerRegistry {
    /// Registry holding the four pattern strategies.
    pub fn with_patterns() -> Self {
        let mut registry = PlannerRegistry {
            entries: Vec::new(),
        };
        registry.register(Box::new(PatternPlanner {
            name: "lawnmower",
            generate: patterns::lawnmower,
        }));
        registry.register(Box::new(PatternPlanner {
            name: "spiral",
            generate: patterns::square_spiral,
        }));
        registry.register(Box::new(PatternPlanner {
            name: "square",
            generate: patterns::square_move,
        }));
        registry.register(Box::new(PatternPlanner {
            name: "wallmow",
            generate: patterns::wallfollow_then_lawnmower,
        }));
        registry
    }

    /// Pattern strategies plus an LLM strategy bound to `provider`.
    pub fn with_llm(provider: Arc<dyn ChatProvider>) -> Self {
        let mut registry = Self::with_patterns();
        registry.register(Box::new(LlmPlanner::new(provider)));
        registry
    }

    /// Add a strategy, replacing any existing entry with the same name.
    pub fn register(&mut self, planner: Box<dyn PathPlanner>) {
        self.entries.retain(|p| p.name() != planner.name());
        self.entries.push(planner);
    }

    pub fn get(&self, name: &str) -> Result<&dyn PathPlanner, PlanError> {
        self.entries
            .iter()
            .find(|p| p.name() == name)
            .map(|p| p.as_ref())
            .ok_or_else(|| PlanError::UnknownPlanner(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|p| p.name()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_map;
    use crate::llm::{ChatResponse, ScriptedOracle};
    use crate::metrics::RejectReason;
    use std::sync::Mutex;

    fn cell(col: u32, row: u32) -> CellCoord {
        CellCoord::new(col, row)
    }

    fn config(map: &GridMap) -> PlannerConfig {
        PlannerConfig::new("scripted", Thresholds::for_map(map))
    }

    /// Wraps a provider, counting calls and capturing requests.
    struct Recording<P> {
        inner: P,
        pub requests: Mutex<Vec<ChatRequest>>,
    }

    impl<P: ChatProvider> Recording<P> {
        fn new(inner: P) -> Self {
            Recording {
                inner,
                requests: Mutex::new(Vec::new()),
            }
        }

        fn calls(&self) -> usize {
            self.requests.lock().unwrap().len()
        }
    }

    impl<P: ChatProvider> ChatProvider for Recording<P> {
        fn name(&self) -> &str {
            self.inner.name()
        }

        fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
            self.requests.lock().unwrap().push(req.clone());
            self.inner.complete(req)
        }
    }

    fn lawnmower_string(w: u32, h: u32) -> String {
        let map = GridMap::open(w, h).unwrap();
        patterns::lawnmower(&map, cell(0, 0))
            .unwrap()
            .to_bar_string()
    }

    #[test]
    fn build_prompt_includes_problem_facts() {
        let map = GridMap::open(5, 5).unwrap();
        let ctx = PromptContext::new(&map, cell(2, 3)).unwrap();
        let (system, user) = build_prompt(&PromptTemplate::default(), &ctx);
        assert!(user.contains("5 columns by 5 rows"));
        assert!(user.contains("2,3"));
        assert!(user.contains("Blocked cells: none"));
        assert!(user.contains("col,row"));
        assert!(user.contains('|'));
        assert!(system.contains("turn in place"));
    }

    #[test]
    fn build_prompt_lists_obstacles_and_is_deterministic() {
        let map = parse_map("...\n.#.\n...").unwrap();
        let ctx = PromptContext::new(&map, cell(0, 0)).unwrap();
        let first = build_prompt(&PromptTemplate::default(), &ctx);
        assert!(first.1.contains("Blocked cells: 1,1"));
        let second = build_prompt(&PromptTemplate::default(), &ctx);
        assert_eq!(first, second);
    }

    #[test]
    fn parse_waypoints_happy_path() {
        let map = GridMap::open(5, 5).unwrap();
        let path = parse_waypoints("0,0|0,1|0,2", &map).unwrap();
        assert_eq!(path.len(), 3);
        assert_eq!(path.to_bar_string(), "0,0|0,1|0,2");
    }

    #[test]
    fn parse_waypoints_tolerates_line_breaks_and_spaces() {
        let map = GridMap::open(5, 5).unwrap();
        assert_eq!(
            parse_waypoints("0,0|\n0,1", &map).unwrap().to_bar_string(),
            "0,0|0,1"
        );
        assert_eq!(
            parse_waypoints("  0 , 0 | 1,0 |\n\n2,0  ", &map)
                .unwrap()
                .to_bar_string(),
            "0,0|1,0|2,0"
        );
        // trailing bar from a chatty model
        assert_eq!(
            parse_waypoints("0,0|0,1|", &map).unwrap().to_bar_string(),
            "0,0|0,1"
        );
    }

    #[test]
    fn parse_waypoints_collapses_consecutive_duplicates() {
        let map = GridMap::open(5, 5).unwrap();
        assert_eq!(
            parse_waypoints("0,0|0,0|0,1|0,1|0,0", &map)
                .unwrap()
                .to_bar_string(),
            "0,0|0,1|0,0"
        );
    }

    #[test]
    fn parse_waypoints_error_cases() {
        let map = parse_map(".....\n.....\n.....\n.#...\n.....").unwrap();
        assert_eq!(parse_waypoints("", &map).unwrap_err(), ParseError::EmptyResponse);
        assert_eq!(
            parse_waypoints("0,0|9,9", &map).unwrap_err(),
            ParseError::OutOfBounds(cell(9, 9))
        );
        assert_eq!(
            parse_waypoints("0,0|1,1", &map).unwrap_err(),
            ParseError::OnObstacle(cell(1, 1))
        );
        assert_eq!(
            parse_waypoints("0,0|north|1,1", &map).unwrap_err(),
            ParseError::MalformedToken {
                token: "north".into(),
                index: 1
            }
        );
        assert_eq!(
            parse_waypoints("0,0|-1,2", &map).unwrap_err(),
            ParseError::MalformedToken {
                token: "-1,2".into(),
                index: 1
            }
        );
    }

    #[test]
    fn parse_round_trips_serialized_paths() {
        let map = GridMap::open(4, 4).unwrap();
        let path = patterns::square_spiral(&map, cell(0, 0)).unwrap();
        assert_eq!(parse_waypoints(&path.to_bar_string(), &map).unwrap(), path);
    }

    proptest::proptest! {
        // grammar round trip: parse is a left inverse of serialize
        #[test]
        fn parse_inverts_serialization(
            (w, h) in (1u32..8, 1u32..8),
            raw in proptest::collection::vec((0u32..64, 0u32..64), 1..25),
        ) {
            let map = GridMap::open(w, h).unwrap();
            let mut cells: Vec<CellCoord> = Vec::new();
            for (a, b) in raw {
                let cell = CellCoord::new(a % w, b % h);
                if cells.last() != Some(&cell) {
                    cells.push(cell);
                }
            }
            let path = WaypointPath::new(cells, &map).unwrap();
            proptest::prop_assert_eq!(
                parse_waypoints(&path.to_bar_string(), &map).unwrap(),
                path
            );
        }
    }

    #[test]
    fn evaluate_prepends_start_for_honest_lengths() {
        let map = GridMap::open(3, 3).unwrap();
        let th = Thresholds::for_map(&map);
        let path = parse_waypoints(&lawnmower_string(3, 3), &map).unwrap();
        // measured from the far corner: 4 bridge steps on top of the 8-step sweep
        let report = evaluate(&map, cell(2, 2), &path, &th).unwrap();
        assert_eq!(report.path_length, 12.0);
        assert_eq!(report.coverage_rate, 1.0);
    }

    #[test]
    fn plan_accepts_on_first_good_response() {
        let map = GridMap::open(5, 5).unwrap();
        let oracle = ScriptedOracle::new(vec![lawnmower_string(5, 5)]).unwrap();
        let outcome = plan(&map, cell(0, 0), &oracle, &config(&map)).unwrap();
        assert_eq!(outcome.attempts, 1);
        assert!(outcome.report.accepted);
        assert_eq!(outcome.report.coverage_rate, 1.0);
    }

    #[test]
    fn plan_retries_until_acceptance() {
        let map = GridMap::open(5, 5).unwrap();
        let oracle = Recording::new(
            ScriptedOracle::new(vec!["0,0|0,1".into(), lawnmower_string(5, 5)]).unwrap(),
        );
        let outcome = plan(&map, cell(0, 0), &oracle, &config(&map)).unwrap();
        assert_eq!(outcome.attempts, 2);
        assert_eq!(oracle.calls(), 2);
        // the retry carried feedback about the rejected attempt
        let requests = oracle.requests.lock().unwrap();
        assert_eq!(requests[1].user_messages.len(), 2);
        assert!(requests[1].user_messages[1].contains("CoverageBelowThreshold"));
        assert!(requests[1].user_messages[1].contains("0,0|0,1"));
    }

    #[test]
    fn plan_exhausts_after_max_iterations_provider_calls() {
        let map = GridMap::open(5, 5).unwrap();
        let bad: Vec<String> = (0..7).map(|_| "0,0|0,1".to_string()).collect();
        let oracle = Recording::new(ScriptedOracle::new(bad).unwrap());
        let err = plan(&map, cell(0, 0), &oracle, &config(&map)).unwrap_err();
        match err {
            PlanError::Exhausted {
                attempts,
                last_report,
            } => {
                assert_eq!(attempts, 5);
                let report = last_report.unwrap();
                assert_eq!(report.reasons, vec![RejectReason::CoverageBelowThreshold]);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
        assert_eq!(oracle.calls(), 5);
    }

    #[test]
    fn plan_counts_unparseable_responses_as_attempts() {
        let map = GridMap::open(3, 3).unwrap();
        let oracle = Recording::new(
            ScriptedOracle::new(vec!["gibberish".into(), lawnmower_string(3, 3)]).unwrap(),
        );
        let outcome = plan(&map, cell(0, 0), &oracle, &config(&map)).unwrap();
        assert_eq!(outcome.attempts, 2);
        let requests = oracle.requests.lock().unwrap();
        assert!(requests[1].user_messages[1].contains("could not be parsed"));
    }

    #[test]
    fn plan_anchors_returned_path_at_start() {
        let map = GridMap::open(3, 3).unwrap();
        let mut cfg = config(&map);
        // a sweep that starts away from the requested start cell
        cfg.thresholds.max_length_ratio = 3.0;
        let oracle = ScriptedOracle::new(vec![lawnmower_string(3, 3)]).unwrap();
        let outcome = plan(&map, cell(1, 0), &oracle, &cfg).unwrap();
        assert_eq!(outcome.path.first(), cell(1, 0));
        assert_eq!(outcome.report.path_length, 9.0);
    }

    #[test]
    fn plan_respects_feedback_toggle() {
        let map = GridMap::open(5, 5).unwrap();
        let mut cfg = config(&map);
        cfg.feedback_on_reject = false;
        let oracle = Recording::new(
            ScriptedOracle::new(vec!["0,0".into(), lawnmower_string(5, 5)]).unwrap(),
        );
        plan(&map, cell(0, 0), &oracle, &cfg).unwrap();
        let requests = oracle.requests.lock().unwrap();
        assert_eq!(requests[1].user_messages.len(), 1);
    }

    #[test]
    fn plan_rejects_invalid_config() {
        let map = GridMap::open(3, 3).unwrap();
        let mut cfg = config(&map);
        cfg.max_iterations = 0;
        let oracle = ScriptedOracle::new(vec!["0,0".into()]).unwrap();
        assert!(matches!(
            plan(&map, cell(0, 0), &oracle, &cfg),
            Err(PlanError::InvalidConfig(_))
        ));
    }

    #[test]
    fn target_cell_lands_in_task_text() {
        let map = GridMap::open(3, 3).unwrap();
        let mut cfg = config(&map);
        cfg.target = Some(cell(2, 2));
        let oracle = Recording::new(ScriptedOracle::new(vec![lawnmower_string(3, 3)]).unwrap());
        plan(&map, cell(0, 0), &oracle, &cfg).unwrap();
        let requests = oracle.requests.lock().unwrap();
        assert!(requests[0].user_messages[0].contains("End at cell 2,2"));
    }

    #[test]
    fn registry_selects_strategies_by_name() {
        let registry = PlannerRegistry::with_patterns();
        assert_eq!(registry.names(), vec!["lawnmower", "spiral", "square", "wallmow"]);
        let map = GridMap::open(3, 3).unwrap();
        let cfg = config(&map);
        let outcome = registry
            .get("lawnmower")
            .unwrap()
            .plan(&map, cell(0, 0), &cfg)
            .unwrap();
        assert_eq!(outcome.report.path_length, 8.0);
        assert!(matches!(
            registry.get("rrt"),
            Err(PlanError::UnknownPlanner(_))
        ));
    }

    #[test]
    fn registry_llm_strategy_runs_the_loop() {
        let map = GridMap::open(3, 3).unwrap();
        let oracle = ScriptedOracle::new(vec![lawnmower_string(3, 3)]).unwrap();
        let registry = PlannerRegistry::with_llm(Arc::new(oracle));
        assert!(registry.names().contains(&"llm"));
        let outcome = registry
            .get("llm")
            .unwrap()
            .plan(&map, cell(0, 0), &config(&map))
            .unwrap();
        assert!(outcome.report.accepted);
    }
}
