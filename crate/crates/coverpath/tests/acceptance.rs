//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The hosted-LLM tables from the experiment writeup are not reproducible at
//! desk scale (proprietary nondeterministic services, unstated simulator
//! scale), so the gate here is the deterministic suite below plus an
//! optional live smoke test that only runs when provider keys are present.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coverpath::grid::{CellCoord, GridMap, WaypointPath};
use coverpath::harness::{self, load_experiment_config};
use coverpath::llm::{
    ChatProvider, ChatRequest, ChatResponse, LlmError, ProviderConfig, ProviderKind,
    ScriptedOracle,
};
use coverpath::metrics::{cpl, path_length, shortest_coverage_length, turn_count, Thresholds};
use coverpath::nav::{self, FollowerConfig, FollowerMethod, NavError};
use coverpath::patterns;
use coverpath::planner::{self, build_prompt, PlanError, PlannerConfig, PromptContext,
    PromptTemplate};
use coverpath::sim::{integrate_unicycle, MotionLimits, Pose, Rect, World};

fn pass(name: &str) {
    println!("ACCEPTANCE {name}: PASS");
}

fn cell(col: u32, row: u32) -> CellCoord {
    CellCoord::new(col, row)
}

#[test]
fn cpl_formula_exactness() {
    let started = Instant::now();
    assert!((cpl(&[(1.0, 24.0, 24.0)]).unwrap() - 1.0).abs() < 1e-12);
    assert!((cpl(&[(0.5, 10.0, 20.0)]).unwrap() - 0.25).abs() < 1e-12);
    assert!((cpl(&[(1.0, 24.0, 24.0), (0.5, 10.0, 20.0)]).unwrap() - 0.625).abs() < 1e-12);
    assert!(started.elapsed() < Duration::from_secs(1));
    pass("cpl formula exactness");
}

#[test]
fn baseline_coverage_optimality() {
    let started = Instant::now();
    for size in [5u32, 7, 11] {
        let map = GridMap::open(size, size).unwrap();
        let optimal = (size * size - 1) as f64;
        let th = Thresholds::for_map(&map);
        for corner in map.corners() {
            for generate in [patterns::lawnmower, patterns::square_spiral] {
                let path = generate(&map, corner).unwrap();
                let report = planner::evaluate(&map, corner, &path, &th).unwrap();
                assert_eq!(report.coverage_rate, 1.0, "{size} corner {corner}");
                assert_eq!(report.path_length, optimal);
                assert_eq!(report.cpl_term, 1.0);
                assert_eq!(
                    cpl(&[(
                        report.coverage_rate,
                        report.shortest_length,
                        report.path_length
                    )])
                    .unwrap(),
                    1.0
                );
            }
            for generate in [patterns::square_move, patterns::wallfollow_then_lawnmower] {
                let path = generate(&map, corner).unwrap();
                let report = planner::evaluate(&map, corner, &path, &th).unwrap();
                assert_eq!(report.coverage_rate, 1.0);
                assert!(report.path_length >= optimal);
            }
        }
    }
    assert!(started.elapsed() < Duration::from_secs(1));
    pass("baseline coverage optimality (5x5/7x7/11x11, all corners)");
}

/// Exhaustive shortest coverage walk: BFS over (cell, visited-set) states.
fn min_coverage_walk_steps(map: &GridMap, start: CellCoord) -> u32 {
    let free: Vec<CellCoord> = map.free_cells().collect();
    let index: HashMap<CellCoord, usize> = free
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, i))
        .collect();
    let n = free.len();
    let full: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let state = |i: usize, mask: u32| i * (full as usize + 1) + mask as usize;
    let mut dist: Vec<u32> = vec![u32::MAX; n * (full as usize + 1)];
    let start_idx = index[&start];
    let start_mask = 1u32 << start_idx;
    dist[state(start_idx, start_mask)] = 0;
    let mut queue = std::collections::VecDeque::from([(start_idx, start_mask)]);
    while let Some((i, mask)) = queue.pop_front() {
        let d = dist[state(i, mask)];
        if mask == full {
            return d;
        }
        for neighbor in map.neighbors4(free[i]).unwrap() {
            let j = index[&neighbor];
            let next_mask = mask | (1 << j);
            if dist[state(j, next_mask)] == u32::MAX {
                dist[state(j, next_mask)] = d + 1;
                queue.push_back((j, next_mask));
            }
        }
    }
    unreachable!("free space is connected, a coverage walk always exists");
}

/// Every connected map up to 3x3 with at most two obstacles.
fn small_maps() -> Vec<GridMap> {
    let mut maps = Vec::new();
    for width in 1..=3u32 {
        for height in 1..=3u32 {
            let cells = width * height;
            let all: Vec<CellCoord> = (0..cells)
                .map(|i| CellCoord::new(i % width, i / width))
                .collect();
            let mut obstacle_sets: Vec<Vec<CellCoord>> = vec![vec![]];
            for a in 0..all.len() {
                obstacle_sets.push(vec![all[a]]);
                for b in (a + 1)..all.len() {
                    obstacle_sets.push(vec![all[a], all[b]]);
                }
            }
            for obstacles in obstacle_sets {
                if let Ok(map) = GridMap::new(width, height, obstacles, 1.0) {
                    maps.push(map);
                }
            }
        }
    }
    maps
}

#[test]
fn brute_force_oracle_equivalence() {
    let started = Instant::now();

    // shortest_coverage_length is a valid lower bound everywhere, achieved
    // from corners on obstacle-free maps
    let maps = small_maps();
    assert!(maps.len() > 50);
    for map in &maps {
        let bound_steps = map.free_cell_count() - 1;
        for start in map.free_cells() {
            let exact = min_coverage_walk_steps(map, start);
            let bound = shortest_coverage_length(map, start).unwrap();
            assert_eq!(bound, bound_steps as f64 * map.cell_size());
            assert!(
                exact >= bound_steps,
                "bound violated on {}x{} from {start}",
                map.width(),
                map.height()
            );
        }
        if map.obstacles().next().is_none() {
            for corner in map.corners() {
                assert_eq!(min_coverage_walk_steps(map, corner), bound_steps);
            }
        }
    }

    // ring map: the bound is met exactly from a corner
    let ring = coverpath::grid::parse_map("...\n.#.\n...").unwrap();
    assert_eq!(min_coverage_walk_steps(&ring, cell(0, 0)), 7);

    // 1,000 seeded random paths: turn_count and path_length match direct
    // step-by-step recomputation
    let mut rng = ChaCha8Rng::seed_from_u64(20240817);
    let mut checked = 0;
    while checked < 600 {
        let width = rng.random_range(1..=6u32);
        let height = rng.random_range(1..=6u32);
        let cell_size = [0.5, 1.0, 2.0][rng.random_range(0..3usize)];
        let map = match random_map(&mut rng, width, height, cell_size) {
            Some(map) => map,
            None => continue,
        };
        let free: Vec<CellCoord> = map.free_cells().collect();
        let mut cur = free[rng.random_range(0..free.len())];
        let mut cells = vec![cur];
        for _ in 0..rng.random_range(1..=40usize) {
            let neighbors = map.neighbors4(cur).unwrap();
            if neighbors.is_empty() {
                break;
            }
            cur = neighbors[rng.random_range(0..neighbors.len())];
            cells.push(cur);
        }
        if cells.len() < 2 {
            continue;
        }
        let path = WaypointPath::new(cells.clone(), &map).unwrap();
        // oracle: direction changes counted over raw steps
        let mut oracle_turns = 0u32;
        for window in cells.windows(3) {
            let d1 = (
                window[1].col as i64 - window[0].col as i64,
                window[1].row as i64 - window[0].row as i64,
            );
            let d2 = (
                window[2].col as i64 - window[1].col as i64,
                window[2].row as i64 - window[1].row as i64,
            );
            if d1 != d2 {
                oracle_turns += 1;
            }
        }
        assert_eq!(turn_count(&path).unwrap(), oracle_turns);
        assert_eq!(
            path_length(&map, &path).unwrap(),
            (cells.len() as f64 - 1.0) * cell_size
        );
        checked += 1;
    }
    // sparse waypoint lists on obstacle-free maps: expansion length equals
    // the Manhattan sum
    let mut sparse_checked = 0;
    while sparse_checked < 400 {
        let width = rng.random_range(2..=7u32);
        let height = rng.random_range(2..=7u32);
        let cell_size = [0.5, 1.0][rng.random_range(0..2usize)];
        let map = GridMap::new(width, height, [], cell_size).unwrap();
        let mut cells: Vec<CellCoord> = Vec::new();
        for _ in 0..rng.random_range(2..=12usize) {
            let next = CellCoord::new(
                rng.random_range(0..width),
                rng.random_range(0..height),
            );
            if cells.last() != Some(&next) {
                cells.push(next);
            }
        }
        if cells.len() < 2 {
            continue;
        }
        let manhattan_total: u32 = cells.windows(2).map(|w| w[0].manhattan(w[1])).sum();
        let path = WaypointPath::new(cells, &map).unwrap();
        assert_eq!(
            path_length(&map, &path).unwrap(),
            manhattan_total as f64 * cell_size
        );
        sparse_checked += 1;
    }
    assert_eq!(checked + sparse_checked, 1000);
    assert!(started.elapsed() < Duration::from_secs(30));
    pass("brute-force oracle equivalence (coverage walks + 1000 random paths)");
}

fn random_map(rng: &mut ChaCha8Rng, width: u32, height: u32, cell_size: f64) -> Option<GridMap> {
    let cells = width * height;
    let obstacle_count = rng.random_range(0..=(cells / 3));
    let obstacles: Vec<CellCoord> = (0..obstacle_count)
        .map(|_| CellCoord::new(rng.random_range(0..width), rng.random_range(0..height)))
        .collect();
    GridMap::new(width, height, obstacles, cell_size).ok()
}

struct Counting {
    inner: ScriptedOracle,
    calls: std::sync::atomic::AtomicU32,
}

impl Counting {
    fn new(responses: Vec<String>) -> Self {
        Counting {
            inner: ScriptedOracle::new(responses).unwrap(),
            calls: std::sync::atomic::AtomicU32::new(0),
        }
    }
}

impl ChatProvider for Counting {
    fn name(&self) -> &str {
        "counting"
    }

    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        self.calls
            .fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        self.inner.complete(req)
    }
}

#[test]
fn algorithm1_loop_contract() {
    let map = GridMap::open(5, 5).unwrap();
    let good = patterns::lawnmower(&map, cell(0, 0)).unwrap().to_bar_string();
    let cfg = PlannerConfig::new("scripted", Thresholds::for_map(&map));
    assert_eq!(cfg.max_iterations, 5);

    // k - 1 rejected responses then one accepted => returns on attempt k
    for k in [1u32, 2, 5] {
        let mut responses: Vec<String> = (1..k).map(|_| "0,0|0,1".to_string()).collect();
        responses.push(good.clone());
        let provider = Counting::new(responses);
        let outcome = planner::plan(&map, cell(0, 0), &provider, &cfg).unwrap();
        assert_eq!(outcome.attempts, k);
        assert_eq!(provider.calls.load(std::sync::atomic::Ordering::SeqCst), k);
        assert!(outcome.report.accepted);
    }

    // N all-bad responses => exhaustion after exactly N provider calls
    let provider = Counting::new(vec!["0,0|0,1".to_string(); 8]);
    let err = planner::plan(&map, cell(0, 0), &provider, &cfg).unwrap_err();
    assert!(matches!(err, PlanError::Exhausted { attempts: 5, .. }));
    assert_eq!(provider.calls.load(std::sync::atomic::Ordering::SeqCst), 5);
    pass("algorithm 1 loop contract (k in {1,2,5}, exhaustion after N)");
}

#[test]
fn algorithm2_execution() {
    let started = Instant::now();
    let map = GridMap::open(5, 5).unwrap();
    let path = patterns::lawnmower(&map, cell(0, 0)).unwrap();
    let cfg = FollowerConfig::for_map(FollowerMethod::TurnAndDrive, &map);
    assert_eq!(cfg.reach_threshold, 0.1);
    let limits = MotionLimits::default();

    // zero noise: every cell center reached within d
    let mut world = World::at_cell(map.clone(), cell(0, 0), 0.0).unwrap();
    let outcome = nav::follow(&mut world, &path, &cfg, &limits).unwrap();
    for c in map.free_cells() {
        let (cx, cy) = map.cell_center(c).unwrap();
        let closest = outcome
            .trajectory
            .iter()
            .map(|s| ((s.x - cx).powi(2) + (s.y - cy).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(closest < cfg.reach_threshold, "cell {c}: {closest}");
    }
    let visited = nav::visited_cells(&outcome.trajectory, &map, cfg.reach_threshold);
    assert_eq!(visited.len(), 25);
    assert!(outcome.driving_seconds > 0.0);

    // an obstacle dropped on the route triggers the safety stop with no
    // penetration anywhere in the trajectory
    let mut blocked = World::at_cell(map.clone(), cell(0, 0), 0.0).unwrap();
    let rect = Rect::new(0.3, 2.3, 0.7, 2.7); // sits on the first column sweep
    blocked.add_obstacle(rect);
    match nav::follow(&mut blocked, &path, &cfg, &limits) {
        Err(NavError::SafetyStop {
            pose,
            range,
            partial,
        }) => {
            assert!(range < cfg.safety_distance);
            assert!(rect.distance_to(pose.x, pose.y) >= blocked.safety_radius - 1e-9);
            for sample in &partial.trajectory {
                assert!(
                    rect.distance_to(sample.x, sample.y) >= blocked.safety_radius - 1e-9,
                    "penetrated at t={}",
                    sample.t
                );
                let p = Pose::new(sample.x, sample.y, sample.heading);
                assert!(!blocked.pose_penetrates(&p));
            }
        }
        other => panic!("expected a safety stop, got {other:?}"),
    }
    assert!(started.elapsed() < Duration::from_secs(10));
    pass("algorithm 2 execution (turn-and-drive reach + safety stop)");
}

#[test]
fn kinematics_closed_form_vs_euler() {
    let dt: f64 = 1e-4;
    let steps = (1.0 / dt).round() as usize;
    let (mut x, mut y, mut heading) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..steps {
        x += 1.0 * dt * heading.cos();
        y += 1.0 * dt * heading.sin();
        heading += PI * dt;
    }
    let exact = integrate_unicycle(Pose::new(0.0, 0.0, 0.0), 1.0, PI, 1.0);
    assert!((exact.x - x).abs() < 1e-3, "x: {} vs {}", exact.x, x);
    assert!((exact.y - y).abs() < 1e-3, "y: {} vs {}", exact.y, y);
    pass("kinematics closed form vs Euler at dt=1e-4");
}

#[test]
fn end_to_end_determinism() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo/experiment.toml");
    let plan = load_experiment_config(&config).unwrap();
    assert_eq!(plan.maps.len(), 3);
    assert_eq!(plan.episodes_per_cell, 10);

    let first = harness::run_experiment(&plan).unwrap();
    let second = harness::run_experiment(&plan).unwrap();
    let csv_a = harness::summary_csv(&first.summary);
    let csv_b = harness::summary_csv(&second.summary);
    assert_eq!(csv_a, csv_b, "summary CSV must be byte-identical");
    assert_eq!(first.records.len(), 30);
    for row in &first.summary.rows {
        assert_eq!(row.cpl, 1.0, "{} should score a perfect CPL", row.map_id);
        assert_eq!(row.success_rate, 1.0);
    }
    for (a, b) in first.records.iter().zip(&second.records) {
        assert_eq!(a.path, b.path);
        assert_eq!(a.start, b.start);
        assert_eq!(a.t_drive, b.t_drive);
        assert_eq!(a.executed_cr, b.executed_cr);
    }
    pass("end-to-end determinism (demo config, byte-identical CSV, CPL=1.0)");
}

/// Optional: only exercises providers whose key env var is set. Asserts the
/// response parses and evaluates without crashing; planning quality is not
/// judged here.
#[test]
fn live_provider_smoke() {
    let candidates = [
        (ProviderKind::OpenAi, "gpt-4o"),
        (ProviderKind::Gemini, "gemini-1.5-flash"),
        (ProviderKind::Anthropic, "claude-3-5-sonnet-latest"),
    ];
    let mut ran = 0;
    for (kind, model) in candidates {
        let env = kind.key_env().unwrap();
        if std::env::var(env).is_err() {
            continue;
        }
        ran += 1;
        let map = GridMap::open(3, 3).unwrap();
        let provider: Arc<dyn ChatProvider> =
            Arc::from(ProviderConfig::new(kind).build().unwrap());
        let ctx = PromptContext::new(&map, cell(0, 0)).unwrap();
        let (system, user) = build_prompt(&PromptTemplate::default(), &ctx);
        let request = ChatRequest::new(system, vec![user], 0.6, model).unwrap();
        let response = provider.complete(&request).expect("live call failed");
        assert!(!response.text.is_empty());
        match planner::parse_waypoints(&response.text, &map) {
            Ok(path) => {
                let report =
                    planner::evaluate(&map, cell(0, 0), &path, &Thresholds::for_map(&map))
                        .unwrap();
                println!(
                    "live {model}: parsed {} waypoints, coverage {:.2}",
                    path.len(),
                    report.coverage_rate
                );
            }
            Err(err) => println!("live {model}: response did not parse ({err})"),
        }
    }
    if ran == 0 {
        println!("ACCEPTANCE live provider smoke: SKIPPED (no provider keys in env)");
    } else {
        pass("live provider smoke");
    }
}
