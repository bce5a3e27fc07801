//! Path quality measures: coverage rate, path length, turn count, the
//! theoretical shortest coverage length, and the coverage-weighted
//! path-length score aggregated over episodes.
//!
//! Planners are allowed to emit sparse waypoint lists; every metric here
//! first bridges non-adjacent consecutive waypoints with deterministic BFS
//! shortest paths so the measures reflect travel the robot would actually
//! perform.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CellCoord, GridMap, WaypointPath};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("start cell {0} is an obstacle or out of bounds")]
    StartOnObstacle(CellCoord),
    #[error("episode list is empty")]
    EmptyEpisodeList,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
}

/// Why the evaluator rejected a proposed path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    CoverageBelowThreshold,
    TooManyTurns,
    PathTooLong,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RejectReason::CoverageBelowThreshold => "CoverageBelowThreshold",
            RejectReason::TooManyTurns => "TooManyTurns",
            RejectReason::PathTooLong => "PathTooLong",
        };
        f.write_str(s)
    }
}

/// Acceptance thresholds for the waypoint evaluator.
///
/// A path is accepted only when all three hold: coverage at least
/// `min_coverage`, at most `max_turns` turns, and length at most
/// `max_length_ratio` times the theoretical shortest coverage length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_coverage: f64,
    pub max_turns: u32,
    pub max_length_ratio: f64,
}

impl Thresholds {
    pub const DEFAULT_MIN_COVERAGE: f64 = 0.95;
    pub const DEFAULT_MAX_LENGTH_RATIO: f64 = 2.0;

    /// Defaults scaled to a map: `max_turns = 2·(width + height)`.
    pub fn for_map(map: &GridMap) -> Self {
        Thresholds {
            min_coverage: Self::DEFAULT_MIN_COVERAGE,
            max_turns: 2 * (map.width() + map.height()),
            max_length_ratio: Self::DEFAULT_MAX_LENGTH_RATIO,
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if !self.min_coverage.is_finite() || !(0.0..=1.0).contains(&self.min_coverage) {
            return Err(MetricsError::InvalidThresholds(format!(
                "min_coverage must be in [0, 1], got {}",
                self.min_coverage
            )));
        }
        if !self.max_length_ratio.is_finite() || self.max_length_ratio < 1.0 {
            return Err(MetricsError::InvalidThresholds(format!(
                "max_length_ratio must be at least 1, got {}",
                self.max_length_ratio
            )));
        }
        Ok(())
    }
}

/// Output of the waypoint evaluator for one proposed path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub coverage_rate: f64,
    pub path_length: f64,
    pub turn_count: u32,
    pub shortest_length: f64,
    pub cpl_term: f64,
    pub accepted: bool,
    pub reasons: Vec<RejectReason>,
}

impl std::fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "coverage_rate:   {:.4}", self.coverage_rate)?;
        writeln!(f, "path_length:     {:.3}", self.path_length)?;
        writeln!(f, "turn_count:      {}", self.turn_count)?;
        writeln!(f, "shortest_length: {:.3}", self.shortest_length)?;
        writeln!(f, "cpl_term:        {:.6}", self.cpl_term)?;
        if self.accepted {
            write!(f, "verdict:         accepted")
        } else {
            let reasons: Vec<String> = self.reasons.iter().map(|r| r.to_string()).collect();
            write!(f, "verdict:         rejected ({})", reasons.join(", "))
        }
    }
}

/// Per-episode score: coverage fraction weighted by how close the traveled
/// length came to the theoretical shortest coverage length.
pub fn cpl_term(coverage_rate: f64, shortest_length: f64, path_length: f64) -> f64 {
    if shortest_length == 0.0 && path_length == 0.0 {
        // single-free-cell maps would otherwise divide zero by zero
        return coverage_rate;
    }
    coverage_rate * shortest_length / path_length.max(shortest_length)
}

/// Mean of per-episode `cpl_term`s over `(coverage_rate, shortest, actual)`
/// tuples. Always in `[0, 1]`.
pub fn cpl(episodes: &[(f64, f64, f64)]) -> Result<f64, MetricsError> {
    if episodes.is_empty() {
        return Err(MetricsError::EmptyEpisodeList);
    }
    let sum: f64 = episodes
        .iter()
        .map(|&(cr, l, p)| cpl_term(cr, l, p))
        .sum();
    Ok(sum / episodes.len() as f64)
}

/// Expand a waypoint path to unit steps, bridging non-adjacent consecutive
/// waypoints with deterministic BFS shortest paths.
///
/// The result starts at the first waypoint and every consecutive pair is
/// 4-adjacent. Bridge cells count toward coverage and length.
pub fn expand_path(map: &GridMap, path: &WaypointPath) -> Result<Vec<CellCoord>, MetricsError> {
    let cells = path.cells();
    for &c in cells {
        if !map.is_free(c) {
            return Err(MetricsError::InvalidPath(format!(
                "cell {c} is not free on this map"
            )));
        }
    }
    let mut expanded = vec![cells[0]];
    for pair in cells.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.is_adjacent4(b) {
            expanded.push(b);
        } else {
            let bridge = map.shortest_path(a, b).ok_or_else(|| {
                MetricsError::InvalidPath(format!("no route between {a} and {b}"))
            })?;
            expanded.extend_from_slice(&bridge[1..]);
        }
    }
    Ok(expanded)
}

/// Fraction of free cells visited by the BFS-expanded path.
pub fn coverage_rate(map: &GridMap, path: &WaypointPath) -> Result<f64, MetricsError> {
    let expanded = expand_path(map, path)?;
    let distinct: std::collections::HashSet<CellCoord> = expanded.into_iter().collect();
    Ok(distinct.len() as f64 / map.free_cell_count() as f64)
}

/// Total travel distance of the BFS-expanded path in meters.
pub fn path_length(map: &GridMap, path: &WaypointPath) -> Result<f64, MetricsError> {
    let expanded = expand_path(map, path)?;
    Ok((expanded.len() as f64 - 1.0) * map.cell_size())
}

/// Number of unit-step direction changes along a path.
///
/// The path must already be expanded to unit steps; a non-adjacent pair is an
/// error rather than silently bridged.
pub fn turn_count(path: &WaypointPath) -> Result<u32, MetricsError> {
    turn_count_of_cells(path.cells())
}

pub(crate) fn turn_count_of_cells(cells: &[CellCoord]) -> Result<u32, MetricsError> {
    let mut turns = 0;
    let mut prev_dir: Option<(i64, i64)> = None;
    for pair in cells.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !a.is_adjacent4(b) {
            return Err(MetricsError::InvalidPath(format!(
                "{a} -> {b} is not a unit step"
            )));
        }
        let dir = (
            b.col as i64 - a.col as i64,
            b.row as i64 - a.row as i64,
        );
        if let Some(prev) = prev_dir {
            if prev != dir {
                turns += 1;
            }
        }
        prev_dir = Some(dir);
    }
    Ok(turns)
}

/// Lower bound on the length of any path from `start` that visits every free
/// cell: `(free_cells − 1)·cell_size`. Exact when a Hamiltonian path from
/// `start` exists.
pub fn shortest_coverage_length(map: &GridMap, start: CellCoord) -> Result<f64, MetricsError> {
    if !map.is_free(start) {
        return Err(MetricsError::StartOnObstacle(start));
    }
    Ok((map.free_cell_count() as f64 - 1.0) * map.cell_size())
}

/// Success test from the experiment protocol: coverage meets the minimum.
pub fn is_success(report: &EvaluationReport, th: &Thresholds) -> bool {
    report.coverage_rate >= th.min_coverage
}

/// Build the full evaluation report for a path measured from `start`.
///
/// The path is expanded once; coverage, length, and turns come from the same
/// expansion. The verdict is the threshold conjunction.
pub fn evaluate_path(
    map: &GridMap,
    start: CellCoord,
    path: &WaypointPath,
    th: &Thresholds,
) -> Result<EvaluationReport, MetricsError> {
    th.validate()?;
    if !map.is_free(start) {
        return Err(MetricsError::StartOnObstacle(start));
    }
    let expanded = expand_path(map, path)?;
    let distinct: std::collections::HashSet<CellCoord> = expanded.iter().copied().collect();
    let coverage = distinct.len() as f64 / map.free_cell_count() as f64;
    let length = (expanded.len() as f64 - 1.0) * map.cell_size();
    let turns = turn_count_of_cells(&expanded)?;
    let shortest = shortest_coverage_length(map, start)?;

    let mut reasons = Vec::new();
    if coverage < th.min_coverage {
        reasons.push(RejectReason::CoverageBelowThreshold);
    }
    if turns > th.max_turns {
        reasons.push(RejectReason::TooManyTurns);
    }
    if length > th.max_length_ratio * shortest {
        reasons.push(RejectReason::PathTooLong);
    }
    Ok(EvaluationReport {
        coverage_rate: coverage,
        path_length: length,
        turn_count: turns,
        shortest_length: shortest,
        cpl_term: cpl_term(coverage, shortest, length),
        accepted: reasons.is_empty(),
        reasons,
    })
}
