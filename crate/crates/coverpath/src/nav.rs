//! The navigation layer: the status-transform command mapper, the
//! turn-and-drive and dog-curve followers, waypoint iteration, and the
//! forward-looking safety stop.
//!
//! `follow` first expands the waypoint list to unit steps (the same
//! deterministic BFS bridging the evaluator uses), then walks the cell
//! centers in order. A waypoint counts as reached when the odometry pose is
//! within `reach_threshold` of its center; the loop then advances to the
//! next one.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::str::FromStr;

use thiserror::Error;

use crate::grid::{CellCoord, GridMap, WaypointPath};
use crate::metrics;
use crate::sim::{angle_difference, MotionLimits, Pose, SimError, TrajectorySample, World};

/// Relative bearings probed before any forward motion.
const SAFETY_BEARINGS: [f64; 3] = [-PI / 8.0, 0.0, PI / 8.0];

const ALIGN_TOL: f64 = 1e-6;

/// Looser gate for the tick-level follower: exact alignment is one clamped
/// turn away with clean odometry, while noisy headings would never read
/// below the command-mapping tolerance and the robot would turn forever.
const DRIVE_ALIGN_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum NavError {
    #[error("cells {0} and {1} are not 4-adjacent")]
    NonAdjacentCells(CellCoord, CellCoord),
    #[error("safety stop at {pose}: forward range {range:.3} m")]
    SafetyStop {
        pose: Pose,
        range: f64,
        partial: Box<FollowOutcome>,
    },
    #[error("no progress after {steps} steps toward waypoint {target}")]
    StalledProgress {
        target: CellCoord,
        steps: u32,
        partial: Box<FollowOutcome>,
    },
    #[error("path is not drivable on this world: {0}")]
    InvalidPath(String),
    #[error("invalid follower config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Logical actuation primitives produced by the status transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveCommand {
    TurnTo(f64),
    Forward(f64),
    Velocity { v: f64, w: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FollowerMethod {
    TurnAndDrive,
    DogCurve,
}

impl FromStr for FollowerMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "turn_and_drive" => Ok(FollowerMethod::TurnAndDrive),
            "dog_curve" => Ok(FollowerMethod::DogCurve),
            other => Err(format!(
                "unknown follower {other:?} (expected turn_and_drive or dog_curve)"
            )),
        }
    }
}

/// Follower tuning. Distances are meters; defaults scale with the map's cell
/// size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerConfig {
    pub method: FollowerMethod,
    pub reach_threshold: f64,
    pub lookahead: f64,
    pub safety_distance: f64,
    pub max_steps_per_waypoint: u32,
}

impl FollowerConfig {
    pub fn for_map(method: FollowerMethod, map: &GridMap) -> Self {
        let s = map.cell_size();
        FollowerConfig {
            method,
            reach_threshold: 0.1 * s,
            lookahead: 0.6 * s,
            safety_distance: 0.3 * s,
            max_steps_per_waypoint: 10_000,
        }
    }

    fn validate(&self) -> Result<(), NavError> {
        if !self.reach_threshold.is_finite() || self.reach_threshold <= 0.0 {
            return Err(NavError::InvalidConfig(
                "reach_threshold must be positive".into(),
            ));
        }
        if self.lookahead <= self.reach_threshold {
            return Err(NavError::InvalidConfig(
                "lookahead must exceed reach_threshold".into(),
            ));
        }
        Ok(())
    }
}

/// Map (heading, current cell, next cell) to the drive commands that move one
/// cell: an optional in-place turn to the cardinal bearing, then one forward
/// cell length. Equal cells map to no commands.
pub fn status_transform(
    heading: f64,
    current: CellCoord,
    next: CellCoord,
    cell_size: f64,
) -> Result<Vec<DriveCommand>, NavError> {
    if current == next {
        return Ok(Vec::new());
    }
    if !current.is_adjacent4(next) {
        return Err(NavError::NonAdjacentCells(current, next));
    }
    let target = cardinal_heading(current, next);
    let mut commands = Vec::with_capacity(2);
    if angle_difference(target, heading).abs() > ALIGN_TOL {
        commands.push(DriveCommand::TurnTo(target));
    }
    commands.push(DriveCommand::Forward(cell_size));
    Ok(commands)
}

fn cardinal_heading(current: CellCoord, next: CellCoord) -> f64 {
    let dc = next.col as i64 - current.col as i64;
    let dr = next.row as i64 - current.row as i64;
    match (dc, dr) {
        (1, 0) => 0.0,
        (0, 1) => PI / 2.0,
        (-1, 0) => PI,
        (0, -1) => -PI / 2.0,
        _ => unreachable!("adjacency was checked"),
    }
}

/// Everything a follow run produced, whether or not it finished.
#[derive(Debug, Clone)]
pub struct FollowOutcome {
    pub trajectory: Vec<TrajectorySample>,
    /// Simulated driving seconds.
    pub driving_seconds: f64,
}

/// Per-tick drive command selection for one target point.
trait SegmentFollower {
    fn command(
        &self,
        pose: Pose,
        segment_start: (f64, f64),
        target: (f64, f64),
        limits: &MotionLimits,
    ) -> DriveCommand;
}

/// Rotate in place until aligned with the target, then drive straight,
/// slowing on the final tick to land on the center.
struct TurnAndDrive;

impl SegmentFollower for TurnAndDrive {
    fn command(
        &self,
        pose: Pose,
        _segment_start: (f64, f64),
        target: (f64, f64),
        limits: &MotionLimits,
    ) -> DriveCommand {
        let desired = (target.1 - pose.y).atan2(target.0 - pose.x);
        let err = angle_difference(desired, pose.heading);
        if err.abs() > DRIVE_ALIGN_TOL {
            DriveCommand::TurnTo(desired)
        } else {
            let step = pose
                .distance_to(target.0, target.1)
                .min(limits.linear_speed * limits.dt);
            DriveCommand::Forward(step)
        }
    }
}

/// Pursuit steering toward a lookahead point on the current segment with
/// proportional heading control.
struct DogCurve {
    lookahead: f64,
    heading_gain: f64,
}

impl SegmentFollower for DogCurve {
    fn command(
        &self,
        pose: Pose,
        segment_start: (f64, f64),
        target: (f64, f64),
        limits: &MotionLimits,
    ) -> DriveCommand {
        let aim = lookahead_point(pose, segment_start, target, self.lookahead);
        let desired = (aim.1 - pose.y).atan2(aim.0 - pose.x);
        let err = angle_difference(desired, pose.heading);
        let w = (self.heading_gain * err).clamp(-limits.angular_speed, limits.angular_speed);
        let dist = pose.distance_to(target.0, target.1);
        let v = (limits.linear_speed * err.cos().max(0.0)).min(dist / limits.dt);
        DriveCommand::Velocity { v, w }
    }
}

/// Translate a logical command into one tick's clamped (v, w) pair.
fn execute_command(command: DriveCommand, pose: Pose, limits: &MotionLimits) -> (f64, f64) {
    match command {
        DriveCommand::TurnTo(target_heading) => {
            let err = angle_difference(target_heading, pose.heading);
            (
                0.0,
                (err / limits.dt).clamp(-limits.angular_speed, limits.angular_speed),
            )
        }
        DriveCommand::Forward(distance) => {
            ((distance / limits.dt).min(limits.linear_speed), 0.0)
        }
        DriveCommand::Velocity { v, w } => (
            v.clamp(-limits.linear_speed, limits.linear_speed),
            w.clamp(-limits.angular_speed, limits.angular_speed),
        ),
    }
}

/// Project the pose onto the segment and advance `lookahead` along it,
/// clamped to the segment end.
fn lookahead_point(pose: Pose, a: (f64, f64), b: (f64, f64), lookahead: f64) -> (f64, f64) {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let len_sq = abx * abx + aby * aby;
    if len_sq < 1e-18 {
        return b;
    }
    let len = len_sq.sqrt();
    let t = (((pose.x - a.0) * abx + (pose.y - a.1) * aby) / len_sq).clamp(0.0, 1.0);
    let s = (t + lookahead / len).min(1.0);
    (a.0 + s * abx, a.1 + s * aby)
}

/// Drive the robot through the waypoints in order.
///
/// Returns the full trajectory (one record per simulation step) and the
/// simulated driving time. Safety stops and stalls abort with the partial
/// outcome attached.
pub fn follow(
    world: &mut World,
    path: &WaypointPath,
    cfg: &FollowerConfig,
    limits: &MotionLimits,
) -> Result<FollowOutcome, NavError> {
    cfg.validate()?;
    limits.validate()?;
    world.limits = *limits;

    let cells = metrics::expand_path(world.map(), path)
        .map_err(|e| NavError::InvalidPath(e.to_string()))?;
    let follower: Box<dyn SegmentFollower> = match cfg.method {
        FollowerMethod::TurnAndDrive => Box::new(TurnAndDrive),
        FollowerMethod::DogCurve => Box::new(DogCurve {
            lookahead: cfg.lookahead,
            heading_gain: 2.0,
        }),
    };

    let start_time = world.sim_time();
    let start_pose = world.robot();
    let mut trajectory = vec![TrajectorySample {
        t: start_time,
        x: start_pose.x,
        y: start_pose.y,
        heading: start_pose.heading,
        v: 0.0,
        w: 0.0,
    }];

    let mut segment_start = (start_pose.x, start_pose.y);
    for &target_cell in &cells {
        let target = world
            .map()
            .cell_center(target_cell)
            .expect("expanded cells are in bounds");
        let mut steps = 0u32;
        loop {
            let pose = world.read_odometry();
            if pose.distance_to(target.0, target.1) < cfg.reach_threshold {
                break;
            }
            if steps >= cfg.max_steps_per_waypoint {
                let driving_seconds = world.sim_time() - start_time;
                return Err(NavError::StalledProgress {
                    target: target_cell,
                    steps,
                    partial: Box::new(FollowOutcome {
                        trajectory,
                        driving_seconds,
                    }),
                });
            }
            let command = follower.command(pose, segment_start, target, limits);
            let (v, w) = execute_command(command, pose, limits);
            if v > 0.0 {
                let ranges = world.read_range(&SAFETY_BEARINGS);
                let nearest = ranges.iter().copied().fold(f64::INFINITY, f64::min);
                if nearest < cfg.safety_distance {
                    let driving_seconds = world.sim_time() - start_time;
                    return Err(NavError::SafetyStop {
                        pose: world.robot(),
                        range: nearest,
                        partial: Box::new(FollowOutcome {
                            trajectory,
                            driving_seconds,
                        }),
                    });
                }
            }
            world.step(v, w, limits.dt)?;
            let after = world.robot();
            trajectory.push(TrajectorySample {
                t: world.sim_time(),
                x: after.x,
                y: after.y,
                heading: after.heading,
                v,
                w,
            });
            steps += 1;
        }
        segment_start = target;
    }

    Ok(FollowOutcome {
        driving_seconds: world.sim_time() - start_time,
        trajectory,
    })
}

/// Cells whose center came within `reach_threshold` of any trajectory pose.
pub fn visited_cells(
    trajectory: &[TrajectorySample],
    map: &GridMap,
    reach_threshold: f64,
) -> BTreeSet<CellCoord> {
    let mut visited = BTreeSet::new();
    let s = map.cell_size();
    let reach = reach_threshold.max(0.0);
    for sample in trajectory {
        let lo_col = ((sample.x - reach) / s).floor().max(0.0) as u32;
        let hi_col = ((sample.x + reach) / s).floor().max(0.0) as u32;
        let lo_row = ((sample.y - reach) / s).floor().max(0.0) as u32;
        let hi_row = ((sample.y + reach) / s).floor().max(0.0) as u32;
        for col in lo_col..=hi_col.min(map.width().saturating_sub(1)) {
            for row in lo_row..=hi_row.min(map.height().saturating_sub(1)) {
                let cell = CellCoord::new(col, row);
                if visited.contains(&cell) {
                    continue;
                }
                let (cx, cy) = map.cell_center(cell).expect("bounded loop");
                if ((sample.x - cx).powi(2) + (sample.y - cy).powi(2)).sqrt() < reach {
                    visited.insert(cell);
                }
            }
        }
    }
    visited
}
