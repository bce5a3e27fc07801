//! Desk-scale continuous 2D world: differential-drive (unicycle) kinematics,
//! odometry with optional seeded noise, ray-cast range sensing, and simulated
//! time that advances only through `step`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CellCoord, GridMap};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("command (v={v}, w={w}) exceeds motion limits")]
    CommandOutOfLimits { v: f64, w: f64 },
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("pose ({x:.3}, {y:.3}) is not inside free space")]
    PoseOutOfFreeSpace { x: f64, y: f64 },
}

/// Continuous robot state. Heading is radians counter-clockwise from east,
/// normalized to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        ((self.x - x).powi(2) + (self.y - y).powi(2)).sqrt()
    }
}

impl std::fmt::Display for Pose {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({:.3}, {:.3}, {:.3} rad)", self.x, self.y, self.heading)
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Signed smallest rotation taking `from` onto `to`.
pub fn angle_difference(to: f64, from: f64) -> f64 {
    normalize_angle(to - from)
}

/// Actuation envelope and integration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    pub linear_speed: f64,
    pub angular_speed: f64,
    pub dt: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        MotionLimits {
            linear_speed: 0.5,
            angular_speed: PI / 2.0,
            dt: 0.05,
        }
    }
}

impl MotionLimits {
    pub fn validate(&self) -> Result<(), SimError> {
        if !self.dt.is_finite() || self.dt <= 0.0 || self.dt > 0.1 {
            return Err(SimError::InvalidTimeStep(self.dt));
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in world meters, used for obstacles the planner
/// never saw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    /// Distance from a point to the rectangle, zero inside.
    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        let dx = (self.min_x - x).max(0.0).max(x - self.max_x);
        let dy = (self.min_y - y).max(0.0).max(y - self.max_y);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Zero-mean Gaussian odometry noise; zero sigmas read back exact poses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdometryNoise {
    pub sigma_xy: f64,
    pub sigma_heading: f64,
}

impl Default for OdometryNoise {
    fn default() -> Self {
        OdometryNoise {
            sigma_xy: 0.0,
            sigma_heading: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Motion was cancelled because the new pose would penetrate an obstacle
    /// or leave the map.
    pub collided: bool,
}

/// One trajectory log record per simulation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub w: f64,
}

pub const DEFAULT_SAFETY_RADIUS: f64 = 0.15;
pub const DEFAULT_MAX_RANGE: f64 = 5.0;

/// The simulated world: a grid map the planner knows about, extra rectangles
/// it does not, and one robot.
#[derive(Debug, Clone)]
pub struct World {
    map: GridMap,
    extra_obstacles: Vec<Rect>,
    robot: Pose,
    sim_time: f64,
    pub limits: MotionLimits,
    pub safety_radius: f64,
    pub max_range: f64,
    pub noise: OdometryNoise,
    rng: ChaCha8Rng,
}

impl World {
    pub fn new(map: GridMap, robot: Pose) -> Result<Self, SimError> {
        let world = World {
            map,
            extra_obstacles: Vec::new(),
            robot,
            sim_time: 0.0,
            limits: MotionLimits::default(),
            safety_radius: DEFAULT_SAFETY_RADIUS,
            max_range: DEFAULT_MAX_RANGE,
            noise: OdometryNoise::default(),
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        if world.pose_penetrates(&robot) {
            return Err(SimError::PoseOutOfFreeSpace {
                x: robot.x,
                y: robot.y,
            });
        }
        Ok(world)
    }

    /// Robot parked at a cell center with the given heading.
    pub fn at_cell(map: GridMap, cell: CellCoord, heading: f64) -> Result<Self, SimError> {
        let (x, y) = map
            .cell_center(cell)
            .map_err(|_| SimError::PoseOutOfFreeSpace { x: -1.0, y: -1.0 })?;
        World::new(map, Pose::new(x, y, heading))
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn robot(&self) -> Pose {
        self.robot
    }

    pub fn sim_time(&self) -> f64 {
        self.sim_time
    }

    pub fn extra_obstacles(&self) -> &[Rect] {
        &self.extra_obstacles
    }

    pub fn add_obstacle(&mut self, rect: Rect) {
        self.extra_obstacles.push(rect);
    }

    pub fn seed_noise(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Exact unicycle update over `dt`. On would-be penetration the pose is
    /// left unchanged and the collision is flagged; simulated time advances
    /// either way.
    pub fn step(&mut self, v: f64, w: f64, dt: f64) -> Result<StepOutcome, SimError> {
        const TOL: f64 = 1e-9;
        if v.abs() > self.limits.linear_speed + TOL || w.abs() > self.limits.angular_speed + TOL {
            return Err(SimError::CommandOutOfLimits { v, w });
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(SimError::InvalidTimeStep(dt));
        }
        let next = integrate_unicycle(self.robot, v, w, dt);
        self.sim_time += dt;
        if self.pose_penetrates(&next) {
            return Ok(StepOutcome { collided: true });
        }
        self.robot = next;
        Ok(StepOutcome { collided: false })
    }

    /// Robot pose estimate, optionally perturbed by seeded Gaussian noise.
    pub fn read_odometry(&mut self) -> Pose {
        if self.noise.sigma_xy == 0.0 && self.noise.sigma_heading == 0.0 {
            return self.robot;
        }
        let dx = self.noise.sigma_xy * gaussian(&mut self.rng);
        let dy = self.noise.sigma_xy * gaussian(&mut self.rng);
        let dh = self.noise.sigma_heading * gaussian(&mut self.rng);
        Pose::new(self.robot.x + dx, self.robot.y + dy, self.robot.heading + dh)
    }

    /// Distance along each bearing (relative to heading) to the nearest
    /// obstacle edge or the map boundary, capped at `max_range`.
    pub fn read_range(&self, bearings: &[f64]) -> Vec<f64> {
        bearings
            .iter()
            .map(|&bearing| {
                let angle = self.robot.heading + bearing;
                self.cast_ray(self.robot.x, self.robot.y, angle.cos(), angle.sin())
                    .min(self.max_range)
            })
            .collect()
    }

    fn cast_ray(&self, ox: f64, oy: f64, dx: f64, dy: f64) -> f64 {
        let mut best = self.boundary_exit_distance(ox, oy, dx, dy);
        for rect in self.obstacle_rects() {
            if let Some(t) = ray_rect_hit(ox, oy, dx, dy, &rect) {
                if t < best {
                    best = t;
                }
            }
        }
        best
    }

    fn boundary_exit_distance(&self, ox: f64, oy: f64, dx: f64, dy: f64) -> f64 {
        let width = self.map.width() as f64 * self.map.cell_size();
        let height = self.map.height() as f64 * self.map.cell_size();
        let mut exit = f64::INFINITY;
        if dx > 1e-12 {
            exit = exit.min((width - ox) / dx);
        } else if dx < -1e-12 {
            exit = exit.min(-ox / dx);
        }
        if dy > 1e-12 {
            exit = exit.min((height - oy) / dy);
        } else if dy < -1e-12 {
            exit = exit.min(-oy / dy);
        }
        exit.max(0.0)
    }

    fn obstacle_rects(&self) -> impl Iterator<Item = Rect> + '_ {
        let s = self.map.cell_size();
        self.map
            .obstacles()
            .map(move |c| {
                Rect::new(
                    c.col as f64 * s,
                    c.row as f64 * s,
                    (c.col + 1) as f64 * s,
                    (c.row + 1) as f64 * s,
                )
            })
            .chain(self.extra_obstacles.iter().copied())
    }

    /// Would a robot disc of `safety_radius` at this pose overlap an obstacle
    /// or poke outside the map?
    pub fn pose_penetrates(&self, pose: &Pose) -> bool {
        let r = self.safety_radius;
        let width = self.map.width() as f64 * self.map.cell_size();
        let height = self.map.height() as f64 * self.map.cell_size();
        const TOL: f64 = 1e-9;
        if pose.x < r - TOL
            || pose.y < r - TOL
            || pose.x > width - r + TOL
            || pose.y > height - r + TOL
        {
            return true;
        }
        self.obstacle_rects()
            .any(|rect| rect.distance_to(pose.x, pose.y) < r - TOL)
    }
}

/// Closed-form unicycle motion: straight line for `w = 0`, otherwise a
/// circular arc of radius `v/w`.
pub fn integrate_unicycle(pose: Pose, v: f64, w: f64, dt: f64) -> Pose {
    if w.abs() < 1e-12 {
        Pose::new(
            pose.x + v * dt * pose.heading.cos(),
            pose.y + v * dt * pose.heading.sin(),
            pose.heading,
        )
    } else {
        let next_heading = pose.heading + w * dt;
        Pose::new(
            pose.x + v / w * (next_heading.sin() - pose.heading.sin()),
            pose.y - v / w * (next_heading.cos() - pose.heading.cos()),
            next_heading,
        )
    }
}

/// Slab-method ray/rectangle intersection; distance to entry, zero when the
/// origin is already inside.
fn ray_rect_hit(ox: f64, oy: f64, dx: f64, dy: f64, rect: &Rect) -> Option<f64> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for (o, d, lo, hi) in [
        (ox, dx, rect.min_x, rect.max_x),
        (oy, dy, rect.min_y, rect.max_y),
    ] {
        if d.abs() < 1e-12 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let mut t1 = (lo - o) / d;
            let mut t2 = (hi - o) / d;
            if t1 > t2 {
                std::mem::swap(&mut t1, &mut t2);
            }
            t_near = t_near.max(t1);
            t_far = t_far.min(t2);
            if t_near > t_far {
                return None;
            }
        }
    }
    if t_far < 0.0 {
        return None;
    }
    Some(t_near.max(0.0))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Write a line-delimited trajectory log, one record per step.
pub fn write_trajectory_log(
    path: impl AsRef<Path>,
    samples: &[TrajectorySample],
) -> std::io::Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for sample in samples {
        serde_json::to_writer(&mut file, sample)?;
        file.write_all(b"\n")?;
    }
    file.flush()
}

pub fn read_trajectory_log(path: impl AsRef<Path>) -> std::io::Result<Vec<TrajectorySample>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut samples = Vec::new();
    for line in file.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        samples.push(serde_json::from_str(&line)?);
    }
    Ok(samples)
}
