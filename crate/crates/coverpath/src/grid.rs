//! Grid-map data model shared by every other module.
//!
//! Coordinates are `(col, row)`, zero-indexed, with `col` increasing east and
//! `row` increasing north. Map files are text, one character per cell
//! (`.` free, `#` obstacle), first line northmost, so row 0 of the parsed
//! grid is the *last* text line.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("malformed map: {0}")]
    MalformedMap(String),
    #[error("free space is not a single 4-connected region")]
    DisconnectedFreeSpace,
    #[error("map has no cells")]
    EmptyMap,
    #[error("cell {0} is out of bounds")]
    OutOfBounds(CellCoord),
    #[error("cell {0} is an obstacle")]
    OnObstacle(CellCoord),
    #[error("waypoint path must contain at least one cell")]
    EmptyPath,
    #[error("consecutive duplicate cell {cell} at index {index}")]
    RepeatedCell { cell: CellCoord, index: usize },
}

/// A single grid cell, addressed column-first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellCoord {
    pub col: u32,
    pub row: u32,
}

impl CellCoord {
    pub const fn new(col: u32, row: u32) -> Self {
        CellCoord { col, row }
    }

    /// Manhattan distance in cells.
    pub fn manhattan(self, other: CellCoord) -> u32 {
        self.col.abs_diff(other.col) + self.row.abs_diff(other.row)
    }

    pub fn is_adjacent4(self, other: CellCoord) -> bool {
        self.manhattan(other) == 1
    }
}

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.col, self.row)
    }
}

impl FromStr for CellCoord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (col, row) = s
            .split_once(',')
            .ok_or_else(|| format!("expected 'col,row', got {s:?}"))?;
        let col = col
            .trim()
            .parse::<u32>()
            .map_err(|_| format!("bad column in {s:?}"))?;
        let row = row
            .trim()
            .parse::<u32>()
            .map_err(|_| format!("bad row in {s:?}"))?;
        Ok(CellCoord { col, row })
    }
}

/// Bounded cell grid with an obstacle set and a physical cell size.
///
/// Immutable after construction; free cells are guaranteed nonempty and
/// 4-connected.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: u32,
    height: u32,
    obstacles: BTreeSet<CellCoord>,
    cell_size: f64,
}

impl GridMap {
    pub fn new(
        width: u32,
        height: u32,
        obstacles: impl IntoIterator<Item = CellCoord>,
        cell_size: f64,
    ) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyMap);
        }
        if !cell_size.is_finite() || cell_size <= 0.0 {
            return Err(GridError::MalformedMap(format!(
                "cell size must be a positive finite number, got {cell_size}"
            )));
        }
        let obstacles: BTreeSet<CellCoord> = obstacles.into_iter().collect();
        for &c in &obstacles {
            if c.col >= width || c.row >= height {
                return Err(GridError::OutOfBounds(c));
            }
        }
        let map = GridMap {
            width,
            height,
            obstacles,
            cell_size,
        };
        if map.free_cell_count() == 0 {
            return Err(GridError::EmptyMap);
        }
        if !map.free_space_connected() {
            return Err(GridError::DisconnectedFreeSpace);
        }
        Ok(map)
    }

    /// Obstacle-free rectangle with unit cells.
    pub fn open(width: u32, height: u32) -> Result<Self, GridError> {
        GridMap::new(width, height, [], 1.0)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn obstacles(&self) -> impl Iterator<Item = CellCoord> + '_ {
        self.obstacles.iter().copied()
    }

    pub fn in_bounds(&self, c: CellCoord) -> bool {
        c.col < self.width && c.row < self.height
    }

    pub fn is_obstacle(&self, c: CellCoord) -> bool {
        self.obstacles.contains(&c)
    }

    pub fn is_free(&self, c: CellCoord) -> bool {
        self.in_bounds(c) && !self.is_obstacle(c)
    }

    pub fn free_cell_count(&self) -> u32 {
        self.width * self.height - self.obstacles.len() as u32
    }

    /// Free cells in row-major order (row 0 first, then by column).
    pub fn free_cells(&self) -> impl Iterator<Item = CellCoord> + '_ {
        (0..self.height).flat_map(move |row| {
            (0..self.width)
                .map(move |col| CellCoord::new(col, row))
                .filter(|&c| !self.is_obstacle(c))
        })
    }

    pub fn corners(&self) -> [CellCoord; 4] {
        [
            CellCoord::new(0, 0),
            CellCoord::new(self.width - 1, 0),
            CellCoord::new(0, self.height - 1),
            CellCoord::new(self.width - 1, self.height - 1),
        ]
    }

    pub fn is_corner(&self, c: CellCoord) -> bool {
        self.corners().contains(&c)
    }

    /// In-bounds, non-obstacle 4-neighbors in deterministic E, N, W, S order.
    pub fn neighbors4(&self, c: CellCoord) -> Result<Vec<CellCoord>, GridError> {
        if !self.in_bounds(c) {
            return Err(GridError::OutOfBounds(c));
        }
        Ok(self.open_neighbors(c).collect())
    }

    fn open_neighbors(&self, c: CellCoord) -> impl Iterator<Item = CellCoord> + '_ {
        // E, N, W, S
        let candidates = [
            (c.col.checked_add(1), Some(c.row)),
            (Some(c.col), c.row.checked_add(1)),
            (c.col.checked_sub(1), Some(c.row)),
            (Some(c.col), c.row.checked_sub(1)),
        ];
        candidates.into_iter().filter_map(move |(col, row)| {
            let n = CellCoord::new(col?, row?);
            self.is_free(n).then_some(n)
        })
    }

    /// Center of a cell in world meters: `((col + 0.5)·s, (row + 0.5)·s)`.
    pub fn cell_center(&self, c: CellCoord) -> Result<(f64, f64), GridError> {
        if !self.in_bounds(c) {
            return Err(GridError::OutOfBounds(c));
        }
        Ok((
            (c.col as f64 + 0.5) * self.cell_size,
            (c.row as f64 + 0.5) * self.cell_size,
        ))
    }

    /// Cell containing a world point, if any.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<CellCoord> {
        if x < 0.0 || y < 0.0 {
            return None;
        }
        let c = CellCoord::new(
            (x / self.cell_size).floor() as u32,
            (y / self.cell_size).floor() as u32,
        );
        self.in_bounds(c).then_some(c)
    }

    /// Deterministic BFS shortest path between free cells, endpoints included.
    ///
    /// Expansion follows `neighbors4` order (E, N, W, S) with a FIFO queue, so
    /// ties between equal-length routes always resolve the same way.
    pub fn shortest_path(&self, from: CellCoord, to: CellCoord) -> Option<Vec<CellCoord>> {
        if !self.is_free(from) || !self.is_free(to) {
            return None;
        }
        if from == to {
            return Some(vec![from]);
        }
        let idx = |c: CellCoord| (c.row * self.width + c.col) as usize;
        let mut prev: Vec<Option<CellCoord>> = vec![None; (self.width * self.height) as usize];
        let mut seen = vec![false; (self.width * self.height) as usize];
        let mut queue = VecDeque::new();
        seen[idx(from)] = true;
        queue.push_back(from);
        while let Some(cur) = queue.pop_front() {
            for n in self.open_neighbors(cur) {
                if seen[idx(n)] {
                    continue;
                }
                seen[idx(n)] = true;
                prev[idx(n)] = Some(cur);
                if n == to {
                    let mut path = vec![n];
                    let mut walk = cur;
                    loop {
                        path.push(walk);
                        match prev[idx(walk)] {
                            Some(p) => walk = p,
                            None => break,
                        }
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(n);
            }
        }
        None
    }

    fn free_space_connected(&self) -> bool {
        let start = match self.free_cells().next() {
            Some(c) => c,
            None => return false,
        };
        let mut seen = HashSet::new();
        seen.insert(start);
        let mut queue = VecDeque::from([start]);
        while let Some(cur) = queue.pop_front() {
            for n in self.open_neighbors(cur) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() as u32 == self.free_cell_count()
    }

    /// Canonical text form: optional `cellsize` header, rows north to south.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.cell_size != 1.0 {
            out.push_str(&format!("cellsize {}\n", self.cell_size));
        }
        for row in (0..self.height).rev() {
            for col in 0..self.width {
                out.push(if self.is_obstacle(CellCoord::new(col, row)) {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }
}

/// Parse the text map format: `.` free, `#` obstacle, first line northmost,
/// optional leading `cellsize <float>` header.
pub fn parse_map(text: &str) -> Result<GridMap, GridError> {
    let mut lines = text.lines().peekable();
    let mut cell_size = 1.0;
    if let Some(first) = lines.peek() {
        if let Some(rest) = first.strip_prefix("cellsize") {
            let value = rest.trim();
            cell_size = value
                .parse::<f64>()
                .map_err(|_| GridError::MalformedMap(format!("bad cellsize value {value:?}")))?;
            if !cell_size.is_finite() || cell_size <= 0.0 {
                return Err(GridError::MalformedMap(format!(
                    "cellsize must be positive, got {value}"
                )));
            }
            lines.next();
        }
    }
    let rows: Vec<&str> = lines.collect();
    if rows.is_empty() || rows.iter().all(|r| r.is_empty()) {
        return Err(GridError::EmptyMap);
    }
    let width = rows[0].chars().count();
    if width == 0 {
        return Err(GridError::EmptyMap);
    }
    let height = rows.len();
    let mut obstacles = Vec::new();
    for (i, line) in rows.iter().enumerate() {
        if line.chars().count() != width {
            return Err(GridError::MalformedMap(format!(
                "ragged row: line {} has {} cells, expected {width}",
                i + 1,
                line.chars().count()
            )));
        }
        // first text line is the northmost row
        let row = (height - 1 - i) as u32;
        for (col, ch) in line.chars().enumerate() {
            match ch {
                '.' => {}
                '#' => obstacles.push(CellCoord::new(col as u32, row)),
                other => {
                    return Err(GridError::MalformedMap(format!(
                        "illegal character {other:?} at line {}, column {}",
                        i + 1,
                        col + 1
                    )))
                }
            }
        }
    }
    GridMap::new(width as u32, height as u32, obstacles, cell_size)
}

/// Ordered list of grid cells proposed by a planner.
///
/// Cells are validated against a map at construction: in bounds, free, and
/// with no consecutive duplicates. Consecutive cells need not be adjacent;
/// the evaluator bridges gaps with BFS shortest paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaypointPath {
    cells: Vec<CellCoord>,
}

impl WaypointPath {
    pub fn new(cells: Vec<CellCoord>, map: &GridMap) -> Result<Self, GridError> {
        if cells.is_empty() {
            return Err(GridError::EmptyPath);
        }
        for &c in &cells {
            if !map.in_bounds(c) {
                return Err(GridError::OutOfBounds(c));
            }
            if map.is_obstacle(c) {
                return Err(GridError::OnObstacle(c));
            }
        }
        if let Some(index) = cells.windows(2).position(|w| w[0] == w[1]) {
            return Err(GridError::RepeatedCell {
                cell: cells[index + 1],
                index: index + 1,
            });
        }
        Ok(WaypointPath { cells })
    }

    pub fn cells(&self) -> &[CellCoord] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn first(&self) -> CellCoord {
        self.cells[0]
    }

    pub fn last(&self) -> CellCoord {
        *self.cells.last().expect("path is nonempty")
    }

    /// Serialize to the wire grammar `col,row|col,row|...`.
    pub fn to_bar_string(&self) -> String {
        self.cells
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Prepend `start` unless the path already begins there.
    pub fn with_start(&self, start: CellCoord, map: &GridMap) -> Result<Self, GridError> {
        if self.first() == start {
            return Ok(self.clone());
        }
        let mut cells = Vec::with_capacity(self.cells.len() + 1);
        cells.push(start);
        cells.extend_from_slice(&self.cells);
        WaypointPath::new(cells, map)
    }
}

impl fmt::Display for WaypointPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bar_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell(col: u32, row: u32) -> CellCoord {
        CellCoord::new(col, row)
    }

    #[test]
    fn parse_minimal_free_grid() {
        let map = parse_map("..\n..").unwrap();
        assert_eq!(map.width(), 2);
        assert_eq!(map.height(), 2);
        assert_eq!(map.obstacles().count(), 0);
        assert_eq!(map.cell_size(), 1.0);
    }

    #[test]
    fn parse_places_obstacle_in_north_up_frame() {
        // first text line is the north row, so '#' lands at (col 1, row 1)
        let map = parse_map(".#\n..").unwrap();
        assert_eq!(map.obstacles().collect::<Vec<_>>(), vec![cell(1, 1)]);
    }

    #[test]
    fn parse_rejects_disconnected_free_space() {
        assert_eq!(
            parse_map("#.\n.#").unwrap_err(),
            GridError::DisconnectedFreeSpace
        );
    }

    #[test]
    fn parse_rejects_ragged_and_illegal_and_empty() {
        assert!(matches!(
            parse_map("..\n..."),
            Err(GridError::MalformedMap(_))
        ));
        assert!(matches!(
            parse_map(".x\n.."),
            Err(GridError::MalformedMap(_))
        ));
        assert_eq!(parse_map(""), Err(GridError::EmptyMap));
        assert_eq!(parse_map("\n"), Err(GridError::EmptyMap));
    }

    #[test]
    fn parse_cellsize_header() {
        let map = parse_map("cellsize 0.5\n..\n..").unwrap();
        assert_eq!(map.cell_size(), 0.5);
        assert!(matches!(
            parse_map("cellsize nope\n.."),
            Err(GridError::MalformedMap(_))
        ));
        assert!(matches!(
            parse_map("cellsize -1\n.."),
            Err(GridError::MalformedMap(_))
        ));
    }

    #[test]
    fn canonical_round_trip_is_byte_identical() {
        for text in ["..\n..\n", ".#\n..\n", "cellsize 0.5\n.#.\n...\n"] {
            let map = parse_map(text).unwrap();
            assert_eq!(map.to_text(), text);
            assert_eq!(parse_map(&map.to_text()).unwrap(), map);
        }
    }

    #[test]
    fn neighbors_are_in_east_north_west_south_order() {
        let map = GridMap::open(3, 3).unwrap();
        assert_eq!(
            map.neighbors4(cell(1, 1)).unwrap(),
            vec![cell(2, 1), cell(1, 2), cell(0, 1), cell(1, 0)]
        );
        assert_eq!(
            map.neighbors4(cell(0, 0)).unwrap(),
            vec![cell(1, 0), cell(0, 1)]
        );
    }

    #[test]
    fn neighbors_skip_obstacles_and_reject_out_of_bounds() {
        let map = GridMap::new(3, 3, [cell(1, 0)], 1.0).unwrap();
        assert_eq!(map.neighbors4(cell(0, 0)).unwrap(), vec![cell(0, 1)]);
        assert_eq!(
            map.neighbors4(cell(5, 5)),
            Err(GridError::OutOfBounds(cell(5, 5)))
        );
    }

    #[test]
    fn cell_center_examples() {
        let unit = GridMap::open(3, 3).unwrap();
        assert_eq!(unit.cell_center(cell(0, 0)).unwrap(), (0.5, 0.5));
        assert_eq!(unit.cell_center(cell(2, 1)).unwrap(), (2.5, 1.5));
        let half = GridMap::new(2, 2, [], 0.5).unwrap();
        assert_eq!(half.cell_center(cell(1, 1)).unwrap(), (0.75, 0.75));
        assert!(unit.cell_center(cell(3, 0)).is_err());
    }

    #[test]
    fn shortest_path_is_deterministic_and_minimal() {
        let map = GridMap::open(3, 3).unwrap();
        let path = map.shortest_path(cell(0, 0), cell(2, 2)).unwrap();
        assert_eq!(path.len(), 5);
        assert_eq!(path[0], cell(0, 0));
        assert_eq!(path[4], cell(2, 2));
        assert!(path.windows(2).all(|w| w[0].is_adjacent4(w[1])));
        // detour around a wall
        let walled = parse_map("...\n.#.\n...").unwrap();
        let detour = walled.shortest_path(cell(0, 1), cell(2, 1)).unwrap();
        assert_eq!(detour.len(), 5);
        assert!(!detour.contains(&cell(1, 1)));
    }

    #[test]
    fn waypoint_path_validation() {
        let map = parse_map(".#\n..").unwrap();
        assert!(WaypointPath::new(vec![], &map).is_err());
        assert_eq!(
            WaypointPath::new(vec![cell(0, 0), cell(0, 0)], &map).unwrap_err(),
            GridError::RepeatedCell {
                cell: cell(0, 0),
                index: 1
            }
        );
        assert_eq!(
            WaypointPath::new(vec![cell(1, 1)], &map).unwrap_err(),
            GridError::OnObstacle(cell(1, 1))
        );
        let ok = WaypointPath::new(vec![cell(0, 0), cell(1, 0)], &map).unwrap();
        assert_eq!(ok.to_bar_string(), "0,0|1,0");
    }

    #[test]
    fn with_start_prepends_only_when_needed() {
        let map = GridMap::open(3, 3).unwrap();
        let path = WaypointPath::new(vec![cell(1, 1), cell(2, 1)], &map).unwrap();
        assert_eq!(path.with_start(cell(1, 1), &map).unwrap(), path);
        let prepended = path.with_start(cell(0, 0), &map).unwrap();
        assert_eq!(prepended.first(), cell(0, 0));
        assert_eq!(prepended.len(), 3);
    }

    fn arb_map() -> impl Strategy<Value = GridMap> {
        (1u32..6, 1u32..6)
            .prop_flat_map(|(w, h)| {
                let cells = w * h;
                (
                    Just(w),
                    Just(h),
                    proptest::collection::vec(0..cells, 0..(cells as usize / 2).max(1)),
                )
            })
            .prop_filter_map("connected maps only", |(w, h, raw)| {
                let obstacles: Vec<CellCoord> =
                    raw.iter().map(|&i| CellCoord::new(i % w, i / w)).collect();
                GridMap::new(w, h, obstacles, 1.0).ok()
            })
    }

    proptest! {
        #[test]
        fn neighbors4_is_symmetric(map in arb_map()) {
            for a in map.free_cells() {
                for b in map.neighbors4(a).unwrap() {
                    prop_assert!(map.neighbors4(b).unwrap().contains(&a));
                }
            }
        }

        #[test]
        fn cell_center_is_injective(map in arb_map()) {
            let mut seen = std::collections::HashMap::new();
            for row in 0..map.height() {
                for col in 0..map.width() {
                    let c = CellCoord::new(col, row);
                    let center = map.cell_center(c).unwrap();
                    let key = (center.0.to_bits(), center.1.to_bits());
                    prop_assert!(seen.insert(key, c).is_none());
                }
            }
        }

        #[test]
        fn text_round_trip(map in arb_map()) {
            let text = map.to_text();
            prop_assert_eq!(parse_map(&text).unwrap(), map);
        }
    }
}
