//! Deterministic generators for the four classic coverage patterns:
//! lawnmower, square spiral, square move, and wall-follow-then-lawnmower.
//!
//! All generators work on obstacle-free rectangles and start from a corner.
//! Each is generated in a canonical frame from corner (0,0) and reflected to
//! the requested corner, which preserves 4-adjacency and visit counts.

use thiserror::Error;

use crate::grid::{CellCoord, GridMap, WaypointPath};

#[derive(Debug, Error, PartialEq)]
pub enum PatternError {
    #[error("pattern generators require an obstacle-free map")]
    UnsupportedMap,
    #[error("{0} is not a corner of this map")]
    NotACorner(CellCoord),
    #[error("map must be at least 3x3 for wall following, got {width}x{height}")]
    MapTooSmall { width: u32, height: u32 },
}

fn check_rectangle(map: &GridMap, start_corner: CellCoord) -> Result<(), PatternError> {
    if map.obstacles().next().is_some() {
        return Err(PatternError::UnsupportedMap);
    }
    if !map.is_corner(start_corner) {
        return Err(PatternError::NotACorner(start_corner));
    }
    Ok(())
}

/// Map canonical (0,0)-based cells onto the frame whose origin corner is
/// `start_corner`.
fn reflect(map: &GridMap, start_corner: CellCoord, cells: Vec<CellCoord>) -> Vec<CellCoord> {
    let flip_col = start_corner.col != 0;
    let flip_row = start_corner.row != 0;
    cells
        .into_iter()
        .map(|c| {
            CellCoord::new(
                if flip_col { map.width() - 1 - c.col } else { c.col },
                if flip_row { map.height() - 1 - c.row } else { c.row },
            )
        })
        .collect()
}

fn finish(
    map: &GridMap,
    start_corner: CellCoord,
    canonical: Vec<CellCoord>,
) -> Result<WaypointPath, PatternError> {
    let cells = reflect(map, start_corner, canonical);
    Ok(WaypointPath::new(cells, map).expect("generated pattern must be a valid path"))
}

/// Back-and-forth sweep: column by column, alternating north/south runs,
/// visiting every cell exactly once.
pub fn lawnmower(map: &GridMap, start_corner: CellCoord) -> Result<WaypointPath, PatternError> {
    check_rectangle(map, start_corner)?;
    let (w, h) = (map.width(), map.height());
    let mut cells = Vec::with_capacity((w * h) as usize);
    for col in 0..w {
        if col % 2 == 0 {
            cells.extend((0..h).map(|row| CellCoord::new(col, row)));
        } else {
            cells.extend((0..h).rev().map(|row| CellCoord::new(col, row)));
        }
    }
    finish(map, start_corner, cells)
}

/// Inward spiral along the perimeter, each cell exactly once.
pub fn square_spiral(map: &GridMap, start_corner: CellCoord) -> Result<WaypointPath, PatternError> {
    check_rectangle(map, start_corner)?;
    let (w, h) = (map.width() as i64, map.height() as i64);
    let total = (w * h) as usize;
    let mut visited = vec![false; total];
    let mut cells = Vec::with_capacity(total);
    // E, N, W, S turn cycle
    let dirs = [(1i64, 0i64), (0, 1), (-1, 0), (0, -1)];
    let (mut col, mut row) = (0i64, 0i64);
    let mut dir = 0;
    visited[0] = true;
    cells.push(CellCoord::new(0, 0));
    for _ in 1..total {
        let mut tries = 0;
        loop {
            let (dc, dr) = dirs[dir];
            let (nc, nr) = (col + dc, row + dr);
            if (0..w).contains(&nc) && (0..h).contains(&nr) && !visited[(nr * w + nc) as usize] {
                col = nc;
                row = nr;
                visited[(nr * w + nc) as usize] = true;
                cells.push(CellCoord::new(col as u32, row as u32));
                break;
            }
            dir = (dir + 1) % 4;
            tries += 1;
            assert!(tries <= 4, "spiral wedged itself into a corner");
        }
    }
    finish(map, start_corner, cells)
}

/// Concentric rings, each traversed as a closed loop back to its entry cell
/// before stepping one cell inward. Loop-closure cells repeat.
pub fn square_move(map: &GridMap, start_corner: CellCoord) -> Result<WaypointPath, PatternError> {
    check_rectangle(map, start_corner)?;
    let (w, h) = (map.width(), map.height());
    let rings = w.min(h).div_ceil(2);
    let mut cells: Vec<CellCoord> = Vec::new();
    for k in 0..rings {
        let (lo_c, hi_c) = (k, w - 1 - k);
        let (lo_r, hi_r) = (k, h - 1 - k);
        if k > 0 {
            // step inward from the previous ring's entry: east, then north
            cells.push(CellCoord::new(lo_c, lo_r - 1));
            cells.push(CellCoord::new(lo_c, lo_r));
        } else {
            cells.push(CellCoord::new(lo_c, lo_r));
        }
        cells.extend(ring_loop(lo_c, hi_c, lo_r, hi_r));
    }
    finish(map, start_corner, cells)
}

/// Closed tour of the rectangle boundary starting and ending at the
/// entry corner (lo_c, lo_r), entry cell itself not repeated at the front.
/// Degenerate single-row/column rings are walked out and back.
fn ring_loop(lo_c: u32, hi_c: u32, lo_r: u32, hi_r: u32) -> Vec<CellCoord> {
    let mut out = Vec::new();
    if lo_c == hi_c && lo_r == hi_r {
        return out; // single cell, entry already emitted
    }
    if lo_r == hi_r {
        // single row: east to the end and back
        out.extend((lo_c + 1..=hi_c).map(|c| CellCoord::new(c, lo_r)));
        out.extend((lo_c..hi_c).rev().map(|c| CellCoord::new(c, lo_r)));
        return out;
    }
    if lo_c == hi_c {
        out.extend((lo_r + 1..=hi_r).map(|r| CellCoord::new(lo_c, r)));
        out.extend((lo_r..hi_r).rev().map(|r| CellCoord::new(lo_c, r)));
        return out;
    }
    // full ring: E along south edge, N along east, W along north, S along west
    out.extend((lo_c + 1..=hi_c).map(|c| CellCoord::new(c, lo_r)));
    out.extend((lo_r + 1..=hi_r).map(|r| CellCoord::new(hi_c, r)));
    out.extend((lo_c..hi_c).rev().map(|c| CellCoord::new(c, hi_r)));
    out.extend((lo_r..=hi_r).rev().skip(1).map(|r| CellCoord::new(lo_c, r)));
    out
}

/// Full perimeter ring closed back to the start corner, then a lawnmower
/// sweep over the interior block, entered through one already-visited edge
/// cell.
pub fn wallfollow_then_lawnmower(
    map: &GridMap,
    start_corner: CellCoord,
) -> Result<WaypointPath, PatternError> {
    if map.obstacles().next().is_some() {
        return Err(PatternError::UnsupportedMap);
    }
    if map.width() < 3 || map.height() < 3 {
        return Err(PatternError::MapTooSmall {
            width: map.width(),
            height: map.height(),
        });
    }
    if !map.is_corner(start_corner) {
        return Err(PatternError::NotACorner(start_corner));
    }
    let (w, h) = (map.width(), map.height());
    let mut cells = vec![CellCoord::new(0, 0)];
    cells.extend(ring_loop(0, w - 1, 0, h - 1));
    // into the interior via the south edge
    cells.push(CellCoord::new(1, 0));
    // interior lawnmower over [1, w-2] x [1, h-2], canonical sweep
    for col in 1..=(w - 2) {
        if (col - 1) % 2 == 0 {
            cells.extend((1..=(h - 2)).map(|row| CellCoord::new(col, row)));
        } else {
            cells.extend((1..=(h - 2)).rev().map(|row| CellCoord::new(col, row)));
        }
    }
    finish(map, start_corner, cells)
}
