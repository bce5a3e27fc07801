//! Deterministic SVG rendering of a map, a proposed waypoint path, and an
//! optional executed trajectory. Identical inputs produce identical bytes.

use std::fmt::Write;

use crate::grid::{GridMap, WaypointPath};
use crate::sim::TrajectorySample;

const CELL_PX: f64 = 40.0;
const MARGIN_PX: f64 = 10.0;

/// Draw grid cells, obstacle fill, the waypoint polyline, a start marker, and
/// (when present and nonempty) the executed trajectory overlay.
pub fn render_path(
    map: &GridMap,
    path: &WaypointPath,
    trajectory: Option<&[TrajectorySample]>,
) -> String {
    let scale = CELL_PX / map.cell_size();
    let width_px = map.width() as f64 * CELL_PX + 2.0 * MARGIN_PX;
    let height_px = map.height() as f64 * CELL_PX + 2.0 * MARGIN_PX;
    // world y grows north, svg y grows down
    let to_px = |x: f64, y: f64| {
        (
            MARGIN_PX + x * scale,
            MARGIN_PX + (map.height() as f64 * map.cell_size() - y) * scale,
        )
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width_px:.0}\" \
height=\"{height_px:.0}\" viewBox=\"0 0 {width_px:.0} {height_px:.0}\">"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{width_px:.0}\" height=\"{height_px:.0}\" \
fill=\"white\" class=\"background\"/>"
    );

    // one rect per grid cell, row-major
    for row in 0..map.height() {
        for col in 0..map.width() {
            let cell = crate::grid::CellCoord::new(col, row);
            let (x, y) = to_px(
                col as f64 * map.cell_size(),
                (row + 1) as f64 * map.cell_size(),
            );
            let fill = if map.is_obstacle(cell) { "#444444" } else { "none" };
            let _ = writeln!(
                svg,
                "<rect class=\"cell\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{CELL_PX:.2}\" \
height=\"{CELL_PX:.2}\" fill=\"{fill}\" stroke=\"#cccccc\" stroke-width=\"1\"/>"
            );
        }
    }

    // proposed waypoints as a polyline through cell centers
    let points: Vec<String> = path
        .cells()
        .iter()
        .map(|&c| {
            let (cx, cy) = map.cell_center(c).expect("path cells are in bounds");
            let (px, py) = to_px(cx, cy);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    let _ = writeln!(
        svg,
        "<polyline class=\"waypoints\" points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" \
stroke-width=\"3\"/>",
        points.join(" ")
    );

    if let Some(samples) = trajectory {
        if !samples.is_empty() {
            let traj_points: Vec<String> = samples
                .iter()
                .map(|s| {
                    let (px, py) = to_px(s.x, s.y);
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            let _ = writeln!(
                svg,
                "<g class=\"trajectory\"><polyline points=\"{}\" fill=\"none\" \
stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\"/></g>",
                traj_points.join(" ")
            );
        }
    }

    // start marker
    let (sx, sy) = map.cell_center(path.first()).expect("start is in bounds");
    let (px, py) = to_px(sx, sy);
    let _ = writeln!(
        svg,
        "<circle class=\"start\" cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"6\" fill=\"#2ca02c\"/>"
    );
    svg.push_str("</svg>\n");
    svg
}
