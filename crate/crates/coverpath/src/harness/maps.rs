//! Built-in experiment maps: the obstacle-free squares used by the main
//! protocol plus two obstacle maps for robustness runs.

use crate::grid::{parse_map, GridMap};

pub const FREE_5X5: &str = "\
.....
.....
.....
.....
.....
";

pub const FREE_7X7: &str = "\
.......
.......
.......
.......
.......
.......
.......
";

pub const FREE_11X11: &str = "\
...........
...........
...........
...........
...........
...........
...........
...........
...........
...........
...........
";

/// 7x7 with a 2x2 block offset from the center.
pub const BLOCK_7X7: &str = "\
.......
.......
.......
..##...
..##...
.......
.......
";

/// 9x9 with an L-shaped interior wall.
pub const WALLS_9X9: &str = "\
.........
.........
..#......
..#......
..#####..
.........
.........
.........
.........
";

pub const BUILTIN_NAMES: [&str; 5] = ["free5x5", "free7x7", "free11x11", "block7x7", "walls9x9"];

pub fn builtin_map(name: &str) -> Option<GridMap> {
    let text = match name {
        "free5x5" => FREE_5X5,
        "free7x7" => FREE_7X7,
        "free11x11" => FREE_11X11,
        "block7x7" => BLOCK_7X7,
        "walls9x9" => WALLS_9X9,
        _ => return None,
    };
    Some(parse_map(text).expect("builtin maps are valid"))
}
