//! Bundled maps.

use crate::envgrid::{parse_maze, ContinuousMazeSpec, Coord, MazeSpec};

pub const K2: &str = "####\n#..#\n####";
pub const P3: &str = "#####\n#...#\n#####";
pub const C4: &str = "####\n#..#\n#..#\n####";
pub const TWO_ROOM: &str = include_str!("../maps/two_room.txt");
pub const FOUR_ROOM: &str = include_str!("../maps/four_room.txt");
/// Four-room layout with the top-left room tagged as the start bias set.
pub const BIASED: &str = include_str!("../maps/biased.txt");
/// One biased room joined to a far room by a 33-cell corridor.
pub const BIASED_ONEROOM: &str = include_str!("../maps/biased_oneroom.txt");
/// Larger discrete layouts: a 29x29 four-room map and a 31x31 nine-room map.
pub const DISCRETE_A: &str = include_str!("../maps/discrete_a.txt");
pub const DISCRETE_B: &str = include_str!("../maps/discrete_b.txt");

/// `(name, map text)` for every bundled discrete map.
pub const MAPS: &[(&str, &str)] = &[
    ("k2", K2),
    ("p3", P3),
    ("c4", C4),
    ("two_room", TWO_ROOM),
    ("four_room", FOUR_ROOM),
    ("biased", BIASED),
    ("biased_oneroom", BIASED_ONEROOM),
    ("discrete_a", DISCRETE_A),
    ("discrete_b", DISCRETE_B),
];

/// Graphs used by the identity checks.
pub const GRAPH_ZOO: &[&str] = &["k2", "p3", "c4", "two_room", "four_room"];

/// Doorway cells of the bundled room maps, as `(x, y)`.
pub fn doorways(name: &str) -> &'static [Coord] {
    match name {
        "two_room" => &[(3, 2)],
        "four_room" => &[(6, 5), (4, 6), (8, 6), (6, 8)],
        _ => &[],
    }
}

pub fn map_text(name: &str) -> Option<&'static str> {
    MAPS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Parses a bundled map. Panics if `name` is unknown; bundled maps are
/// known to be valid.
pub fn load(name: &str) -> MazeSpec {
    let text = map_text(name).unwrap_or_else(|| panic!("no bundled map named {name}"));
    parse_maze(text).expect("bundled map parses")
}

pub const CONTINUOUS: &[(&str, &str)] = &[
    ("continuous_a", include_str!("../maps/continuous_a.json")),
    ("continuous_b", include_str!("../maps/continuous_b.json")),
];

pub fn load_continuous(name: &str) -> Option<ContinuousMazeSpec> {
    CONTINUOUS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| ContinuousMazeSpec::from_json(t).expect("bundled maze parses"))
}
