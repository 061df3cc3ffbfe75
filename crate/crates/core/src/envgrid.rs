//! Gridworld mazes: ASCII map parsing, deterministic four-action dynamics,
//! and discretization of continuous mazes onto a fine grid.
//!
//! Map alphabet: `#` wall, `.` floor, `B` floor tagged as biased (used by the
//! coverage-temperature sampler), `G` floor tagged as a goal candidate.
//! Coordinates are `(x, y)` with `x` the column and `y` the row, row 0 at the
//! top. States are the floor cells, numbered row-major.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Wall,
    Floor,
    Bias,
    Goal,
}

impl Cell {
    pub fn is_floor(self) -> bool {
        !matches!(self, Cell::Wall)
    }

    fn from_char(ch: char) -> Option<Cell> {
        match ch {
            '#' => Some(Cell::Wall),
            '.' => Some(Cell::Floor),
            'B' => Some(Cell::Bias),
            'G' => Some(Cell::Goal),
            _ => None,
        }
    }

    fn to_char(self) -> char {
        match self {
            Cell::Wall => '#',
            Cell::Floor => '.',
            Cell::Bias => 'B',
            Cell::Goal => 'G',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

pub type Coord = (usize, usize);

/// Dense row-major numbering of the floor cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateIndex {
    coords: Vec<Coord>,
    lookup: HashMap<Coord, usize>,
}

impl StateIndex {
    fn build(width: usize, height: usize, cells: &[Cell]) -> Self {
        let mut coords = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if cells[y * width + x].is_floor() {
                    coords.push((x, y));
                }
            }
        }
        let lookup = coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        StateIndex { coords, lookup }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coord(&self, state: usize) -> Coord {
        self.coords[state]
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn state(&self, coord: Coord) -> Option<usize> {
        self.lookup.get(&coord).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeSpec {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    index: StateIndex,
}

impl MazeSpec {
    /// Builds a maze from a row-major cell grid, checking the map invariants.
    pub fn from_cells(width: usize, height: usize, cells: Vec<Cell>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyMap);
        }
        if cells.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for a {width}x{height} grid",
                cells.len()
            )));
        }
        for y in 0..height {
            for x in 0..width {
                let border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
                if border && cells[y * width + x].is_floor() {
                    return Err(Error::OpenBorder { x, y });
                }
            }
        }
        let index = StateIndex::build(width, height, &cells);
        if index.is_empty() {
            return Err(Error::NoFloor);
        }
        Ok(MazeSpec {
            width,
            height,
            cells,
            index,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn index(&self) -> &StateIndex {
        &self.index
    }

    pub fn n_states(&self) -> usize {
        self.index.len()
    }

    pub fn cell(&self, x: usize, y: usize) -> Cell {
        self.cells[y * self.width + x]
    }

    fn cell_at(&self, x: i64, y: i64) -> Option<Cell> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return None;
        }
        Some(self.cell(x as usize, y as usize))
    }

    pub fn is_floor(&self, coord: Coord) -> bool {
        coord.0 < self.width && coord.1 < self.height && self.cell(coord.0, coord.1).is_floor()
    }

    /// States tagged `B`.
    pub fn bias_states(&self) -> Vec<usize> {
        self.tagged(Cell::Bias)
    }

    /// States tagged `G`.
    pub fn goal_candidates(&self) -> Vec<usize> {
        self.tagged(Cell::Goal)
    }

    fn tagged(&self, tag: Cell) -> Vec<usize> {
        self.index
            .coords()
            .iter()
            .enumerate()
            .filter(|(_, &(x, y))| self.cell(x, y) == tag)
            .map(|(i, _)| i)
            .collect()
    }

    /// Deterministic move: the neighbor in direction `action` when it is
    /// floor, otherwise the agent stays put.
    pub fn step(&self, s: Coord, action: Action) -> Result<Coord> {
        if !self.is_floor(s) {
            return Err(Error::InvalidState {
                x: s.0 as i64,
                y: s.1 as i64,
            });
        }
        let (dx, dy) = action.delta();
        let (nx, ny) = (s.0 as i64 + dx, s.1 as i64 + dy);
        match self.cell_at(nx, ny) {
            Some(c) if c.is_floor() => Ok((nx as usize, ny as usize)),
            _ => Ok(s),
        }
    }

    /// `step` on dense state indices. Panics on an out-of-range index.
    pub fn step_state(&self, state: usize, action: Action) -> usize {
        let next = self
            .step(self.index.coord(state), action)
            .expect("state index refers to a floor cell");
        self.index.state(next).expect("step stays on floor")
    }

    /// Position scaled into [-0.5, 0.5]^2 over the grid extent.
    pub fn normalized_position(&self, state: usize) -> (f64, f64) {
        let (x, y) = self.index.coord(state);
        let sx = if self.width > 1 {
            x as f64 / (self.width - 1) as f64 - 0.5
        } else {
            0.0
        };
        let sy = if self.height > 1 {
            y as f64 / (self.height - 1) as f64 - 0.5
        } else {
            0.0
        };
        (sx, sy)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            if y > 0 {
                out.push('\n');
            }
            for x in 0..self.width {
                out.push(self.cell(x, y).to_char());
            }
        }
        out
    }

    /// Copy of this maze with the given states retagged (e.g. to move the
    /// bias set). Tags on other states are kept.
    pub fn with_tag(&self, states: &[usize], tag: Cell) -> Result<MazeSpec> {
        if !tag.is_floor() {
            return Err(Error::InvalidConfig("cannot retag floor as wall".into()));
        }
        let mut cells = self.cells.clone();
        for &s in states {
            if s >= self.n_states() {
                return Err(Error::StateOutOfRange(s));
            }
            let (x, y) = self.index.coord(s);
            cells[y * self.width + x] = tag;
        }
        MazeSpec::from_cells(self.width, self.height, cells)
    }
}

/// Parses an ASCII map. Trailing newlines and `\r` are ignored.
pub fn parse_maze(text: &str) -> Result<MazeSpec> {
    let rows: Vec<&str> = text
        .trim_end_matches(['\n', '\r'])
        .split('\n')
        .map(|r| r.strip_suffix('\r').unwrap_or(r))
        .collect();
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::EmptyMap);
    }
    let width = rows[0].chars().count();
    let mut cells = Vec::with_capacity(width * rows.len());
    for (y, row) in rows.iter().enumerate() {
        let mut count = 0;
        for (x, ch) in row.chars().enumerate() {
            let cell = Cell::from_char(ch).ok_or(Error::UnknownCharacter {
                ch,
                line: y + 1,
                column: x + 1,
            })?;
            cells.push(cell);
            count += 1;
        }
        if count != width {
            return Err(Error::RaggedRows {
                row: y + 1,
                expected: width,
                found: count,
            });
        }
    }
    MazeSpec::from_cells(width, rows.len(), cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallRect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl WallRect {
    fn distance_to(&self, px: f64, py: f64) -> f64 {
        let dx = (self.x - px).max(0.0).max(px - (self.x + self.w));
        let dy = (self.y - py).max(0.0).max(py - (self.y + self.h));
        dx.hypot(dy)
    }

    fn strictly_contains(&self, px: f64, py: f64) -> bool {
        px > self.x && px < self.x + self.w && py > self.y && py < self.y + self.h
    }
}

/// Continuous maze in length units. `y` grows downward, matching grid rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousMazeSpec {
    pub width: f64,
    pub height: f64,
    pub radius: f64,
    pub walls: Vec<WallRect>,
}

impl ContinuousMazeSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ContinuousMazeSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::InvalidConfig("bounding box must be positive".into()));
        }
        if !(self.radius >= 0.0) {
            return Err(Error::InvalidConfig("agent radius must be >= 0".into()));
        }
        for (i, r) in self.walls.iter().enumerate() {
            let inside = r.w >= 0.0
                && r.h >= 0.0
                && r.x >= 0.0
                && r.y >= 0.0
                && r.x + r.w <= self.width + 1e-12
                && r.y + r.h <= self.height + 1e-12;
            if !inside {
                return Err(Error::InvalidConfig(format!(
                    "wall {i} lies outside the bounding box"
                )));
            }
        }
        Ok(())
    }

    /// Whether an agent centered at `(px, py)` overlaps a wall. Touching a
    /// wall is allowed; with zero radius a point is blocked only when it lies
    /// strictly inside a rectangle.
    pub fn blocked(&self, px: f64, py: f64) -> bool {
        self.walls
            .iter()
            .any(|r| r.strictly_contains(px, py) || r.distance_to(px, py) < self.radius)
    }
}

/// Overlays a uniform grid with `resolution` cells per length unit and keeps
/// the cells whose center clears every wall by the agent radius. The result
/// is padded with a one-cell wall border.
pub fn discretize_continuous(cm: &ContinuousMazeSpec, resolution: f64) -> Result<MazeSpec> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::InvalidConfig("resolution must be > 0".into()));
    }
    cm.validate()?;
    let nx = (cm.width * resolution).round().max(1.0) as usize;
    let ny = (cm.height * resolution).round().max(1.0) as usize;
    let (width, height) = (nx + 2, ny + 2);
    let mut cells = vec![Cell::Wall; width * height];
    for j in 0..ny {
        for i in 0..nx {
            let cx = (i as f64 + 0.5) / resolution;
            let cy = (j as f64 + 0.5) / resolution;
            if !cm.blocked(cx, cy) {
                cells[(j + 1) * width + (i + 1)] = Cell::Floor;
            }
        }
    }
    MazeSpec::from_cells(width, height, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P3: &str = "#####\n#...#\n#####";

    #[test]
    fn parse_counts_floor() {
        assert_eq!(parse_maze("####\n#..#\n####").unwrap().n_states(), 2);
        let two_room = parse_maze("#######\n#..#..#\n#.....#\n#######").unwrap();
        assert_eq!(two_room.n_states(), 9);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_maze("####\n#..#\n###"),
            Err(Error::RaggedRows { row: 3, .. })
        ));
        assert!(matches!(
            parse_maze("####\n#.x#\n####"),
            Err(Error::UnknownCharacter { ch: 'x', line: 2, column: 3 })
        ));
        assert!(matches!(
            parse_maze("####\n...#\n####"),
            Err(Error::OpenBorder { x: 0, y: 1 })
        ));
        assert!(matches!(parse_maze("###\n###"), Err(Error::NoFloor)));
        assert!(matches!(parse_maze(""), Err(Error::EmptyMap)));
    }

    #[test]
    fn tags_are_floor() {
        let m = parse_maze("#####\n#BG.#\n#####").unwrap();
        assert_eq!(m.n_states(), 3);
        assert_eq!(m.bias_states(), vec![0]);
        assert_eq!(m.goal_candidates(), vec![1]);
    }

    #[test]
    fn corridor_steps() {
        let m = parse_maze(P3).unwrap();
        assert_eq!(m.step((2, 1), Action::Left).unwrap(), (1, 1));
        assert_eq!(m.step((1, 1), Action::Left).unwrap(), (1, 1));
        assert_eq!(m.step((2, 1), Action::Up).unwrap(), (2, 1));
        assert!(matches!(
            m.step((0, 0), Action::Up),
            Err(Error::InvalidState { x: 0, y: 0 })
        ));
        assert!(m.step((9, 9), Action::Up).is_err());
    }

    #[test]
    fn render_round_trip() {
        let text = "#######\n#..#.G#\n#B....#\n#######";
        assert_eq!(parse_maze(text).unwrap().render_text(), text);
    }

    #[test]
    fn discretize_empty_box() {
        let cm = ContinuousMazeSpec {
            width: 2.0,
            height: 2.0,
            radius: 0.0,
            walls: vec![],
        };
        let m = discretize_continuous(&cm, 1.0).unwrap();
        assert_eq!((m.width(), m.height()), (4, 4));
        assert_eq!(m.n_states(), 4);
    }

    #[test]
    fn discretize_fully_covered() {
        let cm = ContinuousMazeSpec {
            width: 3.0,
            height: 3.0,
            radius: 0.0,
            walls: vec![WallRect {
                x: 0.0,
                y: 0.0,
                w: 3.0,
                h: 3.0,
            }],
        };
        assert!(matches!(discretize_continuous(&cm, 1.0), Err(Error::NoFloor)));
        assert!(discretize_continuous(&cm, 0.0).is_err());
    }

    #[test]
    fn continuous_json_rejects_outside_wall() {
        let text = r#"{"width":2,"height":2,"radius":0,"walls":[{"x":1,"y":1,"w":5,"h":1}]}"#;
        assert!(ContinuousMazeSpec::from_json(text).is_err());
    }
}
