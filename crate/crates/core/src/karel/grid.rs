use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_SIDE: usize = 2;
pub const MAX_SIDE: usize = 16;
pub const MAX_MARKERS: u8 = 9;

/// Cell coordinate `(column i, row j)`; the origin is the north-west corner.
pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N,
    E,
    S,
    W,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::N, Direction::E, Direction::S, Direction::W];

    pub fn left(self) -> Self {
        match self {
            Direction::N => Direction::W,
            Direction::W => Direction::S,
            Direction::S => Direction::E,
            Direction::E => Direction::N,
        }
    }

    pub fn right(self) -> Self {
        self.left().left().left()
    }

    /// Column and row offsets of one step.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::N => (0, -1),
            Direction::S => (0, 1),
            Direction::E => (1, 0),
            Direction::W => (-1, 0),
        }
    }

    fn transposed(self) -> Self {
        match self {
            Direction::N => Direction::W,
            Direction::W => Direction::N,
            Direction::S => Direction::E,
            Direction::E => Direction::S,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("grid side {0} is outside {MIN_SIDE}..={MAX_SIDE}")]
    BadSize(usize),
    #[error("cell ({0}, {1}) is outside the grid")]
    OutOfBounds(usize, usize),
    #[error("marker count {count} at ({i}, {j}) is outside 1..={MAX_MARKERS}")]
    BadMarkerCount { i: usize, j: usize, count: u8 },
    #[error("cell ({0}, {1}) is listed twice")]
    Duplicate(usize, usize),
    #[error("cell ({0}, {1}) holds both a wall and markers")]
    WallWithMarkers(usize, usize),
    #[error("Karel stands on a wall at ({0}, {1})")]
    KarelOnWall(usize, usize),
}

/// A Karel world: walls, marker piles and the agent's pose.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct KarelGrid {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    markers: Vec<u8>,
    karel: Cell,
    dir: Direction,
}

impl KarelGrid {
    pub fn new<W, M>(
        width: usize,
        height: usize,
        walls: W,
        markers: M,
        karel: Cell,
        dir: Direction,
    ) -> Result<Self, GridError>
    where
        W: IntoIterator<Item = Cell>,
        M: IntoIterator<Item = (usize, usize, u8)>,
    {
        let mut grid = Self::empty(width, height, karel, dir)?;
        for (i, j) in walls {
            let k = grid.index_checked(i, j)?;
            if grid.walls[k] {
                return Err(GridError::Duplicate(i, j));
            }
            grid.walls[k] = true;
        }
        for (i, j, count) in markers {
            let k = grid.index_checked(i, j)?;
            if !(1..=MAX_MARKERS).contains(&count) {
                return Err(GridError::BadMarkerCount { i, j, count });
            }
            if grid.markers[k] != 0 {
                return Err(GridError::Duplicate(i, j));
            }
            if grid.walls[k] {
                return Err(GridError::WallWithMarkers(i, j));
            }
            grid.markers[k] = count;
        }
        if grid.is_wall(karel) {
            return Err(GridError::KarelOnWall(karel.0, karel.1));
        }
        Ok(grid)
    }

    /// A grid with no walls or markers.
    pub fn empty(width: usize, height: usize, karel: Cell, dir: Direction) -> Result<Self, GridError> {
        for side in [width, height] {
            if !(MIN_SIDE..=MAX_SIDE).contains(&side) {
                return Err(GridError::BadSize(side));
            }
        }
        if karel.0 >= width || karel.1 >= height {
            return Err(GridError::OutOfBounds(karel.0, karel.1));
        }
        Ok(Self {
            width,
            height,
            walls: vec![false; width * height],
            markers: vec![0; width * height],
            karel,
            dir,
        })
    }

    fn index_checked(&self, i: usize, j: usize) -> Result<usize, GridError> {
        if i < self.width && j < self.height {
            Ok(j * self.width + i)
        } else {
            Err(GridError::OutOfBounds(i, j))
        }
    }

    fn index(&self, (i, j): Cell) -> usize {
        j * self.width + i
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn karel(&self) -> Cell {
        self.karel
    }

    pub fn direction(&self) -> Direction {
        self.dir
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        self.walls[self.index(cell)]
    }

    pub fn markers_at(&self, cell: Cell) -> u8 {
        self.markers[self.index(cell)]
    }

    /// The cell one step from `cell` in direction `dir`, if inside the grid.
    pub fn neighbor(&self, (i, j): Cell, dir: Direction) -> Option<Cell> {
        let (di, dj) = dir.delta();
        let ni = i.checked_add_signed(di)?;
        let nj = j.checked_add_signed(dj)?;
        (ni < self.width && nj < self.height).then_some((ni, nj))
    }

    /// Whether the neighbour in `dir` exists and is not a wall.
    pub fn is_clear(&self, cell: Cell, dir: Direction) -> bool {
        self.neighbor(cell, dir).is_some_and(|n| !self.is_wall(n))
    }

    /// Wall cells in `(i, j)` lexicographic order.
    pub fn walls(&self) -> Vec<Cell> {
        self.cells().filter(|&c| self.is_wall(c)).collect()
    }

    /// Marker piles in `(i, j)` lexicographic order.
    pub fn markers(&self) -> Vec<(usize, usize, u8)> {
        self.cells()
            .filter_map(|c| {
                let k = self.markers_at(c);
                (k > 0).then_some((c.0, c.1, k))
            })
            .collect()
    }

    pub fn wall_count(&self) -> usize {
        self.walls.iter().filter(|&&w| w).count()
    }

    pub fn marker_cell_count(&self) -> usize {
        self.markers.iter().filter(|&&m| m > 0).count()
    }

    /// All cells in `(i, j)` lexicographic order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let h = self.height;
        (0..self.width).flat_map(move |i| (0..h).map(move |j| (i, j)))
    }

    /// Mirror image across the main diagonal.
    pub fn transpose(&self) -> Self {
        let walls = self.walls().into_iter().map(|(i, j)| (j, i));
        let markers = self.markers().into_iter().map(|(i, j, k)| (j, i, k));
        Self::new(
            self.height,
            self.width,
            walls,
            markers,
            (self.karel.1, self.karel.0),
            self.dir.transposed(),
        )
        .expect("transposing preserves validity")
    }

    pub(crate) fn set_pose(&mut self, karel: Cell, dir: Direction) {
        self.karel = karel;
        self.dir = dir;
    }

    pub(crate) fn set_markers(&mut self, cell: Cell, count: u8) {
        let k = self.index(cell);
        self.markers[k] = count;
    }

    /// Checks every invariant; constructors already enforce them, so this is
    /// for tests and for grids produced by mutation.
    pub fn check_invariants(&self) -> Result<(), GridError> {
        Self::new(
            self.width,
            self.height,
            self.walls(),
            self.markers(),
            self.karel,
            self.dir,
        )
        .map(|_| ())
    }
}

/// Text picture: `#` wall, `.` empty, a digit for a marker pile, and an arrow
/// for Karel.
impl fmt::Display for KarelGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.height {
            for i in 0..self.width {
                let c = (i, j);
                let ch = if c == self.karel {
                    match self.dir {
                        Direction::N => '^',
                        Direction::E => '>',
                        Direction::S => 'v',
                        Direction::W => '<',
                    }
                } else if self.is_wall(c) {
                    '#'
                } else {
                    match self.markers_at(c) {
                        0 => '.',
                        k => char::from(b'0' + k),
                    }
                };
                write!(f, "{ch}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl fmt::Debug for KarelGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "KarelGrid {}x{} at {:?} facing {:?}\n{}",
            self.width, self.height, self.karel, self.dir, self
        )
    }
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    w: usize,
    h: usize,
    walls: Vec<[usize; 2]>,
    markers: Vec<[usize; 3]>,
    karel: KarelJson,
}

#[derive(Serialize, Deserialize)]
struct KarelJson {
    pos: [usize; 2],
    dir: Direction,
}

impl Serialize for KarelGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GridJson {
            w: self.width,
            h: self.height,
            walls: self.walls().into_iter().map(|(i, j)| [i, j]).collect(),
            markers: self
                .markers()
                .into_iter()
                .map(|(i, j, k)| [i, j, k as usize])
                .collect(),
            karel: KarelJson {
                pos: [self.karel.0, self.karel.1],
                dir: self.dir,
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KarelGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let g = GridJson::deserialize(d)?;
        let mut markers = Vec::with_capacity(g.markers.len());
        for [i, j, k] in g.markers {
            let count = u8::try_from(k)
                .map_err(|_| serde::de::Error::custom(GridError::BadMarkerCount { i, j, count: u8::MAX }))?;
            markers.push((i, j, count));
        }
        KarelGrid::new(
            g.w,
            g.h,
            g.walls.into_iter().map(|[i, j]| (i, j)),
            markers,
            (g.karel.pos[0], g.karel.pos[1]),
            g.karel.dir,
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_layout_is_fixed() {
        let g = KarelGrid::new(3, 2, [(2, 0)], [(0, 1, 4)], (1, 1), Direction::E).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(
            text,
            r#"{"w":3,"h":2,"walls":[[2,0]],"markers":[[0,1,4]],"karel":{"pos":[1,1],"dir":"E"}}"#
        );
        let back: KarelGrid = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn invariants_are_enforced() {
        let e = |r: Result<KarelGrid, GridError>| r.unwrap_err();
        assert_eq!(
            e(KarelGrid::empty(1, 4, (0, 0), Direction::N)),
            GridError::BadSize(1)
        );
        assert_eq!(
            e(KarelGrid::empty(4, 17, (0, 0), Direction::N)),
            GridError::BadSize(17)
        );
        assert!(matches!(
            e(KarelGrid::new(4, 4, [], [(1, 1, 10)], (0, 0), Direction::N)),
            GridError::BadMarkerCount { .. }
        ));
        assert!(matches!(
            e(KarelGrid::new(4, 4, [], [(1, 1, 0)], (0, 0), Direction::N)),
            GridError::BadMarkerCount { .. }
        ));
        assert_eq!(
            e(KarelGrid::new(4, 4, [(1, 1)], [(1, 1, 2)], (0, 0), Direction::N)),
            GridError::WallWithMarkers(1, 1)
        );
        assert_eq!(
            e(KarelGrid::new(4, 4, [(0, 0)], [], (0, 0), Direction::N)),
            GridError::KarelOnWall(0, 0)
        );
        assert_eq!(
            e(KarelGrid::new(4, 4, [(5, 0)], [], (0, 0), Direction::N)),
            GridError::OutOfBounds(5, 0)
        );
        // Karel may share a cell with markers.
        assert!(KarelGrid::new(4, 4, [], [(0, 0, 3)], (0, 0), Direction::N).is_ok());
    }

    #[test]
    fn bad_json_is_rejected() {
        let text = r#"{"w":3,"h":2,"walls":[[1,1]],"markers":[],"karel":{"pos":[1,1],"dir":"E"}}"#;
        assert!(serde_json::from_str::<KarelGrid>(text).is_err());
        let text = r#"{"w":3,"h":2,"walls":[],"markers":[[0,0,300]],"karel":{"pos":[1,1],"dir":"E"}}"#;
        assert!(serde_json::from_str::<KarelGrid>(text).is_err());
    }

    #[test]
    fn rotations() {
        for d in Direction::ALL {
            assert_eq!(d.left().right(), d);
            assert_eq!(d.left().left().left().left(), d);
        }
    }

    #[test]
    fn clearance_respects_boundary_and_walls() {
        let g = KarelGrid::new(2, 2, [(1, 0)], [], (0, 0), Direction::E).unwrap();
        assert!(!g.is_clear((0, 0), Direction::E));
        assert!(!g.is_clear((0, 0), Direction::N));
        assert!(!g.is_clear((0, 0), Direction::W));
        assert!(g.is_clear((0, 0), Direction::S));
    }

    #[test]
    fn display_picture() {
        let g = KarelGrid::new(3, 2, [(2, 0)], [(0, 1, 4)], (1, 1), Direction::E).unwrap();
        assert_eq!(g.to_string(), "..#\n4>.\n");
    }
}
