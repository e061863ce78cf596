use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GenError;
use crate::karel::{Cell, Direction, KarelGrid};
use crate::SeededRng;

/// Law of the number of markers placed on a marker cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MarkerCountDist {
    /// `Geom(0.5)` on `1, 2, …`, with all mass above 9 moved to 9.
    Geom,
    /// `U{1..9}`.
    Uniform,
    /// `10 − Geom(0.5)`, with all mass below 1 moved to 1.
    AntiGeom,
}

impl MarkerCountDist {
    pub const ALL: [MarkerCountDist; 3] = [
        MarkerCountDist::Geom,
        MarkerCountDist::Uniform,
        MarkerCountDist::AntiGeom,
    ];
}

pub fn sample_marker_count(rng: &mut SeededRng, dist: MarkerCountDist) -> u8 {
    // Geom(0.5) clamped at 9: stop at the first success, or at 9 anyway.
    let geom = |rng: &mut SeededRng| {
        let mut k = 1u8;
        while k < 9 && rng.random_bool(0.5) {
            k += 1;
        }
        k
    };
    match dist {
        MarkerCountDist::Geom => geom(rng),
        MarkerCountDist::Uniform => rng.random_range(1..=9),
        MarkerCountDist::AntiGeom => 10 - geom(rng),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NarrowGridParams {
    r_wall: f64,
    r_marker: f64,
    marker_dist: MarkerCountDist,
}

impl NarrowGridParams {
    pub fn new(r_wall: f64, r_marker: f64, marker_dist: MarkerCountDist) -> Result<Self, GenError> {
        for (name, r) in [("r_wall", r_wall), ("r_marker", r_marker)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(GenError::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {r}"
                )));
            }
        }
        if r_wall + r_marker > 1.0 {
            return Err(GenError::InvalidParameter(format!(
                "r_wall + r_marker must not exceed 1, got {}",
                r_wall + r_marker
            )));
        }
        Ok(Self {
            r_wall,
            r_marker,
            marker_dist,
        })
    }

    pub fn r_wall(&self) -> f64 {
        self.r_wall
    }

    pub fn r_marker(&self) -> f64 {
        self.r_marker
    }

    pub fn marker_dist(&self) -> MarkerCountDist {
        self.marker_dist
    }

    /// `(walls, marker cells)` for an `x × y` grid.
    pub fn cell_counts(&self, x: usize, y: usize) -> (usize, usize) {
        let xy = (x * y) as f64;
        (
            (xy * self.r_wall).floor() as usize,
            (xy * self.r_marker).floor() as usize,
        )
    }

    /// The twelve parameterizations of the narrow evaluation sets: four
    /// `(r_wall, r_marker)` pairs crossed with the three marker laws.
    pub fn presets() -> Vec<NarrowGridParams> {
        let pairs = [(0.05, 0.85), (0.25, 0.65), (0.65, 0.25), (0.85, 0.05)];
        pairs
            .into_iter()
            .flat_map(|(w, m)| {
                MarkerCountDist::ALL
                    .into_iter()
                    .map(move |d| NarrowGridParams::new(w, m, d).expect("valid table entry"))
            })
            .collect()
    }
}

fn random_pose(rng: &mut SeededRng, open: &[Cell]) -> (Cell, Direction) {
    let cell = open[rng.random_range(0..open.len())];
    let dir = Direction::ALL[rng.random_range(0..4)];
    (cell, dir)
}

/// Grid whose salient features are spread as widely as possible: size
/// `U{2..16}²`, wall and marker ratios `U(0, 1)`, per-cell Bernoulli walls
/// and markers (a wall wins when both fire), marker counts `U{1..9}`.
///
/// A grid that comes out entirely walled is discarded and drawn again.
pub fn sample_uniform_grid(rng: &mut SeededRng) -> KarelGrid {
    loop {
        let width = rng.random_range(2..=16usize);
        let height = rng.random_range(2..=16usize);
        let r_marker: f64 = rng.random();
        let r_wall: f64 = rng.random();
        let mut walls = Vec::new();
        let mut markers = Vec::new();
        let mut open = Vec::new();
        for i in 0..width {
            for j in 0..height {
                let m = rng.random_bool(r_marker);
                let w = rng.random_bool(r_wall);
                if w {
                    walls.push((i, j));
                    continue;
                }
                open.push((i, j));
                if m {
                    markers.push((i, j, rng.random_range(1..=9u8)));
                }
            }
        }
        if open.is_empty() {
            continue;
        }
        let (karel, dir) = random_pose(rng, &open);
        return KarelGrid::new(width, height, walls, markers, karel, dir).expect("sampled grid is valid");
    }
}

/// Grid with exactly `⌊xy·r_wall⌋` walls and `⌊xy·r_marker⌋` marker cells on
/// an `x × y` board, `x, y ~ U{10..16}`.
pub fn sample_narrow_grid(rng: &mut SeededRng, params: &NarrowGridParams) -> Result<KarelGrid, GenError> {
    let width = rng.random_range(10..=16usize);
    let height = rng.random_range(10..=16usize);
    let cells = width * height;
    let (n_walls, n_markers) = params.cell_counts(width, height);
    if n_walls + n_markers > cells {
        return Err(GenError::InvalidParameter(format!(
            "{n_walls} walls and {n_markers} marker cells do not fit in {width}x{height}"
        )));
    }
    if n_walls == cells {
        return Err(GenError::InvalidParameter(
            "r_wall leaves no free cell for Karel".into(),
        ));
    }
    let at = |k: usize| (k % width, k / width);
    let chosen = index::sample(rng, cells, n_walls + n_markers).into_vec();
    let mut is_wall = vec![false; cells];
    for &k in &chosen[..n_walls] {
        is_wall[k] = true;
    }
    let walls: Vec<Cell> = chosen[..n_walls].iter().map(|&k| at(k)).collect();
    let markers: Vec<(usize, usize, u8)> = chosen[n_walls..]
        .iter()
        .map(|&k| {
            let (i, j) = at(k);
            (i, j, sample_marker_count(rng, params.marker_dist))
        })
        .collect();
    let open: Vec<Cell> = (0..cells).filter(|&k| !is_wall[k]).map(at).collect();
    let (karel, dir) = random_pose(rng, &open);
    Ok(KarelGrid::new(width, height, walls, markers, karel, dir).expect("sampled grid is valid"))
}

/// Anything that can produce input grids for task construction.
pub trait GridSource {
    fn sample_grid(&self, rng: &mut SeededRng) -> Result<KarelGrid, GenError>;
}

/// The two built-in grid distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridSampler {
    Uniform,
    Narrow(NarrowGridParams),
}

impl GridSource for GridSampler {
    fn sample_grid(&self, rng: &mut SeededRng) -> Result<KarelGrid, GenError> {
        match self {
            GridSampler::Uniform => Ok(sample_uniform_grid(rng)),
            GridSampler::Narrow(p) => sample_narrow_grid(rng, p),
        }
    }
}

impl<F> GridSource for F
where
    F: Fn(&mut SeededRng) -> KarelGrid,
{
    fn sample_grid(&self, rng: &mut SeededRng) -> Result<KarelGrid, GenError> {
        Ok(self(rng))
    }
}
