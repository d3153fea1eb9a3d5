//! Occupancy grid, headings, supercover line of sight and breadth-first
//! geodesic distances.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Integer grid coordinate. `x` grows east, `y` grows south.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn neighbors4(self) -> [Cell; 4] {
        [
            self.offset(0, -1),
            self.offset(1, 0),
            self.offset(0, 1),
            self.offset(-1, 0),
        ]
    }

    /// Squared Euclidean distance between cell centers, in cells².
    pub fn dist2(self, other: Cell) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Heading {
        Self::ALL[i % 4]
    }

    /// Unit step in world coordinates.
    pub fn forward(self) -> (i32, i32) {
        match self {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        }
    }

    /// Unit step to the agent's right.
    pub fn right(self) -> (i32, i32) {
        self.rotate_right().forward()
    }

    pub fn rotate_left(self) -> Heading {
        Self::from_index(self.index() + 3)
    }

    pub fn rotate_right(self) -> Heading {
        Self::from_index(self.index() + 1)
    }
}

/// Agent position and orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub cell: Cell,
    pub heading: Heading,
}

/// Rectangular occupancy grid. Occupied cells are walls or obstacles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridMap {
    width: usize,
    height: usize,
    occupied: Vec<bool>,
}

impl GridMap {
    /// Arena with a closed border and an empty interior.
    pub fn empty(width: usize, height: usize) -> Self {
        let mut grid = GridMap {
            width,
            height,
            occupied: vec![false; width * height],
        };
        for x in 0..width as i32 {
            grid.set_occupied(Cell::new(x, 0), true);
            grid.set_occupied(Cell::new(x, height as i32 - 1), true);
        }
        for y in 0..height as i32 {
            grid.set_occupied(Cell::new(0, y), true);
            grid.set_occupied(Cell::new(width as i32 - 1, y), true);
        }
        grid
    }

    /// Builds a grid from text rows: `#` is occupied, anything else free.
    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut occupied = Vec::with_capacity(width * height);
        for row in rows {
            assert_eq!(row.chars().count(), width, "ragged grid rows");
            occupied.extend(row.chars().map(|c| c == '#'));
        }
        GridMap {
            width,
            height,
            occupied,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    fn index(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    /// Out-of-bounds cells count as occupied.
    pub fn is_occupied(&self, c: Cell) -> bool {
        !self.in_bounds(c) || self.occupied[self.index(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_occupied(c)
    }

    pub fn set_occupied(&mut self, c: Cell, value: bool) {
        let i = self.index(c);
        self.occupied[i] = value;
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height as i32).flat_map(move |y| (0..self.width as i32).map(move |x| Cell::new(x, y)))
    }

    pub fn free_cells(&self) -> Vec<Cell> {
        self.cells().filter(|&c| self.is_free(c)).collect()
    }

    pub fn border_closed(&self) -> bool {
        self.cells().all(|c| {
            let border = c.x == 0
                || c.y == 0
                || c.x as usize == self.width - 1
                || c.y as usize == self.height - 1;
            !border || self.is_occupied(c)
        })
    }

    /// True when the free cells form a single 4-connected component.
    pub fn free_space_connected(&self) -> bool {
        let free = self.free_cells();
        let Some(&first) = free.first() else {
            return true;
        };
        let field = self.distance_field(&[first]);
        free.iter().all(|&c| field.get(c).is_some())
    }

    /// Multi-source breadth-first distances (in 4-connected steps) from
    /// `sources` over free cells.
    pub fn distance_field(&self, sources: &[Cell]) -> DistanceField {
        let mut dist = vec![u32::MAX; self.width * self.height];
        let mut queue = VecDeque::new();
        for &s in sources {
            if self.is_free(s) && dist[self.index(s)] == u32::MAX {
                dist[self.index(s)] = 0;
                queue.push_back(s);
            }
        }
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c)];
            for n in c.neighbors4() {
                if self.is_free(n) && dist[self.index(n)] == u32::MAX {
                    dist[self.index(n)] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        DistanceField {
            width: self.width,
            height: self.height,
            dist,
        }
    }

    /// Whether the straight segment between the centers of `a` and `b` is
    /// unobstructed.
    ///
    /// Every cell whose closed square touches the segment (the supercover)
    /// is tested, except the two endpoints. When the segment passes exactly
    /// through a cell corner both side cells are included, so diagonal gaps
    /// between two walls block sight. The relation is symmetric.
    pub fn line_of_sight(&self, a: Cell, b: Cell) -> bool {
        supercover(a, b)
            .into_iter()
            .filter(|&c| c != a && c != b)
            .all(|c| self.is_free(c))
    }
}

/// Supercover traversal of the segment between two cell centers, including
/// both endpoints.
pub fn supercover(a: Cell, b: Cell) -> Vec<Cell> {
    let mut out = vec![a];
    let (mut x, mut y) = (a.x, a.y);
    let (mut dx, mut dy) = (b.x - a.x, b.y - a.y);
    let xstep = if dx < 0 {
        dx = -dx;
        -1
    } else {
        1
    };
    let ystep = if dy < 0 {
        dy = -dy;
        -1
    } else {
        1
    };
    let (ddx, ddy) = (2 * dx, 2 * dy);
    if ddx >= ddy {
        let mut error = dx;
        let mut errorprev = dx;
        for _ in 0..dx {
            x += xstep;
            error += ddy;
            if error > ddx {
                y += ystep;
                error -= ddx;
                match (error + errorprev).cmp(&ddx) {
                    std::cmp::Ordering::Less => out.push(Cell::new(x, y - ystep)),
                    std::cmp::Ordering::Greater => out.push(Cell::new(x - xstep, y)),
                    std::cmp::Ordering::Equal => {
                        out.push(Cell::new(x, y - ystep));
                        out.push(Cell::new(x - xstep, y));
                    }
                }
            }
            out.push(Cell::new(x, y));
            errorprev = error;
        }
    } else {
        let mut error = dy;
        let mut errorprev = dy;
        for _ in 0..dy {
            y += ystep;
            error += ddx;
            if error > ddy {
                x += xstep;
                error -= ddy;
                match (error + errorprev).cmp(&ddy) {
                    std::cmp::Ordering::Less => out.push(Cell::new(x - xstep, y)),
                    std::cmp::Ordering::Greater => out.push(Cell::new(x, y - ystep)),
                    std::cmp::Ordering::Equal => {
                        out.push(Cell::new(x - xstep, y));
                        out.push(Cell::new(x, y - ystep));
                    }
                }
            }
            out.push(Cell::new(x, y));
            errorprev = error;
        }
    }
    out
}

/// Shortest 4-connected free-cell path length from `start` to any cell of
/// `goal_region`; `None` when unreachable.
pub fn geodesic_distance(grid: &GridMap, start: Cell, goal_region: &[Cell]) -> Option<u32> {
    if goal_region.contains(&start) {
        return Some(0);
    }
    grid.distance_field(goal_region).get(start)
}

/// Per-cell breadth-first distances to a source set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    dist: Vec<u32>,
}

impl DistanceField {
    pub fn get(&self, c: Cell) -> Option<u32> {
        if c.x < 0 || c.y < 0 || c.x as usize >= self.width || c.y as usize >= self.height {
            return None;
        }
        match self.dist[c.y as usize * self.width + c.x as usize] {
            u32::MAX => None,
            d => Some(d),
        }
    }
}
