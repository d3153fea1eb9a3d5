//! Deterministic grid-world object-goal navigation.
//!
//! An episode places a handful of objects of distinct classes in a small
//! walled arena with random obstacles. The agent must reach a cell within
//! the success radius of the one object whose class is the episode target
//! and issue `Stop`. Observations are egocentric, occlusion-aware symbolic
//! windows (see [`view`]).

pub mod episode;
pub mod grid;
pub mod view;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use episode::{Episode, EpisodeState, StepInfo, StepOutcome};
pub use grid::{geodesic_distance, Cell, DistanceField, GridMap, Heading, Pose};
pub use view::{render_egoview, EgoView};

/// Environment parameters. Field names double as config keys in the `env`
/// section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub grid_w: usize,
    pub grid_h: usize,
    pub obstacle_density: f64,
    pub num_objects: usize,
    pub vocab_size: usize,
    pub seen_classes: usize,
    pub max_steps: usize,
    pub success_radius_m: f64,
    pub cell_size_m: f64,
    pub view_k: usize,
    /// Also require the target to be visible when stopping.
    pub require_visible_at_stop: bool,
    /// Number of observations an answered ask stays in the feedback channel.
    pub feedback_persistence_steps: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            grid_w: 11,
            grid_h: 11,
            obstacle_density: 0.15,
            num_objects: 6,
            vocab_size: 12,
            seen_classes: 8,
            max_steps: 200,
            success_radius_m: 1.0,
            cell_size_m: 0.25,
            view_k: 7,
            require_visible_at_stop: false,
            feedback_persistence_steps: 1,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_w < 3 || self.grid_h < 3 {
            return Err(Error::domain("env.grid_w", "arena needs at least 3x3 cells"));
        }
        if !(0.0..1.0).contains(&self.obstacle_density) {
            return Err(Error::domain("env.obstacle_density", "must be in [0, 1)"));
        }
        if self.num_objects == 0 {
            return Err(Error::domain("env.num_objects", "must be positive"));
        }
        if self.num_objects > self.vocab_size {
            return Err(Error::domain(
                "env.num_objects",
                "objects carry distinct classes, so num_objects <= vocab_size",
            ));
        }
        if self.seen_classes == 0 || self.seen_classes >= self.vocab_size {
            return Err(Error::domain("env.seen_classes", "must satisfy 0 < seen_classes < vocab_size"));
        }
        if self.max_steps == 0 {
            return Err(Error::domain("env.max_steps", "must be positive"));
        }
        if !(self.cell_size_m > 0.0 && self.cell_size_m.is_finite()) {
            return Err(Error::domain("env.cell_size_m", "must be positive"));
        }
        if !(self.success_radius_m >= 0.0 && self.success_radius_m.is_finite()) {
            return Err(Error::domain("env.success_radius_m", "must be non-negative"));
        }
        if self.view_k == 0 || self.view_k.is_multiple_of(2) {
            return Err(Error::domain("env.view_k", "must be odd and positive"));
        }
        Ok(())
    }

    /// Number of observation channels: occupied, visible, one per class,
    /// feedback.
    pub fn channels(&self) -> usize {
        self.vocab_size + 3
    }

    /// Whether two cells are within the success radius of each other.
    pub fn within_radius(&self, a: Cell, b: Cell) -> bool {
        let d = (a.dist2(b) as f64).sqrt() * self.cell_size_m;
        d <= self.success_radius_m + 1e-9
    }
}

/// Navigation actions plus the optional ask-for-help action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    MoveAhead,
    MoveBack,
    RotateLeft,
    RotateRight,
    Pass,
    Stop,
    Ask,
}

impl Action {
    pub const ALL: [Action; 7] = [
        Action::MoveAhead,
        Action::MoveBack,
        Action::RotateLeft,
        Action::RotateRight,
        Action::Pass,
        Action::Stop,
        Action::Ask,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// The action set available to an agent: six navigation actions, plus `Ask`
/// when the feedback capability is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpace {
    pub ask_enabled: bool,
}

impl ActionSpace {
    pub fn new(ask_enabled: bool) -> Self {
        ActionSpace { ask_enabled }
    }

    pub fn len(&self) -> usize {
        if self.ask_enabled {
            7
        } else {
            6
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn action(&self, i: usize) -> Option<Action> {
        (i < self.len()).then(|| Action::ALL[i])
    }

    pub fn contains(&self, a: Action) -> bool {
        a.index() < self.len()
    }

    pub fn legal_mask(&self) -> Vec<bool> {
        vec![true; self.len()]
    }
}

/// One placed object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub class_id: usize,
    pub cell: Cell,
}

/// Everything fixed at the start of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub grid: GridMap,
    pub objects: Vec<ObjectInstance>,
    pub target_class: usize,
    pub start_pose: Pose,
    pub teacher_present: bool,
    pub max_steps: usize,
    pub success_radius_m: f64,
}

impl EpisodeSpec {
    /// The unique instance of the target class.
    pub fn target(&self) -> &ObjectInstance {
        self.objects
            .iter()
            .find(|o| o.class_id == self.target_class)
            .expect("episode has exactly one target instance")
    }

    pub fn object_at(&self, c: Cell) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.cell == c)
    }

    /// Free cells within the success radius of the target.
    pub fn success_region(&self, cfg: &EnvConfig) -> Vec<Cell> {
        let target = self.target().cell;
        let cfg = EnvConfig {
            success_radius_m: self.success_radius_m,
            ..cfg.clone()
        };
        self.grid
            .free_cells()
            .into_iter()
            .filter(|&c| cfg.within_radius(c, target))
            .collect()
    }

    /// Checks the structural invariants of a spec.
    pub fn check(&self, cfg: &EnvConfig) -> Result<()> {
        let fail = |m: &str| Err(Error::Contract(m.to_string()));
        if !self.grid.border_closed() {
            return fail("border not closed");
        }
        if !self.grid.free_space_connected() {
            return fail("free space not connected");
        }
        if self.objects.iter().filter(|o| o.class_id == self.target_class).count() != 1 {
            return fail("target class must appear exactly once");
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.class_id >= cfg.vocab_size || self.grid.is_occupied(o.cell) {
                return fail("object on occupied cell or out of vocabulary");
            }
            if self.objects[..i].iter().any(|p| p.cell == o.cell) {
                return fail("two objects share a cell");
            }
        }
        if self.grid.is_occupied(self.start_pose.cell) {
            return fail("start pose on occupied cell");
        }
        if geodesic_distance(&self.grid, self.start_pose.cell, &self.success_region(cfg)).is_none() {
            return fail("target unreachable");
        }
        Ok(())
    }
}

const MAX_GENERATION_ATTEMPTS: usize = 10_000;

/// Samples a fresh episode whose target class is drawn from `pool`.
///
/// Obstacles are resampled until the free space is connected. Object cells
/// are distinct free cells; the start cell is a free cell holding no object
/// and lying outside the success region (unless the arena is so small that
/// no such cell exists). The teacher is marked absent; presence is decided
/// by the caller.
pub fn generate_episode<R: Rng + ?Sized>(rng: &mut R, cfg: &EnvConfig, pool: &[usize]) -> Result<EpisodeSpec> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::Config("target class pool is empty".into()));
    }
    if let Some(&bad) = pool.iter().find(|&&c| c >= cfg.vocab_size) {
        return Err(Error::Config(format!("class {bad} outside vocabulary")));
    }
    let interior = (cfg.grid_w - 2) * (cfg.grid_h - 2);
    if cfg.num_objects + 1 > interior {
        return Err(Error::Config(format!(
            "{} objects plus the agent exceed {interior} free cells",
            cfg.num_objects
        )));
    }

    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let mut grid = GridMap::empty(cfg.grid_w, cfg.grid_h);
        for y in 1..cfg.grid_h as i32 - 1 {
            for x in 1..cfg.grid_w as i32 - 1 {
                if rng.random::<f64>() < cfg.obstacle_density {
                    grid.set_occupied(Cell::new(x, y), true);
                }
            }
        }
        let free = grid.free_cells();
        if free.len() < cfg.num_objects + 1 || !grid.free_space_connected() {
            continue;
        }

        let target_class = pool[rng.random_range(0..pool.len())];
        let mut classes = vec![target_class];
        let others: Vec<usize> = (0..cfg.vocab_size).filter(|&c| c != target_class).collect();
        classes.extend(index::sample(rng, others.len(), cfg.num_objects - 1).iter().map(|i| others[i]));
        let objects: Vec<ObjectInstance> = index::sample(rng, free.len(), cfg.num_objects)
            .iter()
            .zip(classes)
            .map(|(i, class_id)| ObjectInstance {
                class_id,
                cell: free[i],
            })
            .collect();

        let target_cell = objects[0].cell;
        let empty_cells: Vec<Cell> = free
            .iter()
            .copied()
            .filter(|c| objects.iter().all(|o| o.cell != *c))
            .collect();
        let outside: Vec<Cell> = empty_cells
            .iter()
            .copied()
            .filter(|&c| !cfg.within_radius(c, target_cell))
            .collect();
        let candidates = if outside.is_empty() { &empty_cells } else { &outside };
        let cell = candidates[rng.random_range(0..candidates.len())];
        let heading = Heading::from_index(rng.random_range(0..4));

        return Ok(EpisodeSpec {
            grid,
            objects,
            target_class,
            start_pose: Pose { cell, heading },
            teacher_present: false,
            max_steps: cfg.max_steps,
            success_radius_m: cfg.success_radius_m,
        });
    }
    Err(Error::Config(
        "could not sample a connected arena; lower env.obstacle_density".into(),
    ))
}
