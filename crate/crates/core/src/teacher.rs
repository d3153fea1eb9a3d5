//! Ground-truth teacher.
//!
//! The teacher is either present or absent for a whole episode. When present,
//! an `Ask` is answered with an object-in-view mask: a `k × k` egocentric
//! binary image with a 1 at the target instance's cell if (and only if) that
//! cell is inside the view window and visible from the agent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::grid::Pose;
use crate::env::view::window_position;
use crate::env::{EnvConfig, EpisodeSpec};
use crate::error::{Error, Result};

/// Teacher presence rate for a curriculum, in percent of episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresencePolicy {
    eta_percent: f64,
}

impl PresencePolicy {
    pub fn new(eta_percent: f64) -> Result<Self> {
        if !(0.0..=100.0).contains(&eta_percent) {
            return Err(Error::domain("curriculum.eta_percent", format!("{eta_percent} not in [0, 100]")));
        }
        Ok(PresencePolicy { eta_percent })
    }

    pub fn always() -> Self {
        PresencePolicy { eta_percent: 100.0 }
    }

    pub fn never() -> Self {
        PresencePolicy { eta_percent: 0.0 }
    }

    pub fn eta_percent(&self) -> f64 {
        self.eta_percent
    }
}

/// Bernoulli draw with `p = eta / 100`. Called once per episode.
pub fn sample_presence<R: Rng + ?Sized>(rng: &mut R, policy: PresencePolicy) -> bool {
    rng.random::<f64>() * 100.0 < policy.eta_percent
}

/// Binary egocentric mask in the same frame as the view window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectInViewMask {
    k: usize,
    cells: Vec<bool>,
}

impl ObjectInViewMask {
    pub fn zeros(k: usize) -> Self {
        ObjectInViewMask {
            k,
            cells: vec![false; k * k],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.k + col]
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|&b| !b)
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }
}

/// Mask marking the target instance when it is inside the view window and
/// in line of sight of the agent.
pub fn object_in_view_mask(cfg: &EnvConfig, spec: &EpisodeSpec, pose: Pose) -> ObjectInViewMask {
    let mut mask = ObjectInViewMask::zeros(cfg.view_k);
    let target = spec.target().cell;
    if let Some((row, col)) = window_position(pose, cfg.view_k, target) {
        if spec.grid.in_bounds(target) && spec.grid.line_of_sight(pose.cell, target) {
            mask.cells[row * cfg.view_k + col] = true;
        }
    }
    mask
}

/// Teacher's reply to an ask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AskOutcome {
    pub answered: bool,
    pub mask: ObjectInViewMask,
}

/// Answers an ask. An absent teacher never answers, and the mask is then
/// all-zero.
pub fn resolve_ask(presence: bool, cfg: &EnvConfig, spec: &EpisodeSpec, pose: Pose) -> AskOutcome {
    if presence {
        AskOutcome {
            answered: true,
            mask: object_in_view_mask(cfg, spec, pose),
        }
    } else {
        AskOutcome {
            answered: false,
            mask: ObjectInViewMask::zeros(cfg.view_k),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::grid::{Cell, GridMap, Heading};
    use crate::env::ObjectInstance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec_with(grid: GridMap, target: Cell, pose: Pose) -> EpisodeSpec {
        EpisodeSpec {
            grid,
            objects: vec![ObjectInstance { class_id: 3, cell: target }],
            target_class: 3,
            start_pose: pose,
            teacher_present: true,
            max_steps: 200,
            success_radius_m: 1.0,
        }
    }

    #[test]
    fn presence_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert!(!sample_presence(&mut rng, PresencePolicy::never()));
            assert!(sample_presence(&mut rng, PresencePolicy::always()));
        }
        assert!(PresencePolicy::new(150.0).is_err());
        assert!(PresencePolicy::new(-1.0).is_err());
    }

    #[test]
    fn presence_frequency_75() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let p = PresencePolicy::new(75.0).unwrap();
        let hits = (0..10_000).filter(|_| sample_presence(&mut rng, p)).count();
        let frac = hits as f64 / 10_000.0;
        assert!((0.73..=0.77).contains(&frac), "{frac}");
    }

    #[test]
    fn target_behind_agent_is_not_in_mask() {
        let cfg = EnvConfig::default();
        let pose = Pose {
            cell: Cell::new(5, 5),
            heading: Heading::North,
        };
        let spec = spec_with(GridMap::empty(11, 11), Cell::new(5, 7), pose);
        assert!(object_in_view_mask(&cfg, &spec, pose).is_zero());
    }

    #[test]
    fn target_ahead_marks_single_cell() {
        let cfg = EnvConfig::default();
        let pose = Pose {
            cell: Cell::new(5, 8),
            heading: Heading::North,
        };
        let spec = spec_with(GridMap::empty(11, 11), Cell::new(5, 6), pose);
        let mask = object_in_view_mask(&cfg, &spec, pose);
        assert_eq!(mask.count(), 1);
        assert!(mask.get(4, 3));
    }

    #[test]
    fn occluded_target_and_absent_teacher() {
        let cfg = EnvConfig::default();
        let pose = Pose {
            cell: Cell::new(5, 8),
            heading: Heading::North,
        };
        let mut grid = GridMap::empty(11, 11);
        grid.set_occupied(Cell::new(5, 7), true);
        let spec = spec_with(grid, Cell::new(5, 5), pose);
        let present = resolve_ask(true, &cfg, &spec, pose);
        assert!(present.answered && present.mask.is_zero());

        let open = spec_with(GridMap::empty(11, 11), Cell::new(5, 5), pose);
        let absent = resolve_ask(false, &cfg, &open, pose);
        assert!(!absent.answered && absent.mask.is_zero());
    }
}
