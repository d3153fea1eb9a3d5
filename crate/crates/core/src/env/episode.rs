use super::grid::{Cell, DistanceField, Pose};
use super::view::{render_egoview, EgoView};
use super::{Action, ActionSpace, EnvConfig, EpisodeSpec};
use crate::error::{Error, Result};
use crate::ppo::reward::{compute_reward, RewardConfig};
use crate::teacher::{object_in_view_mask, resolve_ask};

/// Mutable per-episode state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeState {
    pub pose: Pose,
    pub steps: usize,
    /// Executed cell translations.
    pub path_length: usize,
    pub done: bool,
    pub success: bool,
    pub last_action: Option<Action>,
    /// Observations, starting with the current one, that still carry the
    /// teacher's mask.
    pub feedback_remaining: usize,
    pub asks: usize,
}

impl EpisodeState {
    pub fn start(spec: &EpisodeSpec) -> Self {
        EpisodeState {
            pose: spec.start_pose,
            steps: 0,
            path_length: 0,
            done: false,
            success: false,
            last_action: None,
            feedback_remaining: 0,
            asks: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepInfo {
    pub geodesic_before: Option<u32>,
    pub geodesic_after: Option<u32>,
    pub path_length: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_view: EgoView,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
    pub info: StepInfo,
}

/// Success test applied at `Stop`: the agent's cell center lies within the
/// success radius of the target cell (inclusive), and optionally the target
/// is currently visible.
pub fn success_check(cfg: &EnvConfig, spec: &EpisodeSpec, state: &EpisodeState) -> bool {
    let radius = EnvConfig {
        success_radius_m: spec.success_radius_m,
        ..cfg.clone()
    };
    let close = radius.within_radius(state.pose.cell, spec.target().cell);
    close && (!cfg.require_visible_at_stop || !object_in_view_mask(cfg, spec, state.pose).is_zero())
}

/// A running episode: spec, state and a precomputed distance field to the
/// success region.
#[derive(Debug, Clone)]
pub struct Episode {
    cfg: EnvConfig,
    reward: RewardConfig,
    space: ActionSpace,
    spec: EpisodeSpec,
    state: EpisodeState,
    to_goal: DistanceField,
    shortest: Option<u32>,
}

impl Episode {
    pub fn new(cfg: &EnvConfig, reward: &RewardConfig, space: ActionSpace, spec: EpisodeSpec) -> Self {
        let region = spec.success_region(cfg);
        let to_goal = spec.grid.distance_field(&region);
        let state = EpisodeState::start(&spec);
        let shortest = to_goal.get(state.pose.cell);
        Episode {
            cfg: cfg.clone(),
            reward: reward.clone(),
            space,
            spec,
            state,
            to_goal,
            shortest,
        }
    }

    pub fn spec(&self) -> &EpisodeSpec {
        &self.spec
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    pub fn space(&self) -> ActionSpace {
        self.space
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    /// Geodesic distance from the start pose to the success region.
    pub fn shortest_path(&self) -> Option<u32> {
        self.shortest
    }

    pub fn geodesic_to_goal(&self, c: Cell) -> Option<u32> {
        self.to_goal.get(c)
    }

    pub fn observe(&self) -> EgoView {
        let mask = (self.state.feedback_remaining > 0)
            .then(|| object_in_view_mask(&self.cfg, &self.spec, self.state.pose));
        render_egoview(&self.cfg, &self.spec, &self.state, self.space, mask.as_ref())
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.state.done {
            return Err(Error::Contract("step called on a finished episode".into()));
        }
        if !self.space.contains(action) {
            return Err(Error::Contract(format!("{action:?} is not legal in this configuration")));
        }
        let before = self.to_goal.get(self.state.pose.cell);
        self.state.feedback_remaining = self.state.feedback_remaining.saturating_sub(1);

        let pose = self.state.pose;
        let mut stopped = false;
        match action {
            Action::MoveAhead | Action::MoveBack => {
                let (fx, fy) = pose.heading.forward();
                let sign = if action == Action::MoveAhead { 1 } else { -1 };
                let dest = pose.cell.offset(sign * fx, sign * fy);
                if self.spec.grid.is_free(dest) {
                    self.state.pose.cell = dest;
                    self.state.path_length += 1;
                }
            }
            Action::RotateLeft => self.state.pose.heading = pose.heading.rotate_left(),
            Action::RotateRight => self.state.pose.heading = pose.heading.rotate_right(),
            Action::Pass => {}
            Action::Stop => stopped = true,
            Action::Ask => {
                self.state.asks += 1;
                let reply = resolve_ask(self.spec.teacher_present, &self.cfg, &self.spec, pose);
                if reply.answered {
                    self.state.feedback_remaining = self.cfg.feedback_persistence_steps;
                }
            }
        }
        self.state.steps += 1;
        self.state.last_action = Some(action);
        let success = stopped && success_check(&self.cfg, &self.spec, &self.state);
        self.state.success = success;
        self.state.done = stopped || self.state.steps >= self.spec.max_steps;

        let info = StepInfo {
            geodesic_before: before,
            geodesic_after: self.to_goal.get(self.state.pose.cell),
            path_length: self.state.path_length,
        };
        let reward = compute_reward(&info, success, action, &self.reward, self.cfg.cell_size_m);
        Ok(StepOutcome {
            next_view: self.observe(),
            reward,
            done: self.state.done,
            success,
            info,
        })
    }
}
