//! Egocentric symbolic observations.
//!
//! The window is `k × k` cells with the agent at the bottom-center cell,
//! facing up. Row 0 is the farthest row ahead. Channels, in order:
//! occupied, visible, one channel per object class, feedback mask.
//!
//! A cell is visible when it lies inside the arena and the line of sight
//! from the agent's cell is clear. Out-of-bounds cells render as occupied
//! and invisible. In-bounds cells that are not visible carry no
//! information at all (every channel 0).

use super::grid::{Cell, Pose};
use super::{ActionSpace, EnvConfig, EpisodeSpec, EpisodeState};
use crate::teacher::ObjectInViewMask;

pub const CH_OCCUPIED: usize = 0;
pub const CH_VISIBLE: usize = 1;
pub const CH_CLASS0: usize = 2;

/// Egocentric observation: a `k × k × channels` binary window plus an
/// auxiliary vector (target one-hot, teacher presence bit, last action
/// one-hot).
#[derive(Debug, Clone, PartialEq)]
pub struct EgoView {
    pub k: usize,
    pub channels: usize,
    /// Channel-major: `window[(ch * k + row) * k + col]`.
    pub window: Vec<f64>,
    pub aux: Vec<f64>,
}

impl EgoView {
    pub fn get(&self, ch: usize, row: usize, col: usize) -> f64 {
        self.window[(ch * self.k + row) * self.k + col]
    }

    fn set(&mut self, ch: usize, row: usize, col: usize) {
        self.window[(ch * self.k + row) * self.k + col] = 1.0;
    }

    pub fn feedback_channel(&self) -> usize {
        self.channels - 1
    }

    /// Flattened `window ++ aux`, the network input for one frame.
    pub fn features(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.window.len() + self.aux.len());
        self.extend_features(&mut out);
        out
    }

    pub fn extend_features(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.window);
        out.extend_from_slice(&self.aux);
    }

    pub fn feature_len(cfg: &EnvConfig, space: ActionSpace) -> usize {
        cfg.view_k * cfg.view_k * cfg.channels() + cfg.vocab_size + 1 + space.len()
    }
}

/// World cell shown at window position (`row`, `col`).
pub fn window_cell(pose: Pose, k: usize, row: usize, col: usize) -> Cell {
    let ahead = (k - 1 - row) as i32;
    let side = col as i32 - (k / 2) as i32;
    let (fx, fy) = pose.heading.forward();
    let (rx, ry) = pose.heading.right();
    pose.cell.offset(ahead * fx + side * rx, ahead * fy + side * ry)
}

/// Inverse of [`window_cell`]: the window position of a world cell, if it
/// falls inside the window.
pub fn window_position(pose: Pose, k: usize, cell: Cell) -> Option<(usize, usize)> {
    let (dx, dy) = (cell.x - pose.cell.x, cell.y - pose.cell.y);
    let (fx, fy) = pose.heading.forward();
    let (rx, ry) = pose.heading.right();
    let ahead = dx * fx + dy * fy;
    let side = dx * rx + dy * ry;
    let half = (k / 2) as i32;
    if ahead < 0 || ahead >= k as i32 || side.abs() > half {
        return None;
    }
    Some((k - 1 - ahead as usize, (side + half) as usize))
}

pub fn render_egoview(
    cfg: &EnvConfig,
    spec: &EpisodeSpec,
    state: &EpisodeState,
    space: ActionSpace,
    feedback: Option<&ObjectInViewMask>,
) -> EgoView {
    let k = cfg.view_k;
    let channels = cfg.channels();
    let mut view = EgoView {
        k,
        channels,
        window: vec![0.0; k * k * channels],
        aux: vec![0.0; cfg.vocab_size + 1 + space.len()],
    };
    let agent = state.pose.cell;
    for row in 0..k {
        for col in 0..k {
            let cell = window_cell(state.pose, k, row, col);
            if !spec.grid.in_bounds(cell) {
                view.set(CH_OCCUPIED, row, col);
                continue;
            }
            if !spec.grid.line_of_sight(agent, cell) {
                continue;
            }
            view.set(CH_VISIBLE, row, col);
            if spec.grid.is_occupied(cell) {
                view.set(CH_OCCUPIED, row, col);
            }
            if let Some(obj) = spec.object_at(cell) {
                view.set(CH_CLASS0 + obj.class_id, row, col);
            }
        }
    }
    if let Some(mask) = feedback {
        let ch = view.feedback_channel();
        for row in 0..k {
            for col in 0..k {
                if mask.get(row, col) {
                    view.set(ch, row, col);
                }
            }
        }
    }
    view.aux[spec.target_class] = 1.0;
    if spec.teacher_present {
        view.aux[cfg.vocab_size] = 1.0;
    }
    if let Some(a) = state.last_action {
        debug_assert!(space.contains(a));
        view.aux[cfg.vocab_size + 1 + a.index()] = 1.0;
    }
    view
}
