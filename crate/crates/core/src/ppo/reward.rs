use serde::{Deserialize, Serialize};

use crate::env::{Action, StepInfo};

/// Reward shaping parameters (`reward` config section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub success_reward: f64,
    pub step_penalty: f64,
    /// Multiplies the decrease in geodesic distance (meters) to the success
    /// region. Zero gives a sparse reward.
    pub shaping_coef: f64,
    pub ask_cost: f64,
    pub failed_stop_reward: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            success_reward: 10.0,
            step_penalty: -0.01,
            shaping_coef: 1.0,
            ask_cost: 0.0,
            failed_stop_reward: 0.0,
        }
    }
}

/// Per-step reward:
/// `step_penalty + shaping·Δgeodesic·cell_size + success_reward·[success]
///  + failed_stop_reward·[Stop ∧ ¬success] + ask_cost·[Ask]`.
pub fn compute_reward(info: &StepInfo, success: bool, action: Action, cfg: &RewardConfig, cell_size_m: f64) -> f64 {
    let mut r = cfg.step_penalty;
    if let (Some(before), Some(after)) = (info.geodesic_before, info.geodesic_after) {
        r += cfg.shaping_coef * (before as f64 - after as f64) * cell_size_m;
    }
    if success {
        r += cfg.success_reward;
    }
    if action == Action::Stop && !success {
        r += cfg.failed_stop_reward;
    }
    if action == Action::Ask {
        r += cfg.ask_cost;
    }
    r
}
