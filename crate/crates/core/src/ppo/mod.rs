//! Proximal policy optimization: rollouts, GAE, the clipped surrogate
//! update, Adam and the reward definition.

pub mod adam;
pub mod gae;
pub mod reward;
pub mod rollout;
pub mod update;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use adam::{adam_step, AdamState};
pub use reward::{compute_reward, RewardConfig};
pub use rollout::{collect_rollout, compute_gae, Lane, RolloutBuffer, RolloutContext, Transition};
pub use update::{ppo_update, PpoStats};

/// `ppo` config section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub horizon: usize,
    pub learning_rate: f64,
    /// Global gradient-norm clip; off when absent.
    pub max_grad_norm: Option<f64>,
    /// Rollout lanes per update. Fixed independently of `workers` so results
    /// do not depend on the thread count.
    pub num_envs: usize,
    pub workers: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            epochs_per_update: 4,
            minibatch_size: 256,
            horizon: 2048,
            learning_rate: 3e-4,
            max_grad_norm: None,
            num_envs: 4,
            workers: 1,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |key: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::domain(key, format!("{v} not in [0, 1]")))
            }
        };
        unit("ppo.gamma", self.gamma)?;
        unit("ppo.gae_lambda", self.gae_lambda)?;
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon.is_finite()) {
            return Err(Error::domain("ppo.clip_epsilon", "must be positive"));
        }
        for (key, v) in [
            ("ppo.value_coef", self.value_coef),
            ("ppo.entropy_coef", self.entropy_coef),
            ("ppo.learning_rate", self.learning_rate),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(key, "must be finite"));
            }
        }
        if let Some(n) = self.max_grad_norm {
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::domain("ppo.max_grad_norm", "must be positive"));
            }
        }
        for (key, v) in [
            ("ppo.epochs_per_update", self.epochs_per_update),
            ("ppo.minibatch_size", self.minibatch_size),
            ("ppo.num_envs", self.num_envs),
            ("ppo.workers", self.workers),
        ] {
            if v == 0 {
                return Err(Error::domain(key, "must be positive"));
            }
        }
        Ok(())
    }
}
