//! Run configuration.
//!
//! The document format is TOML-compatible dotted key/value text:
//!
//! ```text
//! seed = 3
//! curriculum.method = "semi"
//! curriculum.eta_percent = 75
//! env.obstacle_density = 0.15
//! ```
//!
//! Every key has a default; unknown keys are rejected with their location.

use serde::{Deserialize, Serialize};

use crate::agent::ActionSelection;
use crate::curriculum::{CurriculumConfig, Method};
use crate::env::{EgoView, EnvConfig};
use crate::error::{Error, Result};
use crate::net::Architecture;
use crate::ppo::{PpoConfig, RewardConfig};
use crate::teacher::PresencePolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    /// Number of most recent frames fed to the network.
    pub obs_stack: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden: vec![128, 64],
            obs_stack: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    pub selection: ActionSelection,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            episodes: 500,
            selection: ActionSelection::Sample,
            seed: 1_000_003,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: String,
    /// Write a checkpoint every this many updates (and always at the end).
    pub checkpoint_every: usize,
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub reward: RewardConfig,
    pub curriculum: CurriculumConfig,
    pub net: NetConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output_dir: "runs/default".into(),
            checkpoint_every: 50,
            env: EnvConfig::default(),
            ppo: PpoConfig::default(),
            reward: RewardConfig::default(),
            curriculum: CurriculumConfig::default(),
            net: NetConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.ppo.validate()?;
        PresencePolicy::new(self.curriculum.eta_percent)?;
        for (key, v) in [
            ("reward.success_reward", self.reward.success_reward),
            ("reward.step_penalty", self.reward.step_penalty),
            ("reward.shaping_coef", self.reward.shaping_coef),
            ("reward.ask_cost", self.reward.ask_cost),
            ("reward.failed_stop_reward", self.reward.failed_stop_reward),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(key, "must be finite"));
            }
        }
        if self.net.obs_stack == 0 {
            return Err(Error::domain("net.obs_stack", "must be positive"));
        }
        if self.net.hidden.contains(&0) {
            return Err(Error::domain("net.hidden", "layer widths must be positive"));
        }
        if self.eval.episodes == 0 {
            return Err(Error::domain("eval.episodes", "must be positive"));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::domain("checkpoint_every", "must be positive"));
        }
        Ok(())
    }

    pub fn architecture(&self) -> Result<Architecture> {
        let space = self.curriculum.action_space();
        let frame = EgoView::feature_len(&self.env, space);
        Architecture::new(frame * self.net.obs_stack, self.net.hidden.clone(), space.len())
    }

    pub fn to_document(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses a config document, applying defaults for missing keys.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().replace('\n', " ")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Whether the document sets the top-level `seed` key.
pub fn document_sets_seed(text: &str) -> bool {
    text.parse::<toml::Table>().is_ok_and(|t| t.contains_key("seed"))
}

/// Command-line values that take precedence over the config document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    pub method: Option<Method>,
    pub eta_percent: Option<f64>,
    pub iterations: Option<usize>,
    pub sparse_reward: bool,
}

/// Resolves the final config. Seed precedence: command line, config
/// document, then the `ASKNAV_SEED` fallback value, then 0.
pub fn resolve(text: &str, overrides: &Overrides, env_seed: Option<&str>) -> Result<RunConfig> {
    let mut cfg = parse_config(text)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    } else if !document_sets_seed(text) {
        if let Some(s) = env_seed {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::domain("ASKNAV_SEED", format!("`{s}` is not an unsigned integer")))?;
        }
    }
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(m) = overrides.method {
        cfg.curriculum.method = m;
        if m == Method::Feedback {
            cfg.curriculum.eta_percent = 100.0;
        }
    }
    if let Some(eta) = overrides.eta_percent {
        cfg.curriculum.eta_percent = eta;
    }
    if let Some(n) = overrides.iterations {
        cfg.curriculum.total_iterations = n;
    }
    if overrides.sparse_reward {
        cfg.reward.shaping_coef = 0.0;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
    }

    #[test]
    fn single_override() {
        let cfg = parse_config("curriculum.eta_percent = 75").unwrap();
        assert_eq!(cfg.curriculum.eta_percent, 75.0);
        let expected = RunConfig {
            curriculum: CurriculumConfig {
                eta_percent: 75.0,
                ..CurriculumConfig::default()
            },
            ..RunConfig::default()
        };
        assert_eq!(cfg, expected);
    }

    #[test]
    fn out_of_range_eta_names_the_key() {
        let err = parse_config("curriculum.eta_percent = 150").unwrap_err();
        assert_eq!(err.code(), "E_DOMAIN");
        assert!(err.to_string().contains("curriculum.eta_percent"));
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let err = parse_config("seed = 1\nenv.gird_w = 9\n").unwrap_err();
        assert_eq!(err.code(), "E_PARSE");
        let msg = err.to_string();
        assert!(msg.contains("gird_w") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn document_round_trip() {
        let cfg = RunConfig {
            seed: 42,
            ppo: PpoConfig {
                max_grad_norm: Some(0.5),
                ..PpoConfig::default()
            },
            ..RunConfig::default()
        };
        assert_eq!(parse_config(&cfg.to_document()).unwrap(), cfg);
    }

    #[test]
    fn seed_precedence() {
        let none = Overrides::default();
        assert_eq!(resolve("", &none, Some("9")).unwrap().seed, 9);
        assert_eq!(resolve("seed = 4", &none, Some("9")).unwrap().seed, 4);
        let cli = Overrides {
            seed: Some(1),
            ..Overrides::default()
        };
        assert_eq!(resolve("seed = 4", &cli, Some("9")).unwrap().seed, 1);
        assert!(resolve("", &none, Some("x")).is_err());
    }

    #[test]
    fn method_override_and_sparse_reward() {
        let o = Overrides {
            method: Some(Method::Semi),
            eta_percent: Some(25.0),
            sparse_reward: true,
            ..Overrides::default()
        };
        let cfg = resolve("", &o, None).unwrap();
        assert_eq!(cfg.curriculum.method, Method::Semi);
        assert_eq!(cfg.curriculum.label(), "Semi-25");
        assert_eq!(cfg.reward.shaping_coef, 0.0);
    }
}
