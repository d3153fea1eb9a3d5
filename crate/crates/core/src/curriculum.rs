//! Seen/unseen class splits and the semi-present-teacher training stream.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{generate_episode, ActionSpace, EnvConfig, EpisodeSpec};
use crate::error::{Error, Result};
use crate::teacher::{sample_presence, PresencePolicy};

/// Partition of the class vocabulary into training targets and held-out
/// targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seen: Vec<usize>,
    pub unseen: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Seen,
    Unseen,
}

impl SplitSpec {
    pub fn pool(&self, split: Split) -> &[usize] {
        match split {
            Split::Seen => &self.seen,
            Split::Unseen => &self.unseen,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Seen => "seen",
            Split::Unseen => "unseen",
        })
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seen" => Ok(Split::Seen),
            "unseen" => Ok(Split::Unseen),
            other => Err(Error::Usage(format!("unknown split `{other}` (seen|unseen)"))),
        }
    }
}

/// Random split of `0..vocab_size` with `n_seen` seen classes. Both halves
/// are returned sorted.
pub fn build_split<R: Rng + ?Sized>(vocab_size: usize, n_seen: usize, rng: &mut R) -> Result<SplitSpec> {
    if n_seen == 0 || n_seen >= vocab_size {
        return Err(Error::domain(
            "env.seen_classes",
            format!("need 0 < seen < vocab ({n_seen} of {vocab_size})"),
        ));
    }
    let mut classes: Vec<usize> = (0..vocab_size).collect();
    classes.shuffle(rng);
    let mut seen = classes[..n_seen].to_vec();
    let mut unseen = classes[n_seen..].to_vec();
    seen.sort_unstable();
    unseen.sort_unstable();
    Ok(SplitSpec { seen, unseen })
}

/// Training method: which capability the agent has and how often the teacher
/// shows up during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// No ask action, no teacher.
    Baseline,
    /// Ask action, teacher always present.
    Feedback,
    /// Ask action, teacher present in `eta_percent` of episodes.
    Semi,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Method::Baseline),
            "feedback" => Ok(Method::Feedback),
            "semi" => Ok(Method::Semi),
            other => Err(Error::Usage(format!("unknown method `{other}` (baseline|feedback|semi)"))),
        }
    }
}

/// `curriculum` config section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    pub method: Method,
    /// Teacher presence rate for the `semi` method.
    pub eta_percent: f64,
    pub total_iterations: usize,
    /// Seed of the seen/unseen class split, shared by every run that should
    /// be comparable.
    pub split_seed: u64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            method: Method::Feedback,
            eta_percent: 100.0,
            total_iterations: 100,
            split_seed: 0,
        }
    }
}

impl CurriculumConfig {
    pub fn feedback_enabled(&self) -> bool {
        self.method != Method::Baseline
    }

    pub fn action_space(&self) -> ActionSpace {
        ActionSpace::new(self.feedback_enabled())
    }

    /// Effective per-episode presence policy during training.
    pub fn presence(&self) -> Result<PresencePolicy> {
        match self.method {
            Method::Baseline => Ok(PresencePolicy::never()),
            Method::Feedback => Ok(PresencePolicy::always()),
            Method::Semi => PresencePolicy::new(self.eta_percent),
        }
    }

    /// Display label, e.g. `Semi-75`.
    pub fn label(&self) -> String {
        method_label(self.method, self.eta_percent)
    }
}

pub fn method_label(method: Method, eta_percent: f64) -> String {
    match method {
        Method::Baseline => "Baseline".into(),
        Method::Feedback => "Feedback".into(),
        Method::Semi => format!("Semi-{}", eta_percent),
    }
}

/// Endless source of training episodes: targets from the seen pool, teacher
/// presence drawn per episode.
pub struct TrainingStream {
    env: EnvConfig,
    pool: Vec<usize>,
    presence: PresencePolicy,
    rng: ChaCha8Rng,
}

impl TrainingStream {
    pub fn new(curriculum: &CurriculumConfig, env: &EnvConfig, split: &SplitSpec, rng: ChaCha8Rng) -> Result<Self> {
        Ok(TrainingStream {
            env: env.clone(),
            pool: split.seen.clone(),
            presence: curriculum.presence()?,
            rng,
        })
    }

    pub fn next_episode(&mut self) -> Result<EpisodeSpec> {
        let mut spec = generate_episode(&mut self.rng, &self.env, &self.pool)?;
        spec.teacher_present = sample_presence(&mut self.rng, self.presence);
        Ok(spec)
    }
}

impl Iterator for TrainingStream {
    type Item = Result<EpisodeSpec>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.next_episode())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn split_sizes_and_determinism() {
        let a = build_split(12, 8, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!((a.seen.len(), a.unseen.len()), (8, 4));
        assert!(a.seen.iter().all(|c| !a.unseen.contains(c)));
        let b = build_split(12, 8, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        let one = build_split(12, 11, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(one.unseen.len(), 1);
        assert!(build_split(12, 12, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
        assert!(build_split(12, 0, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn full_presence_and_baseline() {
        let env = EnvConfig::default();
        let split = build_split(12, 8, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let fb = CurriculumConfig::default();
        let s = TrainingStream::new(&fb, &env, &split, ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(s.take(200).all(|e| e.unwrap().teacher_present));

        let base = CurriculumConfig {
            method: Method::Baseline,
            ..fb
        };
        assert!(!base.action_space().ask_enabled);
        let s = TrainingStream::new(&base, &env, &split, ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(s.take(200).all(|e| !e.unwrap().teacher_present));
    }

    #[test]
    fn labels() {
        let c = CurriculumConfig {
            method: Method::Semi,
            eta_percent: 25.0,
            ..Default::default()
        };
        assert_eq!(c.label(), "Semi-25");
        assert_eq!(method_label(Method::Semi, 37.5), "Semi-37.5");
    }
}
