//! Acting: frame stacking, action selection and the [`Agent`] interface used
//! by rollouts and evaluation.

use std::collections::VecDeque;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, Episode, EgoView};
use crate::error::{Error, Result};
use crate::net::{action_distribution, forward, PolicyParams};

/// How actions are picked from the policy distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionSelection {
    Sample,
    Greedy,
}

/// Concatenation of the last `depth` frames, oldest first. At episode start
/// the first frame fills every slot.
#[derive(Debug, Clone)]
pub struct FrameStack {
    depth: usize,
    frames: VecDeque<Vec<f64>>,
}

impl FrameStack {
    pub fn new(depth: usize) -> Self {
        FrameStack {
            depth: depth.max(1),
            frames: VecDeque::new(),
        }
    }

    pub fn reset(&mut self, view: &EgoView) {
        let f = view.features();
        self.frames.clear();
        for _ in 0..self.depth {
            self.frames.push_back(f.clone());
        }
    }

    pub fn push(&mut self, view: &EgoView) {
        self.frames.pop_front();
        self.frames.push_back(view.features());
    }

    pub fn features(&self) -> Vec<f64> {
        self.frames.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: usize,
    pub logprob: f64,
    pub value: f64,
}

pub fn decide(
    params: &PolicyParams,
    observation: &[f64],
    legal: &[bool],
    selection: ActionSelection,
    rng: &mut ChaCha8Rng,
) -> Result<Decision> {
    let out = forward(params, observation)?;
    let probs = action_distribution(&out.logits, legal)?;
    let action = match selection {
        ActionSelection::Sample => WeightedIndex::new(&probs)
            .map_err(|e| Error::Divergence(format!("policy distribution: {e}")))?
            .sample(rng),
        ActionSelection::Greedy => probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0,
    };
    Ok(Decision {
        action,
        logprob: probs[action].ln(),
        value: out.value,
    })
}

/// Anything that can drive an episode.
pub trait Agent {
    fn reset(&mut self, episode: &Episode, first: &EgoView);
    fn act(&mut self, episode: &Episode, view: &EgoView, rng: &mut ChaCha8Rng) -> Result<Action>;
}

/// Agent backed by policy network parameters.
pub struct NetAgent<'a> {
    params: &'a PolicyParams,
    stack: FrameStack,
    selection: ActionSelection,
    fresh: bool,
}

impl<'a> NetAgent<'a> {
    pub fn new(params: &'a PolicyParams, obs_stack: usize, selection: ActionSelection) -> Self {
        NetAgent {
            params,
            stack: FrameStack::new(obs_stack),
            selection,
            fresh: true,
        }
    }
}

impl Agent for NetAgent<'_> {
    fn reset(&mut self, _episode: &Episode, first: &EgoView) {
        self.stack.reset(first);
        self.fresh = true;
    }

    fn act(&mut self, episode: &Episode, view: &EgoView, rng: &mut ChaCha8Rng) -> Result<Action> {
        if !self.fresh {
            self.stack.push(view);
        }
        self.fresh = false;
        let space = episode.space();
        let d = decide(self.params, &self.stack.features(), &space.legal_mask(), self.selection, rng)?;
        Ok(space.action(d.action).expect("decision within action space"))
    }
}
