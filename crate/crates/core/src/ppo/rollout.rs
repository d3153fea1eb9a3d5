//! Rollout collection.
//!
//! A rollout of `horizon` steps is split across a fixed number of lanes.
//! Each lane owns an episode stream and an action generator, always starts a
//! fresh episode, and ends with a bootstrap value if its last episode was cut
//! short. Lanes may be collected on several worker threads; results are
//! concatenated in lane order so the buffer does not depend on the worker
//! count.

use rand_chacha::ChaCha8Rng;

use super::gae::gae;
use crate::agent::{decide, ActionSelection, FrameStack};
use crate::curriculum::TrainingStream;
use crate::env::{ActionSpace, EnvConfig, Episode};
use crate::error::Result;
use crate::net::{forward, PolicyParams};
use crate::ppo::reward::RewardConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: usize,
    pub logprob_old: f64,
    pub reward: f64,
    pub value_old: f64,
    pub done: bool,
    pub teacher_present: bool,
}

/// A contiguous run of transitions from one lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    /// Value of the state after the last transition (0 when it was terminal).
    pub bootstrap_value: f64,
}

/// Summary of an episode that finished inside the rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub total_reward: f64,
    pub success: bool,
    pub length: usize,
    pub teacher_present: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    pub segments: Vec<Segment>,
    pub legal: Vec<bool>,
    /// Filled by [`compute_gae`].
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub completed: Vec<EpisodeRecord>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    fn append(&mut self, mut other: RolloutBuffer) {
        let base = self.transitions.len();
        self.segments.extend(other.segments.iter().map(|s| Segment {
            start: s.start + base,
            end: s.end + base,
            bootstrap_value: s.bootstrap_value,
        }));
        self.transitions.append(&mut other.transitions);
        self.completed.append(&mut other.completed);
        if self.legal.is_empty() {
            self.legal = other.legal;
        }
    }
}

/// Static settings shared by every lane.
#[derive(Debug, Clone)]
pub struct RolloutContext {
    pub env: EnvConfig,
    pub reward: RewardConfig,
    pub space: ActionSpace,
    pub obs_stack: usize,
}

/// One independent collector.
pub struct Lane {
    pub stream: TrainingStream,
    pub rng: ChaCha8Rng,
}

/// Runs the policy for `steps` environment steps on a single lane.
pub fn collect_segment(
    params: &PolicyParams,
    ctx: &RolloutContext,
    lane: &mut Lane,
    steps: usize,
) -> Result<RolloutBuffer> {
    let legal = ctx.space.legal_mask();
    let mut buf = RolloutBuffer {
        legal: legal.clone(),
        ..Default::default()
    };
    if steps == 0 {
        return Ok(buf);
    }
    let mut stack = FrameStack::new(ctx.obs_stack);
    let mut episode = Episode::new(&ctx.env, &ctx.reward, ctx.space, lane.stream.next_episode()?);
    stack.reset(&episode.observe());
    let mut episode_reward = 0.0;

    for t in 0..steps {
        let observation = stack.features();
        let d = decide(params, &observation, &legal, ActionSelection::Sample, &mut lane.rng)?;
        let action = ctx.space.action(d.action).expect("sampled legal action");
        let out = episode.step(action)?;
        episode_reward += out.reward;
        buf.transitions.push(Transition {
            observation,
            action: d.action,
            logprob_old: d.logprob,
            reward: out.reward,
            value_old: d.value,
            done: out.done,
            teacher_present: episode.spec().teacher_present,
        });
        if out.done {
            buf.completed.push(EpisodeRecord {
                total_reward: episode_reward,
                success: out.success,
                length: episode.state().steps,
                teacher_present: episode.spec().teacher_present,
            });
            episode_reward = 0.0;
            if t + 1 < steps {
                episode = Episode::new(&ctx.env, &ctx.reward, ctx.space, lane.stream.next_episode()?);
                stack.reset(&episode.observe());
            }
        } else {
            stack.push(&out.next_view);
        }
    }
    let bootstrap_value = if buf.transitions.last().is_some_and(|t| t.done) {
        0.0
    } else {
        forward(params, &stack.features())?.value
    };
    buf.segments.push(Segment {
        start: 0,
        end: buf.transitions.len(),
        bootstrap_value,
    });
    Ok(buf)
}

/// Collects `horizon` steps across `lanes` (lane `i` gets
/// `horizon / n + [i < horizon % n]` steps), using up to `workers` threads.
pub fn collect_rollout(
    params: &PolicyParams,
    ctx: &RolloutContext,
    lanes: &mut [Lane],
    horizon: usize,
    workers: usize,
) -> Result<RolloutBuffer> {
    let n = lanes.len().max(1);
    let quota: Vec<usize> = (0..lanes.len()).map(|i| horizon / n + usize::from(i < horizon % n)).collect();
    let parts: Vec<Result<RolloutBuffer>> = if workers <= 1 || lanes.len() <= 1 {
        lanes
            .iter_mut()
            .zip(&quota)
            .map(|(lane, &q)| collect_segment(params, ctx, lane, q))
            .collect()
    } else {
        let per = lanes.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = lanes
                .chunks_mut(per)
                .zip(quota.chunks(per))
                .map(|(chunk, q)| {
                    scope.spawn(move || {
                        chunk
                            .iter_mut()
                            .zip(q)
                            .map(|(lane, &q)| collect_segment(params, ctx, lane, q))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("rollout worker panicked"))
                .collect()
        })
    };
    let mut buf = RolloutBuffer {
        legal: ctx.space.legal_mask(),
        ..Default::default()
    };
    for part in parts {
        buf.append(part?);
    }
    Ok(buf)
}

/// Fills `advantages` and `returns` segment by segment.
pub fn compute_gae(buffer: &mut RolloutBuffer, gamma: f64, lambda: f64) {
    buffer.advantages = vec![0.0; buffer.len()];
    buffer.returns = vec![0.0; buffer.len()];
    for seg in &buffer.segments {
        let ts = &buffer.transitions[seg.start..seg.end];
        let rewards: Vec<f64> = ts.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = ts.iter().map(|t| t.value_old).collect();
        let dones: Vec<bool> = ts.iter().map(|t| t.done).collect();
        let (adv, ret) = gae(&rewards, &values, &dones, seg.bootstrap_value, gamma, lambda);
        buffer.advantages[seg.start..seg.end].copy_from_slice(&adv);
        buffer.returns[seg.start..seg.end].copy_from_slice(&ret);
    }
}
