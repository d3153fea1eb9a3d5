//! Training driver: one PPO update per iteration, stats rows and periodic
//! checkpoints.
//!
//! Every random stream of iteration `i` is derived from `(seed, i)`, and each
//! rollout starts fresh episodes, so a run resumed from a checkpoint taken
//! after iteration `i` continues exactly as the uninterrupted run would.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::checkpoint::{save_checkpoint, Checkpoint};
use crate::config::RunConfig;
use crate::curriculum::{build_split, SplitSpec, TrainingStream};
use crate::error::{Error, Result};
use crate::net::{init_params, PolicyParams};
use crate::ppo::{collect_rollout, compute_gae, ppo_update, AdamState, Lane, PpoStats, RolloutContext};
use crate::rng::{derive_rng, Stream};

pub const STATS_HEADER: &str = "iteration,mean_return,sr_train,policy_loss,value_loss,entropy,clip_frac,kl";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub iteration: u64,
    /// Mean undiscounted return of episodes finished during the rollout.
    pub mean_return: f64,
    /// Success percentage of those episodes.
    pub sr_train: f64,
    pub episodes: usize,
    pub ppo: PpoStats,
}

impl IterationStats {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.4},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.iteration,
            self.mean_return,
            self.sr_train,
            self.ppo.policy_loss,
            self.ppo.value_loss,
            self.ppo.entropy,
            self.ppo.clip_frac,
            self.ppo.approx_kl
        )
    }
}

/// The seen/unseen split a config trains and evaluates on.
pub fn split_for(cfg: &RunConfig) -> Result<SplitSpec> {
    build_split(
        cfg.env.vocab_size,
        cfg.env.seen_classes,
        &mut derive_rng(cfg.curriculum.split_seed, Stream::Split, 0, 0),
    )
}

pub struct Trainer {
    cfg: RunConfig,
    split: SplitSpec,
    params: PolicyParams,
    adam: AdamState,
    iteration: u64,
}

impl Trainer {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let arch = cfg.architecture()?;
        let params = init_params(&mut derive_rng(cfg.seed, Stream::Init, 0, 0), &arch);
        let adam = AdamState::new(params.data.len());
        Ok(Trainer {
            split: split_for(&cfg)?,
            cfg,
            params,
            adam,
            iteration: 0,
        })
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        let expected = ck.config.architecture()?;
        if &expected != ck.arch() {
            return Err(Error::Corrupt("checkpoint architecture does not match its config".into()));
        }
        Ok(Trainer {
            split: split_for(&ck.config)?,
            cfg: ck.config,
            params: ck.params,
            adam: ck.adam,
            iteration: ck.iteration,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn split(&self) -> &SplitSpec {
        &self.split
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            params: self.params.clone(),
            adam: self.adam.clone(),
            iteration: self.iteration,
            config: self.cfg.clone(),
        }
    }

    pub fn lanes(&self) -> Result<Vec<Lane>> {
        let it = self.iteration;
        (0..self.cfg.ppo.num_envs as u64)
            .map(|l| {
                Ok(Lane {
                    stream: TrainingStream::new(
                        &self.cfg.curriculum,
                        &self.cfg.env,
                        &self.split,
                        derive_rng(self.cfg.seed, Stream::Episodes, it, l),
                    )?,
                    rng: derive_rng(self.cfg.seed, Stream::Actions, it, l),
                })
            })
            .collect()
    }

    pub fn rollout_context(&self) -> RolloutContext {
        RolloutContext {
            env: self.cfg.env.clone(),
            reward: self.cfg.reward.clone(),
            space: self.cfg.curriculum.action_space(),
            obs_stack: self.cfg.net.obs_stack,
        }
    }

    /// Collect, estimate advantages, update.
    pub fn step(&mut self) -> Result<IterationStats> {
        let ppo = &self.cfg.ppo;
        let mut lanes = self.lanes()?;
        let mut buffer = collect_rollout(&self.params, &self.rollout_context(), &mut lanes, ppo.horizon, ppo.workers)?;
        compute_gae(&mut buffer, ppo.gamma, ppo.gae_lambda);
        let mut shuffle = derive_rng(self.cfg.seed, Stream::Shuffle, self.iteration, 0);
        let stats = if buffer.is_empty() {
            PpoStats::default()
        } else {
            ppo_update(&mut self.params, &buffer, ppo, &mut self.adam, &mut shuffle)?
        };
        self.iteration += 1;
        let n = buffer.completed.len();
        let (mean_return, sr_train) = if n == 0 {
            (0.0, 0.0)
        } else {
            (
                buffer.completed.iter().map(|e| e.total_reward).sum::<f64>() / n as f64,
                100.0 * buffer.completed.iter().filter(|e| e.success).count() as f64 / n as f64,
            )
        };
        Ok(IterationStats {
            iteration: self.iteration,
            mean_return,
            sr_train,
            episodes: n,
            ppo: stats,
        })
    }
}

pub fn checkpoint_path(out_dir: &Path, iteration: u64) -> PathBuf {
    out_dir.join(format!("ckpt_{iteration:06}.bin"))
}

pub fn final_checkpoint_path(out_dir: &Path) -> PathBuf {
    out_dir.join("final.bin")
}

/// Runs `trainer` up to `curriculum.total_iterations`, appending one row per
/// update to `stats.csv` in `out_dir` and writing checkpoints every
/// `checkpoint_every` updates plus `final.bin` at the end.
pub fn run_training(
    trainer: &mut Trainer,
    out_dir: &Path,
    mut progress: impl FnMut(&IterationStats),
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stats_path = out_dir.join("stats.csv");
    let fresh = trainer.iteration() == 0 || !stats_path.exists();
    let mut stats_file = fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(!fresh)
        .truncate(fresh)
        .open(&stats_path)
        .map_err(|e| Error::io(&stats_path, e))?;
    if fresh {
        writeln!(stats_file, "{STATS_HEADER}").map_err(|e| Error::io(&stats_path, e))?;
    }
    let total = trainer.config().curriculum.total_iterations as u64;
    let every = trainer.config().checkpoint_every as u64;
    while trainer.iteration() < total {
        let stats = trainer.step()?;
        writeln!(stats_file, "{}", stats.csv_row()).map_err(|e| Error::io(&stats_path, e))?;
        progress(&stats);
        if stats.iteration % every == 0 {
            save_checkpoint(&checkpoint_path(out_dir, stats.iteration), &trainer.checkpoint())?;
        }
    }
    stats_file.flush().map_err(|e| Error::io(&stats_path, e))?;
    save_checkpoint(&final_checkpoint_path(out_dir), &trainer.checkpoint())
}
