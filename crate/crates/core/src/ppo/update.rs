//! Clipped-surrogate PPO update.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamState};
use super::rollout::RolloutBuffer;
use super::PpoConfig;
use crate::error::{Error, Result};
use crate::net::{accumulate_gradient, action_distribution, entropy, forward, PolicyParams};

/// Per-sample PPO loss terms and the gradient of the combined loss with
/// respect to the logits and the value output.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleLoss {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub ratio: f64,
    pub logprob: f64,
    pub dlogits: Vec<f64>,
    pub dvalue: f64,
}

impl SampleLoss {
    pub fn total(&self, cfg: &PpoConfig) -> f64 {
        self.policy_loss + cfg.value_coef * self.value_loss - cfg.entropy_coef * self.entropy
    }
}

/// Loss of one transition:
/// `−min(r·A, clip(r, 1−ε, 1+ε)·A) + c_v·(V − R)² − c_e·H`
/// with `r = exp(logπ(a) − logπ_old(a))`.
///
/// The surrogate's gradient is taken through the unclipped branch when it is
/// the minimum and is zero otherwise.
#[allow(clippy::too_many_arguments)]
pub fn sample_loss(
    logits: &[f64],
    value: f64,
    legal: &[bool],
    action: usize,
    logprob_old: f64,
    advantage: f64,
    ret: f64,
    cfg: &PpoConfig,
) -> Result<SampleLoss> {
    let probs = action_distribution(logits, legal)?;
    let logprob = probs[action].ln();
    let ratio = (logprob - logprob_old).exp();
    let eps = cfg.clip_epsilon;
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * advantage;
    let policy_loss = -unclipped.min(clipped);
    let dlogp = if unclipped <= clipped { -advantage * ratio } else { 0.0 };

    let h = entropy(&probs);
    let dlogits = probs
        .iter()
        .zip(legal)
        .enumerate()
        .map(|(k, (&p, &ok))| {
            if !ok {
                return 0.0;
            }
            let onehot = if k == action { 1.0 } else { 0.0 };
            let dh = if p > 0.0 { -p * (p.ln() + h) } else { 0.0 };
            dlogp * (onehot - p) - cfg.entropy_coef * dh
        })
        .collect();
    let err = value - ret;
    Ok(SampleLoss {
        policy_loss,
        value_loss: err * err,
        entropy: h,
        ratio,
        logprob,
        dlogits,
        dvalue: cfg.value_coef * 2.0 * err,
    })
}

/// Running means over all samples seen in an update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_frac: f64,
    pub approx_kl: f64,
    pub samples: usize,
}

impl PpoStats {
    fn add(&mut self, s: &SampleLoss, logprob_old: f64, eps: f64) {
        self.policy_loss += s.policy_loss;
        self.value_loss += s.value_loss;
        self.entropy += s.entropy;
        self.clip_frac += f64::from(u8::from((s.ratio - 1.0).abs() > eps));
        self.approx_kl += logprob_old - s.logprob;
        self.samples += 1;
    }

    fn finish(mut self) -> Self {
        let n = self.samples.max(1) as f64;
        self.policy_loss /= n;
        self.value_loss /= n;
        self.entropy /= n;
        self.clip_frac /= n;
        self.approx_kl /= n;
        self
    }
}

/// Mean loss and its parameter gradient over the transitions `indices`,
/// using the given (already normalized) advantages.
pub fn minibatch_loss_and_grad(
    params: &PolicyParams,
    buffer: &RolloutBuffer,
    advantages: &[f64],
    indices: &[usize],
    cfg: &PpoConfig,
) -> Result<(f64, Vec<f64>, PpoStats)> {
    let mut grad = vec![0.0; params.data.len()];
    let mut stats = PpoStats::default();
    let mut total = 0.0;
    let scale = 1.0 / indices.len().max(1) as f64;
    for &i in indices {
        let t = &buffer.transitions[i];
        let out = forward(params, &t.observation)?;
        let s = sample_loss(
            &out.logits,
            out.value,
            &buffer.legal,
            t.action,
            t.logprob_old,
            advantages[i],
            buffer.returns[i],
            cfg,
        )?;
        let loss = s.total(cfg);
        if !loss.is_finite() {
            return Err(Error::Divergence(format!(
                "loss {loss} at transition {i} (ratio {}, value {})",
                s.ratio, out.value
            )));
        }
        total += loss * scale;
        stats.add(&s, t.logprob_old, cfg.clip_epsilon);
        accumulate_gradient(params, &out.cache, &s.dlogits, s.dvalue, scale, &mut grad)?;
    }
    Ok((total, grad, stats))
}

/// Subtract the mean and divide by (std + 1e-8).
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    if adv.is_empty() {
        return Vec::new();
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let denom = var.sqrt() + 1e-8;
    adv.iter().map(|a| (a - mean) / denom).collect()
}

fn clip_grad_norm(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for g in grad {
            *g *= s;
        }
    }
}

/// Several epochs of shuffled minibatch Adam steps on the clipped PPO loss.
/// Expects [`compute_gae`](super::rollout::compute_gae) to have run.
pub fn ppo_update(
    params: &mut PolicyParams,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    adam: &mut AdamState,
    rng: &mut ChaCha8Rng,
) -> Result<PpoStats> {
    if buffer.advantages.len() != buffer.len() || buffer.returns.len() != buffer.len() {
        return Err(Error::Contract("advantages not computed for this buffer".into()));
    }
    let advantages = normalize_advantages(&buffer.advantages);
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    let mut stats = PpoStats::default();
    let mb = cfg.minibatch_size.max(1);
    for _ in 0..cfg.epochs_per_update {
        order.shuffle(rng);
        for chunk in order.chunks(mb) {
            let (_, mut grad, s) = minibatch_loss_and_grad(params, buffer, &advantages, chunk, cfg)?;
            if let Some(max_norm) = cfg.max_grad_norm {
                clip_grad_norm(&mut grad, max_norm);
            }
            adam_step(&mut params.data, &grad, adam, cfg.learning_rate);
            stats.policy_loss += s.policy_loss;
            stats.value_loss += s.value_loss;
            stats.entropy += s.entropy;
            stats.clip_frac += s.clip_frac;
            stats.approx_kl += s.approx_kl;
            stats.samples += s.samples;
        }
    }
    if !params.is_finite() {
        return Err(Error::Divergence("parameters became non-finite".into()));
    }
    Ok(stats.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PpoConfig {
        PpoConfig {
            entropy_coef: 0.0,
            ..PpoConfig::default()
        }
    }

    #[test]
    fn ratio_one_gives_plain_policy_gradient() {
        let logits = [0.2, -0.4, 1.0];
        let probs = action_distribution(&logits, &[true; 3]).unwrap();
        let s = sample_loss(&logits, 0.0, &[true; 3], 1, probs[1].ln(), 2.0, 0.0, &cfg()).unwrap();
        assert!((s.ratio - 1.0).abs() < 1e-15);
        for k in 0..3 {
            let onehot = if k == 1 { 1.0 } else { 0.0 };
            assert!((s.dlogits[k] - (-2.0 * (onehot - probs[k]))).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_clip_has_zero_policy_gradient() {
        let logits = [0.0, 0.0];
        let lp = 0.5f64.ln();
        // ratio 1.5 with positive advantage
        let s = sample_loss(&logits, 0.0, &[true; 2], 0, lp - 1.5f64.ln(), 1.0, 0.0, &cfg()).unwrap();
        assert!((s.ratio - 1.5).abs() < 1e-12);
        assert!(s.dlogits.iter().all(|&d| d == 0.0));
        assert!((s.policy_loss + 1.2).abs() < 1e-12);
        // ratio 0.5 with negative advantage
        let s = sample_loss(&logits, 0.0, &[true; 2], 0, lp - 0.5f64.ln(), -1.0, 0.0, &cfg()).unwrap();
        assert!(s.dlogits.iter().all(|&d| d == 0.0));
        // ratio 1.5 with negative advantage is not clipped
        let s = sample_loss(&logits, 0.0, &[true; 2], 0, lp - 1.5f64.ln(), -1.0, 0.0, &cfg()).unwrap();
        assert!(s.dlogits.iter().any(|&d| d != 0.0));
    }

    #[test]
    fn illegal_logits_get_no_gradient() {
        let c = PpoConfig::default();
        let s = sample_loss(&[0.3, 2.0, -1.0], 0.1, &[true, false, true], 2, -0.9, 0.7, 1.0, &c).unwrap();
        assert_eq!(s.dlogits[1], 0.0);
    }

    #[test]
    fn normalized_advantages_have_zero_mean_unit_std() {
        let a = normalize_advantages(&[1.0, 2.0, 3.0, 10.0]);
        let mean = a.iter().sum::<f64>() / 4.0;
        let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var.sqrt() - 1.0).abs() < 1e-6);
    }
}
