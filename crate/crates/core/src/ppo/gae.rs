//! Generalized advantage estimation.

/// Backward GAE recursion over one contiguous segment.
///
/// `dones[t]` marks that the episode ended after step `t`; `last_value` is
/// the bootstrap value of the state following the final step (ignored when
/// that step is terminal).
///
/// ```text
/// δ_t = r_t + γ·V_{t+1}·(1 − done_t) − V_t
/// A_t = δ_t + γλ·(1 − done_t)·A_{t+1}
/// R_t = A_t + V_t
/// ```
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    assert_eq!(dones.len(), n);
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}
