//! Actor-critic multilayer perceptron with hand-written backpropagation.
//!
//! A stack of affine + ReLU layers feeds two linear heads: action logits and
//! a scalar state value. Parameters live in one flat `Vec<f64>`; each weight
//! matrix is stored input-major (`w[i * fan_out + j]`) so sparse binary
//! inputs can be handled by skipping zero rows.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub action_dim: usize,
}

/// Location of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlice {
    pub fan_in: usize,
    pub fan_out: usize,
    pub w: usize,
    pub b: usize,
}

impl LayerSlice {
    fn end(&self) -> usize {
        self.b + self.fan_out
    }
}

impl Architecture {
    pub fn new(input_dim: usize, hidden: Vec<usize>, action_dim: usize) -> Result<Self> {
        let arch = Architecture {
            input_dim,
            hidden,
            action_dim,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.action_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        Ok(())
    }

    /// Hidden layers in order, then the policy head, then the value head.
    pub fn layout(&self) -> Vec<LayerSlice> {
        let mut out = Vec::with_capacity(self.hidden.len() + 2);
        let mut offset = 0;
        let mut push = |fan_in: usize, fan_out: usize| {
            let s = LayerSlice {
                fan_in,
                fan_out,
                w: offset,
                b: offset + fan_in * fan_out,
            };
            offset = s.end();
            out.push(s);
        };
        let mut prev = self.input_dim;
        for &h in &self.hidden {
            push(prev, h);
            prev = h;
        }
        push(prev, self.action_dim);
        push(prev, 1);
        out
    }

    pub fn param_count(&self) -> usize {
        self.layout().last().map_or(0, |s| s.end())
    }
}

/// Network parameters as one flat array plus the layout descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    arch: Architecture,
    layout: Vec<LayerSlice>,
    pub data: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(arch: Architecture) -> Self {
        let layout = arch.layout();
        let n = arch.param_count();
        PolicyParams {
            arch,
            layout,
            data: vec![0.0; n],
        }
    }

    pub fn from_data(arch: Architecture, data: Vec<f64>) -> Result<Self> {
        let n = arch.param_count();
        if data.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: data.len(),
            });
        }
        let mut p = Self::zeros(arch);
        p.data = data;
        Ok(p)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn layout(&self) -> &[LayerSlice] {
        &self.layout
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params<R: Rng + ?Sized>(rng: &mut R, arch: &Architecture) -> PolicyParams {
    let mut p = PolicyParams::zeros(arch.clone());
    for s in p.layout.clone() {
        let limit = (6.0 / (s.fan_in + s.fan_out) as f64).sqrt();
        for w in &mut p.data[s.w..s.b] {
            *w = rng.random_range(-limit..limit);
        }
    }
    p
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    /// Post-ReLU activations of each hidden layer.
    pub hidden: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetOutput {
    pub logits: Vec<f64>,
    pub value: f64,
    pub cache: ForwardCache,
}

fn affine(params: &[f64], s: LayerSlice, x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(&params[s.b..s.b + s.fan_out]);
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &params[s.w + i * s.fan_out..s.w + (i + 1) * s.fan_out];
        for (o, &w) in out.iter_mut().zip(row) {
            *o += xi * w;
        }
    }
}

pub fn forward(params: &PolicyParams, observation: &[f64]) -> Result<NetOutput> {
    let arch = &params.arch;
    if observation.len() != arch.input_dim {
        return Err(Error::Dimension {
            expected: arch.input_dim,
            actual: observation.len(),
        });
    }
    let nh = arch.hidden.len();
    let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(nh);
    for (l, &s) in params.layout[..nh].iter().enumerate() {
        let x: &[f64] = if l == 0 { observation } else { &hidden[l - 1] };
        let mut h = Vec::with_capacity(s.fan_out);
        affine(&params.data, s, x, &mut h);
        for v in &mut h {
            *v = v.max(0.0);
        }
        hidden.push(h);
    }
    let last: &[f64] = hidden.last().map_or(observation, |h| h.as_slice());
    let mut logits = Vec::with_capacity(arch.action_dim);
    affine(&params.data, params.layout[nh], last, &mut logits);
    let mut v = Vec::with_capacity(1);
    affine(&params.data, params.layout[nh + 1], last, &mut v);
    Ok(NetOutput {
        logits,
        value: v[0],
        cache: ForwardCache {
            input: observation.to_vec(),
            hidden,
        },
    })
}

/// Adds `scale · ∂(dlogits·logits + dvalue·value)/∂θ` for one example into
/// `grad`.
pub fn accumulate_gradient(
    params: &PolicyParams,
    cache: &ForwardCache,
    dlogits: &[f64],
    dvalue: f64,
    scale: f64,
    grad: &mut [f64],
) -> Result<()> {
    let arch = &params.arch;
    if dlogits.len() != arch.action_dim {
        return Err(Error::Dimension {
            expected: arch.action_dim,
            actual: dlogits.len(),
        });
    }
    if grad.len() != params.data.len() {
        return Err(Error::Dimension {
            expected: params.data.len(),
            actual: grad.len(),
        });
    }
    if cache.input.len() != arch.input_dim || cache.hidden.len() != arch.hidden.len() {
        return Err(Error::Contract("forward cache does not match the network".into()));
    }
    let nh = arch.hidden.len();
    let w = &params.data;
    let last: &[f64] = cache.hidden.last().map_or(&cache.input, |h| h.as_slice());

    // heads
    let mut dlast = vec![0.0; last.len()];
    let heads = [(params.layout[nh], dlogits), (params.layout[nh + 1], std::slice::from_ref(&dvalue))];
    for (s, dout) in heads {
        for (j, &d) in dout.iter().enumerate() {
            grad[s.b + j] += scale * d;
        }
        for (i, &xi) in last.iter().enumerate() {
            let row = s.w + i * s.fan_out;
            let mut acc = 0.0;
            for (j, &d) in dout.iter().enumerate() {
                if xi != 0.0 {
                    grad[row + j] += scale * xi * d;
                }
                acc += w[row + j] * d;
            }
            dlast[i] += acc;
        }
    }

    let mut dout = dlast;
    for l in (0..nh).rev() {
        let s = params.layout[l];
        // ReLU
        for (d, &a) in dout.iter_mut().zip(&cache.hidden[l]) {
            if a <= 0.0 {
                *d = 0.0;
            }
        }
        let x: &[f64] = if l == 0 { &cache.input } else { &cache.hidden[l - 1] };
        for (j, &d) in dout.iter().enumerate() {
            grad[s.b + j] += scale * d;
        }
        let need_dx = l > 0;
        let mut dx = if need_dx { vec![0.0; s.fan_in] } else { Vec::new() };
        for (i, &xi) in x.iter().enumerate() {
            let row = s.w + i * s.fan_out;
            if xi != 0.0 {
                let sx = scale * xi;
                for (g, &d) in grad[row..row + s.fan_out].iter_mut().zip(&dout) {
                    *g += sx * d;
                }
            }
            if need_dx {
                dx[i] = w[row..row + s.fan_out].iter().zip(&dout).map(|(a, b)| a * b).sum();
            }
        }
        dout = dx;
    }
    Ok(())
}

/// Gradient of the batch-mean objective `1/N Σ_n (dlogits_n·logits_n +
/// dvalue_n·value_n)`, i.e. the reverse-mode pass seeded with per-example
/// output gradients.
pub fn backward(params: &PolicyParams, caches: &[ForwardCache], douts: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
    if caches.len() != douts.len() {
        return Err(Error::Dimension {
            expected: caches.len(),
            actual: douts.len(),
        });
    }
    let mut grad = vec![0.0; params.data.len()];
    if caches.is_empty() {
        return Ok(grad);
    }
    let scale = 1.0 / caches.len() as f64;
    for (cache, (dl, dv)) in caches.iter().zip(douts) {
        accumulate_gradient(params, cache, dl, *dv, scale, &mut grad)?;
    }
    Ok(grad)
}

/// Softmax over legal entries with max subtraction; illegal entries get
/// probability exactly zero.
pub fn action_distribution(logits: &[f64], legal: &[bool]) -> Result<Vec<f64>> {
    if logits.len() != legal.len() {
        return Err(Error::Dimension {
            expected: logits.len(),
            actual: legal.len(),
        });
    }
    let max = logits
        .iter()
        .zip(legal)
        .filter(|(_, &ok)| ok)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::NoLegalAction);
    }
    let mut p: Vec<f64> = logits
        .iter()
        .zip(legal)
        .map(|(&z, &ok)| if ok { (z - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    Ok(p)
}

/// Entropy `−Σ p log p` of a distribution (zero-probability terms skipped).
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// Log-probability of `action`, entropy over legal actions, and value
/// estimate.
pub fn logprob_entropy_value(
    params: &PolicyParams,
    observation: &[f64],
    action: usize,
    legal: &[bool],
) -> Result<(f64, f64, f64)> {
    let out = forward(params, observation)?;
    let probs = action_distribution(&out.logits, legal)?;
    if action >= probs.len() || !legal[action] {
        return Err(Error::Contract(format!("action {action} is not legal")));
    }
    Ok((probs[action].ln(), entropy(&probs), out.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let arch = Architecture::new(10, vec![8, 4], 3).unwrap();
        let a = init_params(&mut ChaCha8Rng::seed_from_u64(5), &arch);
        let b = init_params(&mut ChaCha8Rng::seed_from_u64(5), &arch);
        assert_eq!(a, b);
        for s in a.layout() {
            assert!(a.data[s.b..s.b + s.fan_out].iter().all(|&v| v == 0.0));
            let limit = (6.0 / (s.fan_in + s.fan_out) as f64).sqrt();
            assert!(a.data[s.w..s.b].iter().all(|v| v.abs() <= limit));
        }
    }

    #[test]
    fn init_weight_mean_near_zero() {
        let arch = Architecture::new(100, vec![100], 2).unwrap();
        let p = init_params(&mut ChaCha8Rng::seed_from_u64(11), &arch);
        let s = p.layout()[0];
        let w = &p.data[s.w..s.b];
        assert_eq!(w.len(), 10_000);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        assert!(mean.abs() < 0.005, "{mean}");
    }

    #[test]
    fn zero_network_outputs_zero() {
        let arch = Architecture::new(5, vec![4], 3).unwrap();
        let out = forward(&PolicyParams::zeros(arch), &[1.0, -2.0, 0.5, 0.0, 3.0]).unwrap();
        assert_eq!(out.logits, vec![0.0; 3]);
        assert_eq!(out.value, 0.0);
        let p = action_distribution(&out.logits, &[true; 3]).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn forward_rejects_wrong_length() {
        let arch = Architecture::new(5, vec![4], 3).unwrap();
        assert!(matches!(
            forward(&PolicyParams::zeros(arch), &[0.0; 4]),
            Err(Error::Dimension { expected: 5, actual: 4 })
        ));
    }

    #[test]
    fn softmax_is_stable_and_masked() {
        let p = action_distribution(&[1000.0, 0.0], &[true, true]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] >= 0.0 && p[1] < 1e-300);
        let p = action_distribution(&[1.0, 2.0, 3.0], &[true, true, false]).unwrap();
        let e = 1f64.exp() + 2f64.exp();
        assert!((p[0] - 1f64.exp() / e).abs() < 1e-15);
        assert!((p[1] - 2f64.exp() / e).abs() < 1e-15);
        assert_eq!(p[2], 0.0);
        assert!(matches!(
            action_distribution(&[1.0, 2.0], &[false, false]),
            Err(Error::NoLegalAction)
        ));
    }

    #[test]
    fn entropy_extremes() {
        assert!((entropy(&[1.0 / 7.0; 7]) - 7f64.ln()).abs() < 1e-12);
        let p = action_distribution(&[800.0, 0.0, 0.0], &[true; 3]).unwrap();
        assert!(entropy(&p) < 1e-300);
    }

    #[test]
    fn zero_output_gradient_gives_zero_parameter_gradient() {
        let arch = Architecture::new(4, vec![3], 2).unwrap();
        let p = init_params(&mut ChaCha8Rng::seed_from_u64(2), &arch);
        let out = forward(&p, &[0.3, -0.1, 0.7, 1.0]).unwrap();
        let g = backward(&p, &[out.cache], &[(vec![0.0, 0.0], 0.0)]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }
}
