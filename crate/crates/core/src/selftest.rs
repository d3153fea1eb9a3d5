//! Runtime oracle checks behind `asknav selftest`.
//!
//! Each check compares a production routine against an independent,
//! deliberately naive reimplementation on randomized or hand-built inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::{decode, encode, Checkpoint};
use crate::config::RunConfig;
use crate::env::grid::{Cell, GridMap, Heading, Pose};
use crate::env::view::{render_egoview, CH_CLASS0};
use crate::env::{generate_episode, ActionSpace, EnvConfig, EpisodeState};
use crate::eval::{compute_spl, compute_sr, EpisodeResult};
use crate::net::{accumulate_gradient, forward, init_params, Architecture, PolicyParams};
use crate::ppo::gae::gae;
use crate::ppo::AdamState;
use crate::teacher::{object_in_view_mask, resolve_ask};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

pub fn run_all() -> Vec<Check> {
    vec![
        gradient_check(),
        gae_check(),
        metric_check(),
        geodesic_check(),
        teacher_check(),
        checkpoint_check(),
    ]
}

fn probe_loss(params: &PolicyParams, x: &[f64], c: &[f64], d: f64) -> (f64, Vec<Vec<bool>>) {
    let out = forward(params, x).expect("probe input matches the network");
    let loss = out.logits.iter().zip(c).map(|(l, c)| l * c).sum::<f64>() + d * out.value;
    let pattern = out.cache.hidden.iter().map(|h| h.iter().map(|&a| a > 0.0).collect()).collect();
    (loss, pattern)
}

/// Largest relative error between backprop and central differences, with
/// coordinates whose perturbation flips a ReLU skipped.
pub fn gradient_max_rel_error(rng: &mut ChaCha8Rng, arch: &Architecture, h: f64) -> f64 {
    let params = init_params(rng, arch);
    let x: Vec<f64> = (0..arch.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c: Vec<f64> = (0..arch.action_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let d = rng.random_range(-1.0..1.0);
    let out = forward(&params, &x).unwrap();
    let mut grad = vec![0.0; params.data.len()];
    accumulate_gradient(&params, &out.cache, &c, d, 1.0, &mut grad).unwrap();
    let (_, base) = probe_loss(&params, &x, &c, d);
    let mut worst: f64 = 0.0;
    let mut p = params.clone();
    for i in 0..p.data.len() {
        let orig = p.data[i];
        p.data[i] = orig + h;
        let (lp, pp) = probe_loss(&p, &x, &c, d);
        p.data[i] = orig - h;
        let (lm, pm) = probe_loss(&p, &x, &c, d);
        p.data[i] = orig;
        if pp != base || pm != base {
            continue;
        }
        let numeric = (lp - lm) / (2.0 * h);
        let denom = grad[i].abs().max(numeric.abs()).max(1e-4);
        worst = worst.max((grad[i] - numeric).abs() / denom);
    }
    worst
}

fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for n in 0..20 {
        let arch = Architecture::new(3 + n % 5, vec![4 + n % 3, 3 + n % 4], 2 + n % 6).unwrap();
        worst = worst.max(gradient_max_rel_error(&mut rng, &arch, 1e-5));
    }
    check("gradient", worst < 1e-6, format!("max relative error {worst:.2e} over 20 networks"))
}

fn gae_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let done: Vec<bool> = (0..n).map(|_| rng.random_bool(0.2)).collect();
        let last = rng.random_range(-1.0..1.0);
        let (g, l) = (rng.random_range(0.5..1.0), rng.random_range(0.0..1.0));
        let (adv, _) = gae(&r, &v, &done, last, g, l);
        for t in 0..n {
            // A_t = Σ_k (γλ)^k δ_{t+k}, stopping after the first terminal step.
            let mut sum = 0.0;
            for k in t..n {
                let next = if done[k] { 0.0 } else if k + 1 < n { v[k + 1] } else { last };
                let delta = r[k] + g * next - v[k];
                sum += (g * l).powi((k - t) as i32) * delta;
                if done[k] {
                    break;
                }
            }
            worst = worst.max((sum - adv[t]).abs());
        }
    }
    check("gae", worst <= 1e-12, format!("max abs error {worst:.2e} over 200 sequences"))
}

fn ep(success: bool, shortest: u32, path: usize) -> EpisodeResult {
    EpisodeResult {
        success,
        shortest,
        path,
        length: path,
        asks: 0,
    }
}

fn metric_check() -> Check {
    let worked = [ep(true, 10, 12), ep(false, 5, 3), ep(true, 8, 8)];
    let spl = compute_spl(&worked).unwrap();
    let sr = compute_sr(&worked).unwrap();
    let expected = 100.0 * (10.0 / 12.0 + 1.0) / 3.0;
    let mut ok = (spl - expected).abs() < 1e-9 && (sr - 200.0 / 3.0).abs() < 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let eps: Vec<_> = (0..rng.random_range(1..40))
            .map(|_| ep(rng.random_bool(0.5), rng.random_range(0..30), rng.random_range(0..60)))
            .collect();
        ok &= compute_spl(&eps).unwrap() <= compute_sr(&eps).unwrap() + 1e-12;
    }
    check("metrics", ok, format!("worked example SPL {spl:.2}; SPL <= SR on 1000 reports"))
}

/// Length of the shortest simple path by exhaustive depth-first search.
fn enumerate_shortest(grid: &GridMap, at: Cell, goal: Cell, seen: &mut Vec<Cell>, best: &mut Option<u32>) {
    let depth = seen.len() as u32 - 1;
    if best.is_some_and(|b| depth >= b) {
        return;
    }
    if at == goal {
        *best = Some(depth);
        return;
    }
    for n in at.neighbors4() {
        if grid.is_free(n) && !seen.contains(&n) {
            seen.push(n);
            enumerate_shortest(grid, n, goal, seen, best);
            seen.pop();
        }
    }
}

fn geodesic_check() -> Check {
    let maps = [
        GridMap::from_rows(&["#####", "#...#", "#.#.#", "#...#", "#####"]),
        GridMap::from_rows(&["#######", "#..#..#", "#.##..#", "#....##", "###.#.#", "#.....#", "#######"]),
        GridMap::from_rows(&["#######", "#.#...#", "#.#.#.#", "#.#.#.#", "#...#.#", "###...#", "#######"]),
    ];
    let mut pairs = 0;
    let mut ok = true;
    for grid in &maps {
        let free = grid.free_cells();
        for &a in &free {
            let field = grid.distance_field(&[a]);
            for &b in &free {
                let mut best = None;
                enumerate_shortest(grid, a, b, &mut vec![a], &mut best);
                ok &= field.get(b) == best;
                pairs += 1;
            }
        }
    }
    check("geodesic", ok, format!("{pairs} cell pairs on {} maps", maps.len()))
}

fn teacher_check() -> Check {
    let cfg = EnvConfig::default();
    let space = ActionSpace::new(true);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let pool: Vec<usize> = (0..cfg.vocab_size).collect();
    let mut ok = true;
    for _ in 0..2000 {
        let spec = generate_episode(&mut rng, &cfg, &pool).unwrap();
        let free = spec.grid.free_cells();
        let pose = Pose {
            cell: free[rng.random_range(0..free.len())],
            heading: Heading::from_index(rng.random_range(0..4)),
        };
        let mask = object_in_view_mask(&cfg, &spec, pose);
        let mut state = EpisodeState::start(&spec);
        state.pose = pose;
        let view = render_egoview(&cfg, &spec, &state, space, None);
        let ch = CH_CLASS0 + spec.target_class;
        for r in 0..cfg.view_k {
            for c in 0..cfg.view_k {
                ok &= !mask.get(r, c) || view.get(ch, r, c) == 1.0;
            }
        }
        ok &= resolve_ask(false, &cfg, &spec, pose).mask.is_zero();
    }
    check("teacher", ok, "mask within target channel; absent teacher silent on 2000 states".into())
}

fn checkpoint_check() -> Check {
    let cfg = RunConfig::default();
    let arch = cfg.architecture().unwrap();
    let params = init_params(&mut ChaCha8Rng::seed_from_u64(15), &arch);
    let ck = Checkpoint {
        adam: AdamState::new(params.data.len()),
        params,
        iteration: 3,
        config: cfg,
    };
    let bytes = encode(&ck);
    let ok = decode(&bytes).is_ok_and(|back| back == ck) && decode(&bytes[..bytes.len() - 1]).is_err();
    check("checkpoint", ok, format!("{} byte round trip", bytes.len()))
}
