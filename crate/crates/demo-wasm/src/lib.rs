//! Browser bindings for the interactive demo page in `www/`.
//!
//! Everything here also builds natively so the bindings are exercised by the
//! ordinary test suite.

use rand::{Rng as _, SeedableRng};
use sdqn_core::agents::{beam_search, build_agent, exhaustive_argmax, Agent};
use sdqn_core::env::{bandit_reward, make_env, Environment, Transition};
use sdqn_core::harness::{export_q_surface, parse_config_with_preset, ExperimentConfig};
use sdqn_core::replay::ReplayBuffer;
use sdqn_core::Rng;
use wasm_bindgen::prelude::*;

fn axis(grid: usize) -> impl Iterator<Item = f64> + Clone {
    let grid = grid.max(2);
    (0..grid).map(move |k| -1.0 + 2.0 * k as f64 / (grid - 1) as f64)
}

/// Bandit reward on a `grid x grid` lattice over `[-1, 1]^2`, row-major with
/// the first action dimension along rows.
#[wasm_bindgen]
pub fn bandit_surface(grid: usize) -> Vec<f64> {
    axis(grid)
        .flat_map(|x| axis(grid).map(move |y| bandit_reward(&[x, y])))
        .collect()
}

/// Beam search on a random prefix-dependent additive instance with `n`
/// dimensions and `b` bins. Returns the exhaustive optimum followed by the
/// best score found at each width `1..=max_width`.
#[wasm_bindgen]
pub fn beam_scores(n: usize, b: usize, seed: u64, max_width: usize) -> Vec<f64> {
    let (n, b) = (n.clamp(1, 4), b.clamp(2, 8));
    let mut rng = Rng::seed_from_u64(seed);
    let index = |p: &[usize]| p.iter().fold(0, |acc, &k| acc * b + k);
    let table: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            (0..b.pow(i as u32))
                .map(|_| (0..b).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect()
        })
        .collect();
    let total = |s: &[usize]| (0..n).map(|i| table[i][index(&s[..i])][s[i]]).sum::<f64>();
    let mut out = vec![exhaustive_argmax(n, b, total).1];
    for w in 1..=max_width.max(1) {
        let (_, v) = beam_search(n, b, w, |prefixes| {
            Ok(prefixes
                .iter()
                .map(|p| table[p.len()][index(p)].clone())
                .collect())
        })
        .expect("widths and sizes are clamped to valid values");
        out.push(v);
    }
    out
}

/// A sequential Q-learning agent trained step by step on the bandit.
#[wasm_bindgen]
pub struct BanditTrainer {
    cfg: ExperimentConfig,
    agent: Box<dyn Agent>,
    env: Box<dyn Environment>,
    buffer: ReplayBuffer,
    rng: Rng,
    steps: u64,
}

#[wasm_bindgen]
impl BanditTrainer {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64, bins: usize) -> BanditTrainer {
        let mut cfg =
            parse_config_with_preset("", Some("bandit-sdqn")).expect("bundled preset parses");
        cfg.seed = seed;
        cfg.agent_config.bins = bins.clamp(2, 64);
        let env = make_env(&cfg.env).expect("bandit is built in");
        let mut rng = Rng::seed_from_u64(seed);
        let agent = build_agent(
            cfg.agent,
            env.spec(),
            &cfg.resolved_agent_config(),
            &mut rng,
        )
        .expect("preset sizes are valid");
        BanditTrainer {
            buffer: ReplayBuffer::new(cfg.replay_capacity).expect("unbounded buffer"),
            cfg,
            agent,
            env,
            rng,
            steps: 0,
        }
    }

    /// Collects and learns from `count` more transitions; returns the reward
    /// of the current greedy action.
    pub fn train(&mut self, count: u32) -> f64 {
        for _ in 0..count {
            let obs = self.env.reset(&mut self.rng);
            let action = if self.steps < self.cfg.warmup_steps {
                vec![
                    self.rng.random_range(-1.0..=1.0),
                    self.rng.random_range(-1.0..=1.0),
                ]
            } else {
                self.agent
                    .act_explore(&obs, self.steps, &mut self.rng)
                    .expect("observation has the bandit shape")
            };
            let action = self.env.spec().clamp_action(&action);
            let out = self.env.step(&action).expect("fresh episode");
            self.buffer.push(Transition {
                state: obs,
                action,
                reward: out.reward * self.cfg.reward_scaling,
                next_state: out.observation,
                terminal: out.terminal,
                discount: self.agent.config().gamma,
            });
            if self.steps >= self.cfg.warmup_steps {
                self.agent
                    .train_step(&self.buffer, &mut self.rng)
                    .expect("buffer is non-empty");
            }
            self.steps += 1;
        }
        bandit_reward(&self.greedy_action())
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn greedy_action(&self) -> Vec<f64> {
        self.agent
            .act_greedy(&[0.0])
            .expect("observation has the bandit shape")
    }

    /// Double-network Q estimates on a `grid x grid` lattice, laid out like
    /// [`bandit_surface`].
    pub fn q_surface(&self, grid: usize) -> Vec<f64> {
        let rows = export_q_surface(
            self.agent.as_ref(),
            self.env.spec(),
            &[0.0],
            (0, 1),
            grid.max(2),
        )
        .expect("two action dimensions");
        rows.iter().map(|r| r.q_double).collect()
    }
}
