use super::{EnvSpec, Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::Rng;

/// Center of the broad, suboptimal mode.
pub const BANDIT_LOCAL_MODE: [f64; 2] = [-0.5, -0.5];
/// Center of the narrow, optimal mode.
pub const BANDIT_OPTIMAL_MODE: [f64; 2] = [0.6, 0.6];
/// `bandit_reward(BANDIT_OPTIMAL_MODE)`.
pub const BANDIT_GLOBAL_MAX: f64 = 1.000_035_919_653_380_3;

const LOCAL_AMPLITUDE: f64 = 0.7;
const LOCAL_SIGMA: f64 = 0.35;
const OPTIMAL_AMPLITUDE: f64 = 1.0;
const OPTIMAL_SIGMA: f64 = 0.12;

/// Sum of two isotropic Gaussian bumps on `[-1, 1]^2`. Inputs are clamped.
pub fn bandit_reward(a: &[f64]) -> f64 {
    let x = a[0].clamp(-1.0, 1.0);
    let y = a[1].clamp(-1.0, 1.0);
    let bump = |c: [f64; 2], amp: f64, sigma: f64| {
        let d2 = (x - c[0]).powi(2) + (y - c[1]).powi(2);
        amp * (-d2 / (2.0 * sigma * sigma)).exp()
    };
    bump(BANDIT_LOCAL_MODE, LOCAL_AMPLITUDE, LOCAL_SIGMA)
        + bump(BANDIT_OPTIMAL_MODE, OPTIMAL_AMPLITUDE, OPTIMAL_SIGMA)
}

/// Single-step, deterministic 2-D bandit with a constant observation.
#[derive(Debug, Clone)]
pub struct Bandit2d {
    spec: EnvSpec,
    finished: bool,
}

impl Bandit2d {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                observation_dim: 1,
                action_dim: 2,
                action_low: vec![-1.0; 2],
                action_high: vec![1.0; 2],
                max_episode_steps: 1,
            },
            finished: true,
        }
    }
}

impl Default for Bandit2d {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for Bandit2d {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _rng: &mut Rng) -> Vec<f64> {
        self.finished = false;
        vec![0.0]
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if self.finished {
            return Err(Error::EpisodeFinished);
        }
        if action.len() != 2 {
            return Err(crate::error::dim_err("bandit action", 2, action.len()));
        }
        self.finished = true;
        Ok(StepOutcome {
            observation: vec![0.0],
            reward: bandit_reward(action),
            terminal: true,
            truncated: false,
            real_step: true,
        })
    }
}
