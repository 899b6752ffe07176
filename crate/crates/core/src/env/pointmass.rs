use rand::Rng as _;

use super::{EnvSpec, Environment, StepOutcome};
use crate::error::{dim_err, Error, Result};
use crate::Rng;

pub const POINTMASS_DT: f64 = 0.05;
pub const POINTMASS_GOAL_RADIUS: f64 = 0.05;
pub const POINTMASS_HORIZON: usize = 200;
const GOAL_BONUS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMassState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

impl PointMassState {
    /// One step of the dynamics. Returns the next state, the reward and
    /// whether the goal was reached.
    pub fn advance(&self, action: [f64; 2]) -> (PointMassState, f64, bool) {
        let mut next = *self;
        for i in 0..2 {
            let a = action[i].clamp(-1.0, 1.0);
            next.velocity[i] = (self.velocity[i] + a * POINTMASS_DT).clamp(-1.0, 1.0);
            next.position[i] = self.position[i] + next.velocity[i] * POINTMASS_DT;
        }
        let dist = next.position[0].hypot(next.position[1]);
        if dist < POINTMASS_GOAL_RADIUS {
            (next, GOAL_BONUS - dist, true)
        } else {
            (next, -dist, false)
        }
    }

    fn observation(&self) -> Vec<f64> {
        vec![
            self.position[0],
            self.position[1],
            self.velocity[0],
            self.velocity[1],
        ]
    }
}

/// Planar point mass driven toward the origin by bounded accelerations.
/// Observation is `(px, py, vx, vy)`.
#[derive(Debug, Clone)]
pub struct PointMass {
    spec: EnvSpec,
    state: PointMassState,
    steps: usize,
    finished: bool,
}

impl PointMass {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                observation_dim: 4,
                action_dim: 2,
                action_low: vec![-1.0; 2],
                action_high: vec![1.0; 2],
                max_episode_steps: POINTMASS_HORIZON,
            },
            state: PointMassState {
                position: [0.0; 2],
                velocity: [0.0; 2],
            },
            steps: 0,
            finished: true,
        }
    }

    /// Starts an episode from a given state instead of a random one.
    pub fn reset_to(&mut self, state: PointMassState) -> Vec<f64> {
        self.state = state;
        self.steps = 0;
        self.finished = false;
        state.observation()
    }

    pub fn state(&self) -> PointMassState {
        self.state
    }
}

impl Default for PointMass {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for PointMass {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        let position = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        self.reset_to(PointMassState {
            position,
            velocity: [0.0; 2],
        })
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if self.finished {
            return Err(Error::EpisodeFinished);
        }
        if action.len() != 2 {
            return Err(dim_err("pointmass action", 2, action.len()));
        }
        let a = [
            if action[0].is_nan() { 0.0 } else { action[0] },
            if action[1].is_nan() { 0.0 } else { action[1] },
        ];
        let (next, reward, terminal) = self.state.advance(a);
        self.state = next;
        self.steps += 1;
        let truncated = !terminal && self.steps >= POINTMASS_HORIZON;
        self.finished = terminal || truncated;
        Ok(StepOutcome {
            observation: next.observation(),
            reward,
            terminal,
            truncated,
            real_step: true,
        })
    }
}
