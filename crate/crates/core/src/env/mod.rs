//! Native environments and the fictitious-state wrapper.

mod bandit;
mod pointmass;
mod transform;

pub use bandit::{
    bandit_reward, Bandit2d, BANDIT_GLOBAL_MAX, BANDIT_LOCAL_MODE, BANDIT_OPTIMAL_MODE,
};
pub use pointmass::{
    PointMass, PointMassState, POINTMASS_DT, POINTMASS_GOAL_RADIUS, POINTMASS_HORIZON,
};
pub use transform::{SubStepObservation, TransformedEnv};

use crate::error::{Error, Result};
use crate::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub observation_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub max_episode_steps: usize,
}

impl EnvSpec {
    pub fn clamp_action(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(&a, (&lo, &hi))| if a.is_nan() { lo } else { a.clamp(lo, hi) })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// The episode ended in an absorbing state; do not bootstrap.
    pub terminal: bool,
    /// The episode hit its step limit; bootstrap as usual.
    pub truncated: bool,
    /// A step of the underlying MDP completed (always true for unwrapped
    /// environments). Discounting applies only at these boundaries.
    pub real_step: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;
    fn reset(&mut self, rng: &mut Rng) -> Vec<f64>;
    /// Out-of-range actions are clamped. Stepping a finished episode is an error.
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome>;
}

/// Builds an environment from its id: `bandit2d`, `pointmass`, or
/// `transformed:<id>`.
pub fn make_env(id: &str) -> Result<Box<dyn Environment>> {
    match id {
        "bandit2d" => Ok(Box::new(Bandit2d::new())),
        "pointmass" => Ok(Box::new(PointMass::new())),
        _ => match id.strip_prefix("transformed:") {
            Some(inner) => Ok(Box::new(TransformedEnv::new(make_env(inner)?)?)),
            None => Err(Error::Config(format!(
                "unknown environment `{id}` (expected bandit2d, pointmass or transformed:<id>)"
            ))),
        },
    }
}

/// One environment step as stored in replay. `discount` is the multiplier on
/// the bootstrapped successor value (gamma at real-step boundaries, 1 inside
/// a fictitious sub-step).
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
    pub discount: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpisodeStats {
    pub total_return: f64,
    pub discounted_return: f64,
    pub length: usize,
    discount_factor: Option<f64>,
}

impl EpisodeStats {
    pub fn record(&mut self, reward: f64, real_step: bool, gamma: f64) {
        let factor = self.discount_factor.unwrap_or(1.0);
        self.total_return += reward;
        self.discounted_return += factor * reward;
        self.length += 1;
        self.discount_factor = Some(if real_step { factor * gamma } else { factor });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_env_ids() {
        assert_eq!(make_env("bandit2d").unwrap().spec().action_dim, 2);
        assert_eq!(make_env("pointmass").unwrap().spec().observation_dim, 4);
        let t = make_env("transformed:pointmass").unwrap();
        assert_eq!(t.spec().action_dim, 1);
        assert_eq!(t.spec().max_episode_steps, 2 * POINTMASS_HORIZON);
        assert!(matches!(make_env("hopper"), Err(Error::Config(_))));
    }

    #[test]
    fn discounted_return() {
        let mut s = EpisodeStats::default();
        for r in [1.0, 1.0, 1.0] {
            s.record(r, true, 0.5);
        }
        assert_eq!(s.total_return, 3.0);
        assert_eq!(s.discounted_return, 1.75);
        assert_eq!(s.length, 3);
    }
}
