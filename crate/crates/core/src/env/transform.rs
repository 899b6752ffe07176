use super::{EnvSpec, Environment, StepOutcome};
use crate::error::{dim_err, Error, Result};
use crate::Rng;

/// What the wrapped agent sees at sub-step `index` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct SubStepObservation {
    pub base: Vec<f64>,
    /// Sub-actions chosen so far in this real step, zero-padded to `N - 1`.
    pub previous: Vec<f64>,
    pub index: usize,
    pub action_dim: usize,
}

impl SubStepObservation {
    /// `base ++ previous ++ one_hot(index, N)`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.base.len() + self.previous.len() + self.action_dim);
        out.extend_from_slice(&self.base);
        out.extend_from_slice(&self.previous);
        out.extend((0..self.action_dim).map(|i| if i == self.index { 1.0 } else { 0.0 }));
        out
    }
}

/// Splits each `N`-dimensional step of an inner environment into `N` scalar
/// sub-steps. The first `N - 1` sub-steps only record the chosen value and
/// give zero reward; the last one executes the inner step.
pub struct TransformedEnv {
    inner: Box<dyn Environment>,
    spec: EnvSpec,
    base: Vec<f64>,
    partial: Vec<f64>,
    finished: bool,
}

impl TransformedEnv {
    pub fn new(inner: Box<dyn Environment>) -> Result<Self> {
        let s = inner.spec().clone();
        if s.action_dim == 0 {
            return Err(Error::InvalidArgument(
                "inner environment has no action dimensions".into(),
            ));
        }
        let n = s.action_dim;
        let low = s.action_low.iter().copied().fold(f64::INFINITY, f64::min);
        let high = s
            .action_high
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let spec = EnvSpec {
            observation_dim: s.observation_dim + (n - 1) + n,
            action_dim: 1,
            action_low: vec![low],
            action_high: vec![high],
            max_episode_steps: n * s.max_episode_steps,
        };
        Ok(Self {
            inner,
            spec,
            base: vec![0.0; s.observation_dim],
            partial: Vec::with_capacity(n),
            finished: true,
        })
    }

    fn inner_dims(&self) -> usize {
        self.inner.spec().action_dim
    }

    pub fn sub_observation(&self) -> SubStepObservation {
        let n = self.inner_dims();
        let mut previous = vec![0.0; n - 1];
        previous[..self.partial.len()].copy_from_slice(&self.partial);
        SubStepObservation {
            base: self.base.clone(),
            previous,
            index: self.partial.len(),
            action_dim: n,
        }
    }
}

impl Environment for TransformedEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        self.base = self.inner.reset(rng);
        self.partial.clear();
        self.finished = false;
        self.sub_observation().flatten()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if self.finished {
            return Err(Error::EpisodeFinished);
        }
        if action.len() != 1 {
            return Err(dim_err("sub-step action", 1, action.len()));
        }
        let j = self.partial.len();
        let s = self.inner.spec();
        let (lo, hi) = (s.action_low[j], s.action_high[j]);
        let a = if action[0].is_nan() {
            lo
        } else {
            action[0].clamp(lo, hi)
        };
        self.partial.push(a);
        if self.partial.len() < self.inner_dims() {
            return Ok(StepOutcome {
                observation: self.sub_observation().flatten(),
                reward: 0.0,
                terminal: false,
                truncated: false,
                real_step: false,
            });
        }
        let full = std::mem::take(&mut self.partial);
        let out = self.inner.step(&full)?;
        self.partial = Vec::with_capacity(full.len());
        self.base = out.observation;
        self.finished = out.terminal || out.truncated;
        Ok(StepOutcome {
            observation: self.sub_observation().flatten(),
            reward: out.reward,
            terminal: out.terminal,
            truncated: out.truncated,
            real_step: true,
        })
    }
}
