//! Learning agents: the sequential discretized Q-learner, its additive,
//! probabilistic and independent variants, and the DDPG and NAF baselines.

mod add;
mod beam;
mod config;
mod ddpg;
mod idqn;
mod naf;
pub(crate) mod nets;
mod prob;
mod sdqn;

pub use add::AddSdqn;
pub use beam::{beam_search, exhaustive_argmax, BeamState};
pub use config::{AgentConfig, AgentKind, HeadParameterization};
pub use ddpg::Ddpg;
pub use idqn::{idqn_eval_argmax, Idqn};
pub use naf::{naf_q, Naf, NafOutput};
pub use prob::{prob_sample_action, reinforce_grad, ProbSdqn};
pub use sdqn::{sequential_argmax, HeadLosses, Sdqn, HEADS_PREFIX, QD_PREFIX};

use crate::autodiff::{Checkpoint, Gradients, ParameterStore, Tensor};
use crate::env::{EnvSpec, Transition};
use crate::error::{Error, Result};
use crate::replay::ReplayBuffer;
use crate::Rng;

/// Losses from one training step. Fields an agent does not use stay 0.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossReport {
    pub td: f64,
    /// Sum over dimensions of the head consistency losses.
    pub inner_sum: f64,
    /// Head-to-double-network matching loss.
    pub base: f64,
    /// Actor, policy-gradient or other auxiliary objective.
    pub policy: f64,
}

/// Values at one action for surface plots. `sequential` is the last head's
/// (or the decomposition's) estimate, where the agent has one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QEstimate {
    pub double: f64,
    pub sequential: Option<f64>,
}

pub trait Agent {
    fn kind(&self) -> AgentKind;

    fn config(&self) -> &AgentConfig;

    /// Noise-free action.
    fn act_greedy(&self, obs: &[f64]) -> Result<Vec<f64>>;

    /// Exploratory action at global step `step`.
    fn act_explore(&mut self, obs: &[f64], step: u64, rng: &mut Rng) -> Result<Vec<f64>>;

    /// Called at the start of every training episode.
    fn begin_episode(&mut self) {}

    fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut Rng) -> Result<LossReport>;

    /// Current epsilon or temperature, for logging.
    fn exploration_value(&self, step: u64) -> f64 {
        self.config().exploration.value(step)
    }

    fn q_estimate(&self, obs: &[f64], action: &[f64]) -> Result<QEstimate>;

    /// Online and target parameters.
    fn stores(&self) -> (&ParameterStore, &ParameterStore);

    fn stores_mut(&mut self) -> (&mut ParameterStore, &mut ParameterStore);

    fn save(&self) -> Result<Checkpoint> {
        let (online, target) = self.stores();
        let mut ck = Checkpoint::default();
        ck.add_store("online/", online)?;
        ck.add_store("target/", target)?;
        Ok(ck)
    }

    fn load(&mut self, ck: &Checkpoint) -> Result<()> {
        let (online, target) = self.stores_mut();
        ck.restore_store("online/", online)?;
        ck.restore_store("target/", target)
    }
}

/// Builds an agent for an environment.
pub fn build_agent(
    kind: AgentKind,
    spec: &EnvSpec,
    cfg: &AgentConfig,
    rng: &mut Rng,
) -> Result<Box<dyn Agent>> {
    cfg.validate()?;
    Ok(match kind {
        AgentKind::Sdqn => Box::new(Sdqn::new(spec, cfg.clone(), rng)?),
        AgentKind::Add => Box::new(AddSdqn::new(spec, cfg.clone(), rng)?),
        AgentKind::Prob => Box::new(ProbSdqn::new(spec, cfg.clone(), rng)?),
        AgentKind::Idqn => Box::new(Idqn::new(spec, cfg.clone(), rng)?),
        AgentKind::Ddpg => Box::new(Ddpg::new(spec, cfg.clone(), rng)?),
        AgentKind::Naf => Box::new(Naf::new(spec, cfg.clone(), rng)?),
    })
}

/// Column-stacked batch views of a list of transitions.
pub(crate) struct Batch {
    pub states: Tensor,
    pub next_states: Tensor,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    /// Bootstrap multiplier: 0 for terminal transitions, else the stored discount.
    pub continuation: Vec<f64>,
}

impl Batch {
    pub fn new(ts: &[Transition]) -> Result<Self> {
        if ts.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let states: Vec<&[f64]> = ts.iter().map(|t| t.state.as_slice()).collect();
        let next: Vec<&[f64]> = ts.iter().map(|t| t.next_state.as_slice()).collect();
        Ok(Self {
            states: Tensor::from_rows(&states)?,
            next_states: Tensor::from_rows(&next)?,
            actions: ts.iter().map(|t| t.action.clone()).collect(),
            rewards: ts.iter().map(|t| t.reward).collect(),
            continuation: ts
                .iter()
                .map(|t| if t.terminal { 0.0 } else { t.discount })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    /// `r + continuation * next_values` as an `[m, 1]` tensor.
    pub fn td_targets(&self, next_values: &[f64]) -> Result<Tensor> {
        let y = self
            .rewards
            .iter()
            .zip(&self.continuation)
            .zip(next_values)
            .map(|((r, c), q)| if *c == 0.0 { *r } else { r + c * q })
            .collect();
        Tensor::matrix(self.len(), 1, y)
    }
}

/// Weight decay, clipping and non-finite checks shared by every update.
pub(crate) fn finish_gradients(grads: &mut Gradients, store: &ParameterStore, cfg: &AgentConfig) {
    if cfg.l2 > 0.0 {
        grads.add_weight_decay(store, cfg.l2);
    }
    crate::autodiff::clip_gradients(grads, cfg.gradient_clipping);
}

pub(crate) fn one_obs(obs: &[f64], spec_dim: usize) -> Result<Tensor> {
    if obs.len() != spec_dim {
        return Err(crate::error::dim_err("observation", spec_dim, obs.len()));
    }
    Tensor::matrix(1, obs.len(), obs.to_vec())
}
