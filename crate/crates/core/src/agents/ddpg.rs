//! Deterministic actor-critic baseline with Ornstein-Uhlenbeck exploration.

use crate::autodiff::{
    polyak_update, Activation, AdamState, Gradients, Mlp, ParameterStore, Tape, Tensor, Var,
};
use crate::env::{EnvSpec, Transition};
use crate::error::Result;
use crate::explore::{ExplorationKind, OuNoise};
use crate::replay::ReplayBuffer;
use crate::Rng;

use super::nets::squash_to_bounds;
use super::{
    finish_gradients, one_obs, Agent, AgentConfig, AgentKind, Batch, LossReport, QEstimate,
};

const ACTOR: &str = "actor/";
const CRITIC: &str = "critic/";
/// OU noise advances one unit of time per environment step.
const OU_DT: f64 = 1.0;

pub struct Ddpg {
    cfg: AgentConfig,
    obs_dim: usize,
    low: Vec<f64>,
    high: Vec<f64>,
    online: ParameterStore,
    target: ParameterStore,
    actor: Mlp,
    critic: Mlp,
    opt_actor: AdamState,
    opt_critic: AdamState,
    ou: OuNoise,
    updates: u64,
}

impl Ddpg {
    pub fn new(spec: &EnvSpec, cfg: AgentConfig, rng: &mut Rng) -> Result<Self> {
        let n = spec.action_dim;
        let mut online = ParameterStore::new();
        let mut sizes = vec![spec.observation_dim];
        sizes.extend(&cfg.actor_hidden);
        sizes.push(n);
        let actor = Mlp::new(
            &mut online,
            &format!("{ACTOR}mlp"),
            &sizes,
            Activation::Relu,
            Activation::None,
            rng,
        )?;
        let mut sizes = vec![spec.observation_dim + n];
        sizes.extend(&cfg.critic_hidden);
        sizes.push(1);
        let critic = Mlp::new(
            &mut online,
            &format!("{CRITIC}mlp"),
            &sizes,
            Activation::Relu,
            Activation::None,
            rng,
        )?;
        let ex = &cfg.exploration;
        Ok(Self {
            ou: OuNoise::new(n, ex.ou_damping, ex.ou_std, OU_DT),
            opt_actor: AdamState::new(cfg.learning_rate),
            opt_critic: AdamState::new(cfg.learning_rate),
            target: online.clone(),
            online,
            actor,
            critic,
            low: spec.action_low.clone(),
            high: spec.action_high.clone(),
            obs_dim: spec.observation_dim,
            updates: 0,
            cfg,
        })
    }

    fn actor_forward(&self, tape: &mut Tape<'_>, s: Var) -> Result<Var> {
        let raw = self.actor.forward(tape, s)?;
        squash_to_bounds(tape, raw, &self.low, &self.high)
    }

    fn critic_forward(&self, tape: &mut Tape<'_>, s: Var, a: Var) -> Result<Var> {
        let x = tape.concat(&[s, a])?;
        self.critic.forward(tape, x)
    }

    /// Actor output for each state row.
    pub fn actions(&self, store: &ParameterStore, states: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new(store);
        let s = tape.constant(states.clone());
        let a = self.actor_forward(&mut tape, s)?;
        Ok(tape.value(a).clone())
    }

    pub fn critic_values(
        &self,
        store: &ParameterStore,
        states: &Tensor,
        actions: &Tensor,
    ) -> Result<Vec<f64>> {
        let mut tape = Tape::new(store);
        let s = tape.constant(states.clone());
        let a = tape.constant(actions.clone());
        let q = self.critic_forward(&mut tape, s, a)?;
        Ok(tape.value(q).data().to_vec())
    }

    pub fn td_targets(&self, batch: &[Transition]) -> Result<Tensor> {
        self.td_targets_batch(&Batch::new(batch)?)
    }

    fn td_targets_batch(&self, batch: &Batch) -> Result<Tensor> {
        let next_a = self.actions(&self.target, &batch.next_states)?;
        let q = self.critic_values(&self.target, &batch.next_states, &next_a)?;
        batch.td_targets(&q)
    }

    /// Bellman error of the critic at replayed actions. Only critic
    /// parameters receive gradients.
    pub fn critic_objective(
        &self,
        store: &ParameterStore,
        batch: &[Transition],
        y: &Tensor,
    ) -> Result<(f64, Gradients)> {
        self.critic_objective_batch(store, &Batch::new(batch)?, y)
    }

    fn critic_objective_batch(
        &self,
        store: &ParameterStore,
        batch: &Batch,
        y: &Tensor,
    ) -> Result<(f64, Gradients)> {
        let mut tape = Tape::new(store).freeze(ACTOR);
        let s = tape.constant(batch.states.clone());
        let a = tape.constant(Tensor::from_rows(&batch.actions)?);
        let q = self.critic_forward(&mut tape, s, a)?;
        let loss = tape.mse_to(q, y.clone())?;
        let v = tape.value(loss).item();
        Ok((v, tape.backward(loss)?))
    }

    /// Deterministic policy gradient for `-mean Q(s, actor(s))`. The action
    /// gradient from the critic is clipped to norm `critic_grad_clip` per
    /// sample before it is pushed through the actor. Returns the mean critic
    /// value and gradients for actor parameters only.
    pub fn actor_objective(
        &self,
        store: &ParameterStore,
        states: &Tensor,
    ) -> Result<(f64, Gradients)> {
        let m = states.rows();
        let actions = self.actions(store, states)?;
        let (q_mean, mut dq_da) = {
            let mut tape = Tape::new(store).freeze(ACTOR).freeze(CRITIC);
            let s = tape.constant(states.clone());
            let a = tape.constant(actions);
            let q = self.critic_forward(&mut tape, s, a)?;
            let mean = tape.mean(q);
            let v = tape.value(mean).item();
            let (_, mut wrt) = tape.backward_with(mean, &[a])?;
            (v, wrt.remove(0))
        };
        if let Some(c) = self.cfg.critic_grad_clip {
            let n = dq_da.cols();
            for row in dq_da.data_mut().chunks_mut(n) {
                let norm = row.iter().map(|g| g * g).sum::<f64>().sqrt();
                // Per-sample gradients carry a 1/m from the mean; clip the
                // per-sample quantity.
                let per_sample = norm * m as f64;
                if per_sample > c {
                    let f = c / per_sample;
                    row.iter_mut().for_each(|g| *g *= f);
                }
            }
        }
        Ok((q_mean, self.actor_gradients(store, states, &dq_da)?))
    }

    /// Pushes a given action gradient `dq_da` (one row per state) back
    /// through the actor: the gradient of `-sum(actor(s) * dq_da)`, so a
    /// descent step moves actions along `dq_da`.
    pub fn actor_gradients(
        &self,
        store: &ParameterStore,
        states: &Tensor,
        dq_da: &Tensor,
    ) -> Result<Gradients> {
        let mut tape = Tape::new(store).freeze(CRITIC);
        let s = tape.constant(states.clone());
        let a = self.actor_forward(&mut tape, s)?;
        let g = tape.constant(dq_da.map(|x| -x));
        let prod = tape.mul(a, g)?;
        let surrogate = tape.sum(prod);
        tape.backward(surrogate)
    }
}

impl Agent for Ddpg {
    fn kind(&self) -> AgentKind {
        AgentKind::Ddpg
    }

    fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    fn act_greedy(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .actions(&self.online, &one_obs(obs, self.obs_dim)?)?
            .into_data())
    }

    fn act_explore(&mut self, obs: &[f64], step: u64, rng: &mut Rng) -> Result<Vec<f64>> {
        let greedy = self.act_greedy(obs)?;
        let sched = &self.cfg.exploration;
        let ou = (sched.kind == ExplorationKind::OrnsteinUhlenbeck).then_some(&mut self.ou);
        Ok(sched.perturb(&greedy, &self.low, &self.high, step, ou, rng))
    }

    fn begin_episode(&mut self) {
        self.ou.reset();
    }

    fn exploration_value(&self, step: u64) -> f64 {
        let sched = &self.cfg.exploration;
        match sched.kind {
            ExplorationKind::OrnsteinUhlenbeck => sched.ou_std,
            ExplorationKind::GaussianLocal => sched.sigma_local,
            _ => sched.value(step),
        }
    }

    fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut Rng) -> Result<LossReport> {
        let batch = Batch::new(&buffer.sample_batch(self.cfg.batch_size, rng)?)?;
        let y = self.td_targets_batch(&batch)?;
        let (td, mut grads) = self.critic_objective_batch(&self.online, &batch, &y)?;
        finish_gradients(&mut grads, &self.online, &self.cfg);
        self.opt_critic.step(&mut self.online, &grads)?;

        let (q_mean, mut grads) = self.actor_objective(&self.online, &batch.states)?;
        finish_gradients(&mut grads, &self.online, &self.cfg);
        self.opt_actor.step(&mut self.online, &grads)?;

        self.updates += 1;
        if self
            .updates
            .is_multiple_of(self.cfg.target_update_rate.max(1))
        {
            polyak_update(
                &mut self.target,
                &self.online,
                1.0 - self.cfg.target_update_fraction,
            )?;
        }
        Ok(LossReport {
            td,
            policy: -q_mean,
            ..LossReport::default()
        })
    }

    fn q_estimate(&self, obs: &[f64], action: &[f64]) -> Result<QEstimate> {
        let s = one_obs(obs, self.obs_dim)?;
        let a = Tensor::matrix(1, action.len(), action.to_vec())?;
        Ok(QEstimate {
            double: self.critic_values(&self.online, &s, &a)?[0],
            sequential: None,
        })
    }

    fn stores(&self) -> (&ParameterStore, &ParameterStore) {
        (&self.online, &self.target)
    }

    fn stores_mut(&mut self) -> (&mut ParameterStore, &mut ParameterStore) {
        (&mut self.online, &mut self.target)
    }
}
