//! Sequential discretized Q-learning: a chain of per-dimension heads picks the
//! action one dimension at a time, and a separate critic over full actions
//! supplies the values the chain is trained to reproduce.

use crate::autodiff::{polyak_update, AdamState, Gradients, ParameterStore, Tape, Tensor, Var};
use crate::discretize::Discretizer;
use crate::env::{EnvSpec, Transition};
use crate::error::Result;
use crate::explore::{argmax, ExplorationKind};
use crate::replay::ReplayBuffer;
use crate::Rng;

use super::nets::{action_feature_width, action_features, decode_sequential, DoubleQNet, HeadNet};
use super::{
    finish_gradients, one_obs, Agent, AgentConfig, AgentKind, Batch, LossReport, QEstimate,
};

/// Parameter name prefix of the critic.
pub const QD_PREFIX: &str = "qd/";
/// Parameter name prefix of the head chain.
pub const HEADS_PREFIX: &str = "heads/";

/// Greedy decoding of a chain of heads: `head(prefix)` returns the values of
/// head `prefix.len()` given the bins chosen so far.
pub fn sequential_argmax(
    n: usize,
    mut head: impl FnMut(&[usize]) -> Result<Vec<f64>>,
) -> Result<Vec<usize>> {
    let mut bins = Vec::with_capacity(n);
    for _ in 0..n {
        let q = head(&bins)?;
        bins.push(argmax(&q));
    }
    Ok(bins)
}

/// Head objective values from one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HeadLosses {
    pub base: f64,
    pub inner_sum: f64,
    pub greedy_penalty: f64,
    /// Weighted total that is differentiated.
    pub total: f64,
}

pub struct Sdqn {
    cfg: AgentConfig,
    obs_dim: usize,
    disc: Discretizer,
    online: ParameterStore,
    target: ParameterStore,
    heads: HeadNet,
    qd: DoubleQNet,
    opt_td: AdamState,
    opt_max: AdamState,
}

impl Sdqn {
    pub fn new(spec: &EnvSpec, cfg: AgentConfig, rng: &mut Rng) -> Result<Self> {
        let disc = Discretizer::new(spec.action_low.clone(), spec.action_high.clone(), cfg.bins)?;
        let n = spec.action_dim;
        let mut online = ParameterStore::new();
        let heads = HeadNet::new(
            &mut online,
            HEADS_PREFIX,
            cfg.parameterization,
            spec.observation_dim,
            n,
            &cfg,
            rng,
        )?;
        let qd = DoubleQNet::new(
            &mut online,
            QD_PREFIX,
            spec.observation_dim,
            action_feature_width(n, cfg.bins),
            cfg.embedding_size,
            cfg.hidden_size,
            rng,
        )?;
        Ok(Self {
            opt_td: AdamState::new(cfg.lr_td).with_schedule(cfg.lr_schedule_td),
            opt_max: AdamState::new(cfg.lr_maxing).with_schedule(cfg.lr_schedule_maxing),
            target: online.clone(),
            online,
            heads,
            qd,
            disc,
            obs_dim: spec.observation_dim,
            cfg,
        })
    }

    pub fn discretizer(&self) -> &Discretizer {
        &self.disc
    }

    pub fn optimizer_steps(&self) -> (u64, u64) {
        (self.opt_td.steps(), self.opt_max.steps())
    }

    /// Greedy bins for a batch of states under the heads in `store`.
    pub fn greedy_bins_with(
        &self,
        store: &ParameterStore,
        states: &Tensor,
    ) -> Result<Vec<Vec<usize>>> {
        decode_sequential(&self.heads, store, &self.disc, states, |_, _, q| {
            Ok(argmax(q))
        })
    }

    pub fn greedy_bins(&self, states: &Tensor) -> Result<Vec<Vec<usize>>> {
        self.greedy_bins_with(&self.online, states)
    }

    /// Values of every head for one state along a given bin prefix.
    pub fn head_values(&self, obs: &[f64], bins: &[usize]) -> Result<Vec<Vec<f64>>> {
        let s = one_obs(obs, self.obs_dim)?;
        let mut tape = Tape::new(&self.online);
        let sv = tape.constant(s);
        let prefix = vec![bins.to_vec()];
        let vars = self
            .heads
            .heads(&mut tape, &self.disc, sv, &prefix, self.disc.dims())?;
        Ok(vars
            .iter()
            .map(|&v| tape.value(v).data().to_vec())
            .collect())
    }

    pub fn double_q_with(
        &self,
        store: &ParameterStore,
        states: &Tensor,
        actions: &[Vec<f64>],
    ) -> Result<Vec<f64>> {
        self.qd
            .eval(store, states, action_features(&self.disc, actions))
    }

    fn decode(&self, bins: &[Vec<usize>]) -> Vec<Vec<f64>> {
        bins.iter().map(|b| self.disc.decode(b)).collect()
    }

    /// Bootstrapped regression targets `r + gamma * Q^D(s', pi(s'))` with the
    /// greedy successor action decoded by the online heads.
    pub fn td_targets(&self, batch: &[Transition]) -> Result<Tensor> {
        self.td_targets_batch(&Batch::new(batch)?)
    }

    fn td_targets_batch(&self, batch: &Batch) -> Result<Tensor> {
        let next_bins = self.greedy_bins(&batch.next_states)?;
        let store = if self.cfg.use_target_for_qd {
            &self.target
        } else {
            &self.online
        };
        let next_q = self.double_q_with(store, &batch.next_states, &self.decode(&next_bins))?;
        batch.td_targets(&next_q)
    }

    /// Critic objective `td_multiplier * mse(Q^D(s, a), y) + drag * mean(Q^D^2)`
    /// for fixed targets `y`. Returns the plain TD loss, the weighted total and
    /// gradients with respect to the critic parameters in `store`.
    pub fn critic_objective(
        &self,
        store: &ParameterStore,
        batch: &[Transition],
        y: &Tensor,
    ) -> Result<(f64, f64, Gradients)> {
        self.critic_objective_batch(store, &Batch::new(batch)?, y)
    }

    fn critic_objective_batch(
        &self,
        store: &ParameterStore,
        batch: &Batch,
        y: &Tensor,
    ) -> Result<(f64, f64, Gradients)> {
        let mut tape = Tape::new(store).freeze(HEADS_PREFIX);
        let s = tape.constant(batch.states.clone());
        let a = tape.constant(action_features(&self.disc, &batch.actions));
        let q = self.qd.forward(&mut tape, s, a)?;
        let td = tape.mse_to(q, y.clone())?;
        let td_value = tape.value(td).item();
        let mut loss = tape.scale(td, self.cfg.td_multiplier);
        if self.cfg.drag_coefficient > 0.0 {
            let sq = tape.square(q);
            let drag = tape.mean(sq);
            let drag = tape.scale(drag, self.cfg.drag_coefficient);
            loss = tape.add(loss, drag)?;
        }
        let total = tape.value(loss).item();
        Ok((td_value, total, tape.backward(loss)?))
    }

    /// Head objective: base matching at the greedy action, consistency between
    /// consecutive heads along replayed prefixes, and the penalty tying online
    /// heads to their targets. The critic in `store` is held fixed.
    pub fn heads_objective(
        &self,
        store: &ParameterStore,
        batch: &[Transition],
    ) -> Result<(HeadLosses, Gradients)> {
        self.heads_objective_batch(store, &Batch::new(batch)?)
    }

    fn heads_objective_batch(
        &self,
        store: &ParameterStore,
        batch: &Batch,
    ) -> Result<(HeadLosses, Gradients)> {
        let n = self.disc.dims();
        let m = batch.len();
        let cfg = &self.cfg;
        let replay_bins: Vec<Vec<usize>> =
            batch.actions.iter().map(|a| self.disc.encode(a)).collect();
        let pi_bins = self.greedy_bins_with(store, &batch.states)?;
        let qd_pi = self.double_q_with(store, &batch.states, &self.decode(&pi_bins))?;

        let mut ttape = Tape::new(&self.target);
        let ts = ttape.constant(batch.states.clone());
        let target_vars = self
            .heads
            .heads(&mut ttape, &self.disc, ts, &replay_bins, n)?;
        let target_vals: Vec<Tensor> = target_vars
            .iter()
            .map(|&v| ttape.value(v).clone())
            .collect();

        let mut tape = Tape::new(store).freeze(QD_PREFIX);
        let s = tape.constant(batch.states.clone());
        let mut losses = HeadLosses::default();

        let last = self.heads.head(&mut tape, &self.disc, s, &pi_bins, n - 1)?;
        let last_idx: Vec<usize> = pi_bins.iter().map(|b| b[n - 1]).collect();
        let qn_pi = tape.gather(last, &last_idx)?;
        let mut base = tape.mse_to(qn_pi, Tensor::matrix(m, 1, qd_pi)?)?;

        let online_vals = self
            .heads
            .heads(&mut tape, &self.disc, s, &replay_bins, n)?;
        if cfg.base_replay_multiplier > 0.0 {
            let idx: Vec<usize> = replay_bins.iter().map(|b| b[n - 1]).collect();
            let qn_a = tape.gather(online_vals[n - 1], &idx)?;
            let qd_a = self.double_q_with(store, &batch.states, &batch.actions)?;
            let extra = tape.mse_to(qn_a, Tensor::matrix(m, 1, qd_a)?)?;
            let extra = tape.scale(extra, cfg.base_replay_multiplier);
            base = tape.add(base, extra)?;
        }
        losses.base = tape.value(base).item();
        let mut total = tape.scale(base, cfg.base_multiplier);

        let mut inner: Option<Var> = None;
        for i in 0..n - 1 {
            let idx: Vec<usize> = replay_bins.iter().map(|b| b[i]).collect();
            let qi = tape.gather(online_vals[i], &idx)?;
            let next = &target_vals[i + 1];
            let maxes: Vec<f64> = (0..m)
                .map(|r| {
                    next.row(r)
                        .iter()
                        .copied()
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            let li = tape.mse_to(qi, Tensor::matrix(m, 1, maxes)?)?;
            losses.inner_sum += tape.value(li).item();
            inner = Some(match inner {
                Some(acc) => tape.add(acc, li)?,
                None => li,
            });
        }
        if let Some(inner) = inner {
            let inner = tape.scale(inner, cfg.tree_multiplier);
            total = tape.add(total, inner)?;
        }

        if cfg.greedy_penalty > 0.0 {
            let mut penalty: Option<Var> = None;
            for (i, &v) in online_vals.iter().enumerate() {
                let p = tape.mse_to(v, target_vals[i].clone())?;
                penalty = Some(match penalty {
                    Some(acc) => tape.add(acc, p)?,
                    None => p,
                });
            }
            let penalty = penalty.expect("at least one head");
            let penalty = tape.scale(penalty, 1.0 / n as f64);
            losses.greedy_penalty = tape.value(penalty).item();
            let weighted = tape.scale(penalty, cfg.greedy_penalty);
            total = tape.add(total, weighted)?;
        }
        losses.total = tape.value(total).item();
        Ok((losses, tape.backward(total)?))
    }
}

impl Agent for Sdqn {
    fn kind(&self) -> AgentKind {
        AgentKind::Sdqn
    }

    fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    fn act_greedy(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let bins = self.greedy_bins(&one_obs(obs, self.obs_dim)?)?;
        Ok(self.disc.decode(&bins[0]))
    }

    fn act_explore(&mut self, obs: &[f64], step: u64, rng: &mut Rng) -> Result<Vec<f64>> {
        let sched = &self.cfg.exploration;
        let s = one_obs(obs, self.obs_dim)?;
        match sched.kind {
            ExplorationKind::Epsilon | ExplorationKind::Boltzmann => {
                let bins =
                    decode_sequential(&self.heads, &self.online, &self.disc, &s, |_, _, q| {
                        sched.choose_bin(q, step, rng)
                    })?;
                Ok(self.disc.decode(&bins[0]))
            }
            _ => {
                let greedy = self.disc.decode(&self.greedy_bins(&s)?[0]);
                let (lo, hi) = self.disc.bounds();
                Ok(sched.perturb(&greedy, lo, hi, step, None, rng))
            }
        }
    }

    fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut Rng) -> Result<LossReport> {
        let batch = Batch::new(&buffer.sample_batch(self.cfg.batch_size, rng)?)?;

        let y = self.td_targets_batch(&batch)?;
        let (td, _, mut grads) = self.critic_objective_batch(&self.online, &batch, &y)?;
        finish_gradients(&mut grads, &self.online, &self.cfg);
        self.opt_td.step(&mut self.online, &grads)?;

        let (heads, mut grads) = self.heads_objective_batch(&self.online, &batch)?;
        finish_gradients(&mut grads, &self.online, &self.cfg);
        self.opt_max.step(&mut self.online, &grads)?;

        polyak_update(
            &mut self.target,
            &self.online,
            self.cfg.target_moving_average,
        )?;
        Ok(LossReport {
            td,
            inner_sum: heads.inner_sum,
            base: heads.base,
            policy: heads.greedy_penalty,
        })
    }

    fn q_estimate(&self, obs: &[f64], action: &[f64]) -> Result<QEstimate> {
        let s = one_obs(obs, self.obs_dim)?;
        let double = self.double_q_with(&self.online, &s, &[action.to_vec()])?[0];
        let bins = self.disc.encode(action);
        let n = bins.len();
        let mut tape = Tape::new(&self.online);
        let sv = tape.constant(s);
        let v = self.heads.head(
            &mut tape,
            &self.disc,
            sv,
            std::slice::from_ref(&bins),
            n - 1,
        )?;
        Ok(QEstimate {
            double,
            sequential: Some(tape.value(v).data()[bins[n - 1]]),
        })
    }

    fn stores(&self) -> (&ParameterStore, &ParameterStore) {
        (&self.online, &self.target)
    }

    fn stores_mut(&mut self) -> (&mut ParameterStore, &mut ParameterStore) {
        (&mut self.online, &mut self.target)
    }
}
