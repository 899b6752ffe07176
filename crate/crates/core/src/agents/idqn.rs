//! Independent per-dimension heads: `Q(s, a) = mean_i F^i(s, a^i)`, which
//! makes the joint argmax separable.

use crate::autodiff::{
    polyak_update, Activation, AdamState, Gradients, Mlp, ParameterStore, Tape, Tensor, Var,
};
use crate::discretize::Discretizer;
use crate::env::{EnvSpec, Transition};
use crate::error::Result;
use crate::explore::{argmax, ExplorationKind};
use crate::replay::ReplayBuffer;
use crate::Rng;

use super::{
    finish_gradients, one_obs, Agent, AgentConfig, AgentKind, Batch, LossReport, QEstimate,
};

/// Per-dimension argmax and the decomposed value there.
pub fn idqn_eval_argmax(heads: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let bins: Vec<usize> = heads.iter().map(|h| argmax(h)).collect();
    let value = heads.iter().zip(&bins).map(|(h, &k)| h[k]).sum::<f64>() / heads.len() as f64;
    (value, bins)
}

pub struct Idqn {
    cfg: AgentConfig,
    obs_dim: usize,
    disc: Discretizer,
    online: ParameterStore,
    target: ParameterStore,
    heads: Vec<Mlp>,
    opt: AdamState,
}

impl Idqn {
    pub fn new(spec: &EnvSpec, cfg: AgentConfig, rng: &mut Rng) -> Result<Self> {
        let disc = Discretizer::new(spec.action_low.clone(), spec.action_high.clone(), cfg.bins)?;
        let mut online = ParameterStore::new();
        let heads = (0..spec.action_dim)
            .map(|i| {
                Mlp::new(
                    &mut online,
                    &format!("head{i}"),
                    &[spec.observation_dim, cfg.hidden_size, cfg.bins],
                    Activation::Relu,
                    Activation::None,
                    rng,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            opt: AdamState::new(cfg.lr_td).with_schedule(cfg.lr_schedule_td),
            target: online.clone(),
            online,
            heads,
            disc,
            obs_dim: spec.observation_dim,
            cfg,
        })
    }

    fn head_values(&self, store: &ParameterStore, states: &Tensor) -> Result<Vec<Tensor>> {
        let mut tape = Tape::new(store);
        let s = tape.constant(states.clone());
        self.heads
            .iter()
            .map(|h| {
                let v = h.forward(&mut tape, s)?;
                Ok(tape.value(v).clone())
            })
            .collect()
    }

    /// `F^i(s, .)` for one state.
    pub fn heads_for(&self, obs: &[f64]) -> Result<Vec<Vec<f64>>> {
        let vals = self.head_values(&self.online, &one_obs(obs, self.obs_dim)?)?;
        Ok(vals.into_iter().map(|t| t.into_data()).collect())
    }

    pub fn td_targets(&self, batch: &[Transition]) -> Result<Tensor> {
        self.td_targets_batch(&Batch::new(batch)?)
    }

    fn td_targets_batch(&self, batch: &Batch) -> Result<Tensor> {
        let vals = self.head_values(&self.target, &batch.next_states)?;
        let next: Vec<f64> = (0..batch.len())
            .map(|r| {
                let heads: Vec<Vec<f64>> = vals.iter().map(|t| t.row(r).to_vec()).collect();
                idqn_eval_argmax(&heads).0
            })
            .collect();
        batch.td_targets(&next)
    }

    /// `mse(mean_i F^i(s, a^i), y)` for fixed targets.
    pub fn td_objective(
        &self,
        store: &ParameterStore,
        batch: &[Transition],
        y: &Tensor,
    ) -> Result<(f64, Gradients)> {
        self.td_objective_batch(store, &Batch::new(batch)?, y)
    }

    fn td_objective_batch(
        &self,
        store: &ParameterStore,
        batch: &Batch,
        y: &Tensor,
    ) -> Result<(f64, Gradients)> {
        let mut tape = Tape::new(store);
        let s = tape.constant(batch.states.clone());
        let mut total: Option<Var> = None;
        for (i, h) in self.heads.iter().enumerate() {
            let v = h.forward(&mut tape, s)?;
            let idx: Vec<usize> = batch
                .actions
                .iter()
                .map(|a| self.disc.to_bin(a[i], i))
                .collect();
            let g = tape.gather(v, &idx)?;
            total = Some(match total {
                Some(t) => tape.add(t, g)?,
                None => g,
            });
        }
        let q = tape.scale(
            total.expect("at least one head"),
            1.0 / self.heads.len() as f64,
        );
        let loss = tape.mse_to(q, y.clone())?;
        let v = tape.value(loss).item();
        Ok((v, tape.backward(loss)?))
    }
}

impl Agent for Idqn {
    fn kind(&self) -> AgentKind {
        AgentKind::Idqn
    }

    fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    fn act_greedy(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let (_, bins) = idqn_eval_argmax(&self.heads_for(obs)?);
        Ok(self.disc.decode(&bins))
    }

    fn act_explore(&mut self, obs: &[f64], step: u64, rng: &mut Rng) -> Result<Vec<f64>> {
        let sched = &self.cfg.exploration;
        let heads = self.heads_for(obs)?;
        match sched.kind {
            ExplorationKind::Epsilon | ExplorationKind::Boltzmann => {
                let bins = heads
                    .iter()
                    .map(|h| sched.choose_bin(h, step, rng))
                    .collect::<Result<Vec<_>>>()?;
                Ok(self.disc.decode(&bins))
            }
            _ => {
                let greedy = self.disc.decode(&idqn_eval_argmax(&heads).1);
                let (lo, hi) = self.disc.bounds();
                Ok(sched.perturb(&greedy, lo, hi, step, None, rng))
            }
        }
    }

    fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut Rng) -> Result<LossReport> {
        let batch = Batch::new(&buffer.sample_batch(self.cfg.batch_size, rng)?)?;
        let y = self.td_targets_batch(&batch)?;
        let (td, mut grads) = self.td_objective_batch(&self.online, &batch, &y)?;
        finish_gradients(&mut grads, &self.online, &self.cfg);
        self.opt.step(&mut self.online, &grads)?;
        polyak_update(
            &mut self.target,
            &self.online,
            self.cfg.target_moving_average,
        )?;
        Ok(LossReport {
            td,
            ..LossReport::default()
        })
    }

    fn q_estimate(&self, obs: &[f64], action: &[f64]) -> Result<QEstimate> {
        let heads = self.heads_for(obs)?;
        let q = heads
            .iter()
            .enumerate()
            .map(|(i, h)| h[self.disc.to_bin(action[i], i)])
            .sum::<f64>()
            / heads.len() as f64;
        Ok(QEstimate {
            double: q,
            sequential: Some(q),
        })
    }

    fn stores(&self) -> (&ParameterStore, &ParameterStore) {
        (&self.online, &self.target)
    }

    fn stores_mut(&mut self) -> (&mut ParameterStore, &mut ParameterStore) {
        (&mut self.online, &mut self.target)
    }
}
