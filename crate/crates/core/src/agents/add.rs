//! Additive decomposition: `Q(s, a) = sum_i F^i(s, a^{1:i})` from a tied
//! LSTM, maximized by beam search and regressed onto the critic.

use crate::autodiff::{polyak_update, AdamState, Gradients, ParameterStore, Tape, Tensor, Var};
use crate::discretize::Discretizer;
use crate::env::{EnvSpec, Transition};
use crate::error::Result;
use crate::explore::ExplorationKind;
use crate::replay::ReplayBuffer;
use crate::Rng;

use super::beam::beam_search;
use super::nets::{
    action_feature_width, action_features, decode_sequential, repeat_rows, rows_of, DoubleQNet,
    HeadNet,
};
use super::{
    finish_gradients, one_obs, Agent, AgentConfig, AgentKind, Batch, LossReport, QEstimate,
};

const QD: &str = "qd/";
const HEADS: &str = "heads/";

pub struct AddSdqn {
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

impl AddSdqn {
    pub fn new(spec: &EnvSpec, cfg: AgentConfig, rng: &mut Rng) -> Result<Self> {
        let disc = Discretizer::new(spec.action_low.clone(), spec.action_high.clone(), cfg.bins)?;
        let mut online = ParameterStore::new();
        let heads = HeadNet::lstm(&mut online, HEADS, spec.observation_dim, &cfg, rng)?;
        let qd = DoubleQNet::new(
            &mut online,
            QD,
            spec.observation_dim,
            action_feature_width(spec.action_dim, cfg.bins),
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

    /// Beam-decoded bins and summed score for each state row.
    pub fn beam_decode(
        &self,
        store: &ParameterStore,
        states: &Tensor,
        width: usize,
    ) -> Result<Vec<(Vec<usize>, f64)>> {
        let n = self.disc.dims();
        (0..states.rows())
            .map(|r| {
                let s = Tensor::matrix(1, states.cols(), states.row(r).to_vec())?;
                beam_search(n, self.disc.bins(), width, |prefixes| {
                    let mut tape = Tape::new(store);
                    let sv = tape.constant(repeat_rows(&s, prefixes.len()));
                    let i = prefixes[0].len();
                    let v = self.heads.head(&mut tape, &self.disc, sv, prefixes, i)?;
                    Ok(rows_of(tape.value(v)))
                })
            })
            .collect()
    }

    fn decode(&self, bins: &[Vec<usize>]) -> Vec<Vec<f64>> {
        bins.iter().map(|b| self.disc.decode(b)).collect()
    }

    /// Summed decomposition at given bins, on a tape.
    fn summed(&self, tape: &mut Tape<'_>, states: Var, bins: &[Vec<usize>]) -> Result<Var> {
        let n = self.disc.dims();
        let outs = self.heads.heads(tape, &self.disc, states, bins, n)?;
        let mut total: Option<Var> = None;
        for (i, &o) in outs.iter().enumerate() {
            let idx: Vec<usize> = bins.iter().map(|b| b[i]).collect();
            let g = tape.gather(o, &idx)?;
            total = Some(match total {
                Some(t) => tape.add(t, g)?,
                None => g,
            });
        }
        Ok(total.expect("at least one dimension"))
    }

    pub fn td_targets(&self, batch: &[Transition]) -> Result<Tensor> {
        self.td_targets_batch(&Batch::new(batch)?)
    }

    fn td_targets_batch(&self, batch: &Batch) -> Result<Tensor> {
        let next: Vec<Vec<usize>> = self
            .beam_decode(&self.online, &batch.next_states, self.cfg.train_beams)?
            .into_iter()
            .map(|(b, _)| b)
            .collect();
        let store = if self.cfg.use_target_for_qd {
            &self.target
        } else {
            &self.online
        };
        let q = self.qd.eval(
            store,
            &batch.next_states,
            action_features(&self.disc, &self.decode(&next)),
        )?;
        batch.td_targets(&q)
    }

    fn critic_step(&mut self, batch: &Batch) -> Result<f64> {
        let y = self.td_targets_batch(batch)?;
        let (td, mut grads) = {
            let mut tape = Tape::new(&self.online).freeze(HEADS);
            let s = tape.constant(batch.states.clone());
            let a = tape.constant(action_features(&self.disc, &batch.actions));
            let q = self.qd.forward(&mut tape, s, a)?;
            let td = tape.mse_to(q, y)?;
            let v = tape.value(td).item();
            let loss = tape.scale(td, self.cfg.td_multiplier);
            (v, tape.backward(loss)?)
        };
        finish_gradients(&mut grads, &self.online, &self.cfg);
        self.opt_td.step(&mut self.online, &grads)?;
        Ok(td)
    }

    /// Matching loss `mean((Q^D(s, pi(s)) - sum_i F^i(s, pi^{1:i}(s)))^2)` with
    /// the critic held fixed, and its gradients.
    pub fn matching_objective(
        &self,
        store: &ParameterStore,
        batch: &[Transition],
    ) -> Result<(f64, Gradients)> {
        self.matching_objective_batch(store, &Batch::new(batch)?)
    }

    fn matching_objective_batch(
        &self,
        store: &ParameterStore,
        batch: &Batch,
    ) -> Result<(f64, Gradients)> {
        let pi: Vec<Vec<usize>> = self
            .beam_decode(store, &batch.states, self.cfg.train_beams)?
            .into_iter()
            .map(|(b, _)| b)
            .collect();
        let qd = self.qd.eval(
            store,
            &batch.states,
            action_features(&self.disc, &self.decode(&pi)),
        )?;
        let mut tape = Tape::new(store).freeze(QD);
        let s = tape.constant(batch.states.clone());
        let sum = self.summed(&mut tape, s, &pi)?;
        let loss = tape.mse_to(sum, Tensor::matrix(batch.len(), 1, qd)?)?;
        let v = tape.value(loss).item();
        Ok((v, tape.backward(loss)?))
    }
}

impl Agent for AddSdqn {
    fn kind(&self) -> AgentKind {
        AgentKind::Add
    }

    fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    fn act_greedy(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let s = one_obs(obs, self.obs_dim)?;
        let (bins, _) = self
            .beam_decode(&self.online, &s, self.cfg.eval_beams)?
            .remove(0);
        Ok(self.disc.decode(&bins))
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
                let greedy = self.act_greedy(obs)?;
                let (lo, hi) = self.disc.bounds();
                Ok(sched.perturb(&greedy, lo, hi, step, None, rng))
            }
        }
    }

    fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut Rng) -> Result<LossReport> {
        let batch = Batch::new(&buffer.sample_batch(self.cfg.batch_size, rng)?)?;
        let td = self.critic_step(&batch)?;
        let (matching, mut grads) = self.matching_objective_batch(&self.online, &batch)?;
        finish_gradients(&mut grads, &self.online, &self.cfg);
        self.opt_max.step(&mut self.online, &grads)?;
        polyak_update(
            &mut self.target,
            &self.online,
            self.cfg.target_moving_average,
        )?;
        Ok(LossReport {
            td,
            inner_sum: 0.0,
            base: matching,
            policy: 0.0,
        })
    }

    fn q_estimate(&self, obs: &[f64], action: &[f64]) -> Result<QEstimate> {
        let s = one_obs(obs, self.obs_dim)?;
        let double = self.qd.eval(
            &self.online,
            &s,
            action_features(&self.disc, &[action.to_vec()]),
        )?[0];
        let mut tape = Tape::new(&self.online);
        let sv = tape.constant(s);
        let sum = self.summed(&mut tape, sv, &[self.disc.encode(action)])?;
        Ok(QEstimate {
            double,
            sequential: Some(tape.value(sum).item()),
        })
    }

    fn stores(&self) -> (&ParameterStore, &ParameterStore) {
        (&self.online, &self.target)
    }

    fn stores_mut(&mut self) -> (&mut ParameterStore, &mut ParameterStore) {
        (&mut self.online, &mut self.target)
    }
}
