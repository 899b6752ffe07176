//! Normalized advantage functions: `Q(s, a) = V(s) - |L(s)^T (a - mu(s))|^2`
//! with `L` lower triangular, so the greedy action is `mu(s)` in closed form.

use crate::autodiff::{
    polyak_update, Activation, AdamState, Gradients, Linear, Mlp, ParameterStore, Tape, Tensor, Var,
};
use crate::env::{EnvSpec, Transition};
use crate::error::{dim_err, Result};
use crate::explore::{ExplorationKind, OuNoise};
use crate::replay::ReplayBuffer;
use crate::Rng;

use super::nets::squash_to_bounds;
use super::{
    finish_gradients, one_obs, Agent, AgentConfig, AgentKind, Batch, LossReport, QEstimate,
};

const OU_DT: f64 = 1.0;

/// Network outputs for one state. `l` is lower triangular with a positive
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct NafOutput {
    pub v: f64,
    pub mu: Vec<f64>,
    pub l: Vec<Vec<f64>>,
}

/// `v - |l^T (a - mu)|^2`.
pub fn naf_q(v: f64, mu: &[f64], l: &[Vec<f64>], a: &[f64]) -> f64 {
    let n = mu.len();
    let d: Vec<f64> = a.iter().zip(mu).map(|(a, m)| a - m).collect();
    let quad: f64 = (0..n)
        .map(|j| {
            let z: f64 = (j..n).map(|i| l[i][j] * d[i]).sum();
            z * z
        })
        .sum();
    v - quad
}

/// Index of entry `(i, j)`, `j <= i`, in the packed lower triangle.
fn tri_index(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

pub struct Naf {
    cfg: AgentConfig,
    obs_dim: usize,
    low: Vec<f64>,
    high: Vec<f64>,
    online: ParameterStore,
    target: ParameterStore,
    trunk: Mlp,
    v_head: Linear,
    mu_head: Linear,
    l_head: Linear,
    opt: AdamState,
    ou: OuNoise,
}

struct Heads {
    v: Var,
    mu: Var,
    /// Packed lower triangle with the diagonal already exponentiated.
    l: Vec<Var>,
}

impl Naf {
    pub fn new(spec: &EnvSpec, cfg: AgentConfig, rng: &mut Rng) -> Result<Self> {
        let n = spec.action_dim;
        let h = cfg.hidden_size;
        let mut online = ParameterStore::new();
        let trunk = Mlp::new(
            &mut online,
            "naf/trunk",
            &[spec.observation_dim, h, h],
            Activation::Relu,
            Activation::Relu,
            rng,
        )?;
        let v_head = Linear::new(&mut online, "naf/v", h, 1, rng)?;
        let mu_head = Linear::new(&mut online, "naf/mu", h, n, rng)?;
        let l_head = Linear::new(&mut online, "naf/l", h, n * (n + 1) / 2, rng)?;
        let ex = &cfg.exploration;
        Ok(Self {
            ou: OuNoise::new(n, ex.ou_damping, ex.ou_std, OU_DT),
            opt: AdamState::new(cfg.learning_rate),
            target: online.clone(),
            online,
            trunk,
            v_head,
            mu_head,
            l_head,
            low: spec.action_low.clone(),
            high: spec.action_high.clone(),
            obs_dim: spec.observation_dim,
            cfg,
        })
    }

    fn heads(&self, tape: &mut Tape<'_>, s: Var) -> Result<Heads> {
        let n = self.low.len();
        let h = self.trunk.forward(tape, s)?;
        let v = self.v_head.forward(tape, h)?;
        let raw_mu = self.mu_head.forward(tape, h)?;
        let mu = squash_to_bounds(tape, raw_mu, &self.low, &self.high)?;
        let packed = self.l_head.forward(tape, h)?;
        let mut l = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                let e = tape.slice(packed, tri_index(i, j), 1)?;
                l.push(if i == j { tape.exp(e) } else { e });
            }
        }
        Ok(Heads { v, mu, l })
    }

    fn q_on_tape(&self, tape: &mut Tape<'_>, heads: &Heads, actions: Var) -> Result<Var> {
        let n = self.low.len();
        let d = tape.sub(actions, heads.mu)?;
        let di: Vec<Var> = (0..n).map(|i| tape.slice(d, i, 1)).collect::<Result<_>>()?;
        let mut quad: Option<Var> = None;
        for j in 0..n {
            let mut z: Option<Var> = None;
            for i in j..n {
                let t = tape.mul(heads.l[tri_index(i, j)], di[i])?;
                z = Some(match z {
                    Some(z) => tape.add(z, t)?,
                    None => t,
                });
            }
            let sq = tape.square(z.expect("i = j term"));
            quad = Some(match quad {
                Some(q) => tape.add(q, sq)?,
                None => sq,
            });
        }
        tape.sub(heads.v, quad.expect("at least one dimension"))
    }

    /// Network outputs for one state.
    pub fn output(&self, obs: &[f64]) -> Result<NafOutput> {
        self.output_with(&self.online, obs)
    }

    fn output_with(&self, store: &ParameterStore, obs: &[f64]) -> Result<NafOutput> {
        let n = self.low.len();
        let mut tape = Tape::new(store);
        let s = tape.constant(one_obs(obs, self.obs_dim)?);
        let h = self.heads(&mut tape, s)?;
        let mut l = vec![vec![0.0; n]; n];
        for (i, row) in l.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate().take(i + 1) {
                *x = tape.value(h.l[tri_index(i, j)]).item();
            }
        }
        Ok(NafOutput {
            v: tape.value(h.v).item(),
            mu: tape.value(h.mu).data().to_vec(),
            l,
        })
    }

    fn values(&self, store: &ParameterStore, states: &Tensor) -> Result<Vec<f64>> {
        let mut tape = Tape::new(store);
        let s = tape.constant(states.clone());
        let h = self.heads(&mut tape, s)?;
        Ok(tape.value(h.v).data().to_vec())
    }

    pub fn td_targets(&self, batch: &[Transition]) -> Result<Tensor> {
        self.td_targets_batch(&Batch::new(batch)?)
    }

    fn td_targets_batch(&self, batch: &Batch) -> Result<Tensor> {
        batch.td_targets(&self.values(&self.target, &batch.next_states)?)
    }

    /// `mse(Q(s, a), y)` at replayed actions.
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
        let a = tape.constant(Tensor::from_rows(&batch.actions)?);
        let heads = self.heads(&mut tape, s)?;
        let q = self.q_on_tape(&mut tape, &heads, a)?;
        let loss = tape.mse_to(q, y.clone())?;
        let v = tape.value(loss).item();
        Ok((v, tape.backward(loss)?))
    }
}

impl Agent for Naf {
    fn kind(&self) -> AgentKind {
        AgentKind::Naf
    }

    fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    fn act_greedy(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.output(obs)?.mu)
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
        if action.len() != self.low.len() {
            return Err(dim_err("action", self.low.len(), action.len()));
        }
        let out = self.output(obs)?;
        Ok(QEstimate {
            double: naf_q(out.v, &out.mu, &out.l, action),
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_examples() {
        let l = vec![vec![2f64.sqrt()]];
        assert!((naf_q(2.0, &[0.3], &l, &[0.8]) - 1.5).abs() < 1e-12);
        assert_eq!(naf_q(2.0, &[0.3], &l, &[0.3]), 2.0);
    }

    #[test]
    fn packed_layout() {
        assert_eq!(tri_index(0, 0), 0);
        assert_eq!(tri_index(1, 0), 1);
        assert_eq!(tri_index(1, 1), 2);
        assert_eq!(tri_index(2, 0), 3);
        assert_eq!(tri_index(2, 2), 5);
    }
}
