//! Autoregressive softmax policy trained off-policy with REINFORCE against
//! the critic, using the mean critic value of fresh samples as a baseline.

use rand::Rng as _;

use crate::autodiff::{
    log_sum_exp, polyak_update, softmax_in_place, AdamState, Gradients, ParameterStore, Tape,
    Tensor, Var,
};
use crate::discretize::Discretizer;
use crate::env::{EnvSpec, Transition};
use crate::error::{Error, Result};
use crate::explore::{sample_categorical, ExplorationKind};
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
const POLICY: &str = "policy/";

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(logits);
    logits.iter().map(|l| l - z).collect()
}

/// Ancestral sample from an autoregressive policy. `logits(prefix)` gives the
/// logits of the next dimension. Returns the bins and their total log-probability.
pub fn prob_sample_action(
    n: usize,
    mut logits: impl FnMut(&[usize]) -> Result<Vec<f64>>,
    rng: &mut Rng,
) -> Result<(Vec<usize>, f64)> {
    let mut bins = Vec::with_capacity(n);
    let mut log_prob = 0.0;
    for _ in 0..n {
        let l = logits(&bins)?;
        let mut p = l.clone();
        softmax_in_place(&mut p);
        let k = sample_categorical(&p, rng);
        log_prob += log_softmax(&l)[k];
        bins.push(k);
    }
    Ok((bins, log_prob))
}

/// One REINFORCE estimate of the gradient of `-E[Q(s, a)]` with respect to
/// the logits of every head visited by the sampled action.
///
/// The credited action is drawn from the policy and the baseline is the mean
/// value of `k` further independent draws. Each entry is the prefix the head
/// was conditioned on and `-(onehot(a_i) - p_i) * (Q(a) - G)`.
pub fn reinforce_grad(
    n: usize,
    mut logits: impl FnMut(&[usize]) -> Result<Vec<f64>>,
    mut q: impl FnMut(&[usize]) -> Result<f64>,
    k: usize,
    rng: &mut Rng,
) -> Result<Vec<(Vec<usize>, Vec<f64>)>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 baseline samples, got {k}"
        )));
    }
    let (bins, _) = prob_sample_action(n, &mut logits, rng)?;
    let mut baseline = 0.0;
    for _ in 0..k {
        let (other, _) = prob_sample_action(n, &mut logits, rng)?;
        baseline += q(&other)?;
    }
    baseline /= k as f64;
    let advantage = q(&bins)? - baseline;
    (0..n)
        .map(|i| {
            let prefix = bins[..i].to_vec();
            let mut p = logits(&prefix)?;
            softmax_in_place(&mut p);
            let g = p
                .iter()
                .enumerate()
                .map(|(j, &pj)| -((if j == bins[i] { 1.0 } else { 0.0 }) - pj) * advantage)
                .collect();
            Ok((prefix, g))
        })
        .collect()
}

pub struct ProbSdqn {
    cfg: AgentConfig,
    obs_dim: usize,
    disc: Discretizer,
    online: ParameterStore,
    target: ParameterStore,
    policy: HeadNet,
    qd: DoubleQNet,
    opt_td: AdamState,
    opt_policy: AdamState,
}

impl ProbSdqn {
    pub fn new(spec: &EnvSpec, cfg: AgentConfig, rng: &mut Rng) -> Result<Self> {
        let disc = Discretizer::new(spec.action_low.clone(), spec.action_high.clone(), cfg.bins)?;
        let mut online = ParameterStore::new();
        let policy = HeadNet::lstm(&mut online, POLICY, spec.observation_dim, &cfg, rng)?;
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
            opt_policy: AdamState::new(cfg.lr_maxing).with_schedule(cfg.lr_schedule_maxing),
            target: online.clone(),
            online,
            policy,
            qd,
            disc,
            obs_dim: spec.observation_dim,
            cfg,
        })
    }

    /// Most likely bins (approximately, by beam search over log-probabilities).
    pub fn beam_decode(&self, states: &Tensor, width: usize) -> Result<Vec<Vec<usize>>> {
        let n = self.disc.dims();
        (0..states.rows())
            .map(|r| {
                let s = Tensor::matrix(1, states.cols(), states.row(r).to_vec())?;
                let (bins, _) = beam_search(n, self.disc.bins(), width, |prefixes| {
                    let mut tape = Tape::new(&self.online);
                    let sv = tape.constant(repeat_rows(&s, prefixes.len()));
                    let v =
                        self.policy
                            .head(&mut tape, &self.disc, sv, prefixes, prefixes[0].len())?;
                    let lp = tape.log_softmax(v);
                    Ok(rows_of(tape.value(lp)))
                })?;
                Ok(bins)
            })
            .collect()
    }

    /// Per-row ancestral samples from the current policy.
    pub fn sample_bins(&self, states: &Tensor, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
        decode_sequential(
            &self.policy,
            &self.online,
            &self.disc,
            states,
            |_, _, logits| {
                let mut p = logits.to_vec();
                softmax_in_place(&mut p);
                Ok(sample_categorical(&p, rng))
            },
        )
    }

    fn decode(&self, bins: &[Vec<usize>]) -> Vec<Vec<f64>> {
        bins.iter().map(|b| self.disc.decode(b)).collect()
    }

    pub fn double_q(&self, states: &Tensor, bins: &[Vec<usize>]) -> Result<Vec<f64>> {
        self.qd.eval(
            &self.online,
            states,
            action_features(&self.disc, &self.decode(bins)),
        )
    }

    /// Probabilities of each head along a prefix, for one state.
    pub fn head_probabilities(&self, obs: &[f64], bins: &[usize]) -> Result<Vec<Vec<f64>>> {
        let s = one_obs(obs, self.obs_dim)?;
        let mut tape = Tape::new(&self.online);
        let sv = tape.constant(s);
        let outs = self.policy.heads(
            &mut tape,
            &self.disc,
            sv,
            &[bins.to_vec()],
            self.disc.dims(),
        )?;
        Ok(outs
            .iter()
            .map(|&o| {
                let mut p = tape.value(o).data().to_vec();
                softmax_in_place(&mut p);
                p
            })
            .collect())
    }

    pub fn td_targets(&self, batch: &[Transition]) -> Result<Tensor> {
        self.td_targets_batch(&Batch::new(batch)?)
    }

    fn td_targets_batch(&self, batch: &Batch) -> Result<Tensor> {
        let next = self.beam_decode(&batch.next_states, self.cfg.train_beams)?;
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

    /// Surrogate `-mean(A * log pi(a|s)) - c * mean entropy` for fixed sampled
    /// bins and advantages. Its gradient is the REINFORCE estimate plus the
    /// entropy bonus.
    pub fn surrogate_objective(
        &self,
        store: &ParameterStore,
        states: &Tensor,
        bins: &[Vec<usize>],
        advantages: &[f64],
    ) -> Result<(f64, Gradients)> {
        let n = self.disc.dims();
        let m = states.rows();
        let mut tape = Tape::new(store).freeze(QD);
        let s = tape.constant(states.clone());
        let outs = self.policy.heads(&mut tape, &self.disc, s, bins, n)?;
        let mut log_prob: Option<Var> = None;
        let mut entropy: Option<Var> = None;
        for (i, &o) in outs.iter().enumerate() {
            let lp = tape.log_softmax(o);
            let idx: Vec<usize> = bins.iter().map(|b| b[i]).collect();
            let chosen = tape.gather(lp, &idx)?;
            log_prob = Some(match log_prob {
                Some(acc) => tape.add(acc, chosen)?,
                None => chosen,
            });
            if self.cfg.entropy_coefficient > 0.0 {
                let p = tape.softmax(o);
                let plp = tape.mul(p, lp)?;
                let neg_h = tape.sum_cols(plp);
                entropy = Some(match entropy {
                    Some(acc) => tape.add(acc, neg_h)?,
                    None => neg_h,
                });
            }
        }
        let adv = tape.constant(Tensor::matrix(m, 1, advantages.to_vec())?);
        let weighted = tape.mul(log_prob.expect("at least one dimension"), adv)?;
        let mean = tape.mean(weighted);
        let mut loss = tape.scale(mean, -1.0);
        if let Some(neg_h) = entropy {
            // neg_h holds sum_i sum_k p log p = -(sum of head entropies).
            let m_neg_h = tape.mean(neg_h);
            let bonus = tape.scale(m_neg_h, self.cfg.entropy_coefficient / n as f64);
            loss = tape.add(loss, bonus)?;
        }
        let v = tape.value(loss).item();
        Ok((v, tape.backward(loss)?))
    }
}

impl Agent for ProbSdqn {
    fn kind(&self) -> AgentKind {
        AgentKind::Prob
    }

    fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    fn act_greedy(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let bins = self.beam_decode(&one_obs(obs, self.obs_dim)?, self.cfg.eval_beams)?;
        Ok(self.disc.decode(&bins[0]))
    }

    fn act_explore(&mut self, obs: &[f64], step: u64, rng: &mut Rng) -> Result<Vec<f64>> {
        let sched = &self.cfg.exploration;
        let s = one_obs(obs, self.obs_dim)?;
        match sched.kind {
            ExplorationKind::Epsilon => {
                let eps = sched.value(step);
                let bins = decode_sequential(
                    &self.policy,
                    &self.online,
                    &self.disc,
                    &s,
                    |_, _, logits| {
                        if rng.random::<f64>() < eps {
                            return Ok(rng.random_range(0..logits.len()));
                        }
                        let mut p = logits.to_vec();
                        softmax_in_place(&mut p);
                        Ok(sample_categorical(&p, rng))
                    },
                )?;
                Ok(self.disc.decode(&bins[0]))
            }
            ExplorationKind::Boltzmann => {
                let bins = decode_sequential(
                    &self.policy,
                    &self.online,
                    &self.disc,
                    &s,
                    |_, _, logits| sched.choose_bin(&log_softmax(logits), step, rng),
                )?;
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

        let y = self.td_targets_batch(&batch)?;
        let (td, mut grads) = {
            let mut tape = Tape::new(&self.online).freeze(POLICY);
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

        let bins = self.sample_bins(&batch.states, rng)?;
        let q = self.double_q(&batch.states, &bins)?;
        let mut baseline = vec![0.0; batch.len()];
        for _ in 0..self.cfg.baseline_samples {
            let other = self.sample_bins(&batch.states, rng)?;
            for (b, v) in baseline
                .iter_mut()
                .zip(self.double_q(&batch.states, &other)?)
            {
                *b += v;
            }
        }
        let k = self.cfg.baseline_samples as f64;
        let advantages: Vec<f64> = q.iter().zip(&baseline).map(|(q, b)| q - b / k).collect();
        let (policy_loss, mut grads) =
            self.surrogate_objective(&self.online, &batch.states, &bins, &advantages)?;
        finish_gradients(&mut grads, &self.online, &self.cfg);
        self.opt_policy.step(&mut self.online, &grads)?;

        polyak_update(
            &mut self.target,
            &self.online,
            self.cfg.target_moving_average,
        )?;
        Ok(LossReport {
            td,
            inner_sum: 0.0,
            base: 0.0,
            policy: policy_loss,
        })
    }

    fn q_estimate(&self, obs: &[f64], action: &[f64]) -> Result<QEstimate> {
        let s = one_obs(obs, self.obs_dim)?;
        let double = self.qd.eval(
            &self.online,
            &s,
            action_features(&self.disc, &[action.to_vec()]),
        )?[0];
        Ok(QEstimate {
            double,
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
