//! The training loop: one environment step and one update per iteration,
//! with periodic greedy evaluation.

use rand::{Rng as _, SeedableRng};

use crate::agents::{build_agent, Agent, LossReport};
use crate::autodiff::Checkpoint;
use crate::env::{make_env, Environment, Transition};
use crate::error::{Error, Result};
use crate::replay::ReplayBuffer;
use crate::Rng;

use super::config::ExperimentConfig;
use super::metrics::MetricsRow;

/// Offset mixed into the seed of evaluation rollouts so that they never share
/// a stream with training, and every evaluation sees the same start states.
const EVAL_SEED_OFFSET: u64 = 0x5eed_e7a1;

pub struct TrainingOutcome {
    pub metrics: Vec<MetricsRow>,
    /// `(step, eval_return_mean)` for each evaluation.
    pub eval_points: Vec<(u64, f64)>,
    pub agent: Box<dyn Agent>,
    pub checkpoint: Checkpoint,
}

/// Greedy rollouts with unscaled rewards; returns each episode's total.
pub fn evaluate_returns(
    mut policy: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    env: &mut dyn Environment,
    episodes: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if episodes == 0 {
        return Err(Error::InvalidArgument(
            "evaluation needs at least one episode".into(),
        ));
    }
    let mut rng = Rng::seed_from_u64(seed);
    (0..episodes)
        .map(|_| {
            let mut obs = env.reset(&mut rng);
            let mut total = 0.0;
            loop {
                let out = env.step(&policy(&obs)?)?;
                total += out.reward;
                if out.done() {
                    return Ok(total);
                }
                obs = out.observation;
            }
        })
        .collect()
}

/// Mean undiscounted return of `episodes` greedy rollouts.
pub fn evaluate_policy(
    policy: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    env: &mut dyn Environment,
    episodes: usize,
    seed: u64,
) -> Result<f64> {
    let r = evaluate_returns(policy, env, episodes, seed)?;
    Ok(r.iter().sum::<f64>() / r.len() as f64)
}

/// Seed used for the evaluation rollouts of a run with the given seed.
pub fn eval_seed(seed: u64) -> u64 {
    seed ^ EVAL_SEED_OFFSET
}

/// Hand-tuned proportional-derivative controller for the point mass,
/// `a = clamp(-2 p - v)`, used as a reference return.
pub fn pd_controller(obs: &[f64]) -> Result<Vec<f64>> {
    if obs.len() != 4 {
        return Err(crate::error::dim_err(
            "point-mass observation",
            4,
            obs.len(),
        ));
    }
    Ok((0..2)
        .map(|i| (-2.0 * obs[i] - obs[i + 2]).clamp(-1.0, 1.0))
        .collect())
}

#[derive(Default)]
struct Interval {
    returns: Vec<f64>,
    losses: Vec<LossReport>,
}

impl Interval {
    fn row(&self, step: u64, eval: f64, exploration: f64) -> MetricsRow {
        let mean = |xs: &mut dyn Iterator<Item = f64>, n: usize| {
            if n == 0 {
                f64::NAN
            } else {
                xs.sum::<f64>() / n as f64
            }
        };
        let n = self.losses.len();
        MetricsRow {
            step,
            train_episode_return: mean(&mut self.returns.iter().copied(), self.returns.len()),
            eval_return_mean: eval,
            loss_td: mean(&mut self.losses.iter().map(|l| l.td), n),
            loss_inner_sum: mean(&mut self.losses.iter().map(|l| l.inner_sum), n),
            loss_base: mean(&mut self.losses.iter().map(|l| l.base), n),
            exploration_value: exploration,
        }
    }
}

/// Runs one seeded experiment. Identical configs give identical results.
pub fn run_training(cfg: &ExperimentConfig) -> Result<TrainingOutcome> {
    run_training_with(cfg, |_, _| Ok(()))
}

/// As [`run_training`], calling `on_eval(row, agent)` after each evaluation.
pub fn run_training_with(
    cfg: &ExperimentConfig,
    mut on_eval: impl FnMut(&MetricsRow, &dyn Agent) -> Result<()>,
) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let agent_cfg = cfg.resolved_agent_config();
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut env = make_env(&cfg.env)?;
    let mut eval_env = make_env(&cfg.env)?;
    let spec = env.spec().clone();
    let mut agent = build_agent(cfg.agent, &spec, &agent_cfg, &mut rng)?;
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity)?;

    let mut metrics = Vec::new();
    let mut eval_points = Vec::new();
    let mut interval = Interval::default();
    let mut obs = env.reset(&mut rng);
    agent.begin_episode();
    let mut episode_return = 0.0;

    for step in 0..cfg.total_steps {
        let action = if step < cfg.warmup_steps {
            spec.action_low
                .iter()
                .zip(&spec.action_high)
                .map(|(&lo, &hi)| rng.random_range(lo..=hi))
                .collect()
        } else {
            agent.act_explore(&obs, step, &mut rng)?
        };
        let action = spec.clamp_action(&action);
        let out = env.step(&action)?;
        episode_return += out.reward;
        buffer.push(Transition {
            state: obs,
            action,
            reward: out.reward * cfg.reward_scaling,
            next_state: out.observation.clone(),
            terminal: out.terminal,
            discount: if out.real_step { agent_cfg.gamma } else { 1.0 },
        });
        if out.done() {
            interval.returns.push(episode_return);
            episode_return = 0.0;
            obs = env.reset(&mut rng);
            agent.begin_episode();
        } else {
            obs = out.observation;
        }

        if step >= cfg.warmup_steps {
            interval.losses.push(agent.train_step(&buffer, &mut rng)?);
        }

        let done_steps = step + 1;
        if done_steps % cfg.eval_interval == 0 {
            let eval = evaluate_policy(
                |o| agent.act_greedy(o),
                eval_env.as_mut(),
                cfg.eval_episodes,
                eval_seed(cfg.seed),
            )?;
            let row = interval.row(done_steps, eval, agent.exploration_value(step));
            on_eval(&row, agent.as_ref())?;
            metrics.push(row);
            eval_points.push((done_steps, eval));
            interval = Interval::default();
        }
    }

    let mut checkpoint = agent.save()?;
    checkpoint.meta = cfg
        .entries()
        .into_iter()
        .map(|(k, v)| (format!("config.{k}"), v))
        .collect();
    Ok(TrainingOutcome {
        metrics,
        eval_points,
        agent,
        checkpoint,
    })
}

/// Rebuilds the configuration stored in a checkpoint's metadata.
pub fn config_from_checkpoint(ck: &Checkpoint) -> Result<ExperimentConfig> {
    let mut text = String::new();
    for (k, v) in &ck.meta {
        if let Some(key) = k.strip_prefix("config.") {
            text.push_str(&format!("{key} = {v}\n"));
        }
    }
    if text.is_empty() {
        return Err(Error::Config("checkpoint carries no configuration".into()));
    }
    super::config::parse_config(&text)
}

/// Builds the agent described by a checkpoint and loads its parameters.
pub fn agent_from_checkpoint(ck: &Checkpoint) -> Result<(ExperimentConfig, Box<dyn Agent>)> {
    let cfg = config_from_checkpoint(ck)?;
    let spec = make_env(&cfg.env)?.spec().clone();
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut agent = build_agent(cfg.agent, &spec, &cfg.resolved_agent_config(), &mut rng)?;
    agent.load(ck)?;
    Ok((cfg, agent))
}
