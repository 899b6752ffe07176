//! Flat `key = value` experiment configuration with named presets.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::agents::{AgentConfig, AgentKind, HeadParameterization};
use crate::autodiff::LrSchedule;
use crate::error::{Error, Result};
use crate::explore::ExplorationKind;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: String,
    pub agent: AgentKind,
    pub seed: u64,
    pub total_steps: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    /// Multiplies rewards stored for training; evaluation is unscaled.
    pub reward_scaling: f64,
    /// Uniform-random steps collected before the first update.
    pub warmup_steps: u64,
    pub replay_capacity: Option<usize>,
    /// Starting epsilon when `exploration_type = epsilon`.
    pub epsilon: f64,
    /// Starting temperature when `exploration_type = boltzmann`.
    pub boltzmann_temperature: f64,
    pub preset: Option<String>,
    pub agent_config: AgentConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let agent_config = AgentConfig::default();
        Self {
            env: "pointmass".into(),
            agent: AgentKind::Sdqn,
            seed: 0,
            total_steps: 100_000,
            eval_interval: 5000,
            eval_episodes: 10,
            reward_scaling: 0.1,
            warmup_steps: 1000,
            replay_capacity: None,
            epsilon: 0.1,
            boltzmann_temperature: agent_config.exploration.initial,
            preset: None,
            agent_config,
        }
    }
}

impl ExperimentConfig {
    /// Agent hyperparameters with the exploration starting value taken from
    /// `epsilon` or `boltzmann_temperature` according to the exploration type.
    pub fn resolved_agent_config(&self) -> AgentConfig {
        let mut cfg = self.agent_config.clone();
        cfg.exploration.initial = match cfg.exploration.kind {
            ExplorationKind::Boltzmann => self.boltzmann_temperature,
            _ => self.epsilon,
        };
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.eval_interval == 0 {
            return Err(Error::Config("eval_interval must be positive".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be positive".into()));
        }
        if !(self.reward_scaling.is_finite() && self.reward_scaling > 0.0) {
            return Err(Error::Config(format!(
                "reward_scaling must be positive, got {}",
                self.reward_scaling
            )));
        }
        if self.replay_capacity == Some(0) {
            return Err(Error::Config(
                "replay_capacity must be positive or `inf`".into(),
            ));
        }
        self.resolved_agent_config().validate()
    }

    /// Sets one key. Values are parsed strictly; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let a = &mut self.agent_config;
        match key {
            "env" => self.env = value.to_string(),
            "agent" => self.agent = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "total_steps" => self.total_steps = parse(key, value)?,
            "eval_interval" => self.eval_interval = parse(key, value)?,
            "eval_episodes" => self.eval_episodes = parse(key, value)?,
            "reward_scaling" => self.reward_scaling = parse(key, value)?,
            "warmup_steps" => self.warmup_steps = parse(key, value)?,
            "replay_capacity" => {
                self.replay_capacity = if value == "inf" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "epsilon" => self.epsilon = parse(key, value)?,
            "boltzmann_temperature" => self.boltzmann_temperature = parse(key, value)?,
            "preset" => self.apply_preset(value)?,
            "quantization_bins" => a.bins = parse(key, value)?,
            "hidden_size" => a.hidden_size = parse(key, value)?,
            "embedding_size" => a.embedding_size = parse(key, value)?,
            "parameterization" => a.parameterization = value.parse::<HeadParameterization>()?,
            "lstm_hidden_size" => a.lstm_hidden_size = parse(key, value)?,
            "number_of_lstm_layers" => a.lstm_layers = parse(key, value)?,
            "batch_size" => a.batch_size = parse(key, value)?,
            "gamma" => a.gamma = parse(key, value)?,
            "target_moving_average" => a.target_moving_average = parse(key, value)?,
            "lr_td" => a.lr_td = parse(key, value)?,
            "lr_maxing" => a.lr_maxing = parse(key, value)?,
            "lr_decay_td" => a.lr_schedule_td = parse_schedule(key, value)?,
            "lr_decay_maxing" => a.lr_schedule_maxing = parse_schedule(key, value)?,
            "td_multiplier" => a.td_multiplier = parse(key, value)?,
            "tree_multiplier" => a.tree_multiplier = parse(key, value)?,
            "base_multiplier" => a.base_multiplier = parse(key, value)?,
            "base_replay_multiplier" => a.base_replay_multiplier = parse(key, value)?,
            "drag_coefficient" => a.drag_coefficient = parse(key, value)?,
            "greedy_penalty_coefficient" => a.greedy_penalty = parse(key, value)?,
            "use_target_for_qd" => a.use_target_for_qd = parse_bool(key, value)?,
            "l2" => {
                a.l2 = if value == "off" {
                    0.0
                } else {
                    parse(key, value)?
                }
            }
            "gradient_clipping" => a.gradient_clipping = parse_optional(key, value)?,
            "train_number_beams" => a.train_beams = parse(key, value)?,
            "eval_number_beams" => a.eval_beams = parse(key, value)?,
            "number_of_baseline_samples" => a.baseline_samples = parse(key, value)?,
            "entropy_coefficient" => a.entropy_coefficient = parse(key, value)?,
            "learning_rate" => a.learning_rate = parse(key, value)?,
            "actor_hidden_1" => a.actor_hidden[0] = parse(key, value)?,
            "actor_hidden_2" => a.actor_hidden[1] = parse(key, value)?,
            "critic_hidden_1" => a.critic_hidden[0] = parse(key, value)?,
            "critic_hidden_2" => a.critic_hidden[1] = parse(key, value)?,
            "target_update_rate" => a.target_update_rate = parse(key, value)?,
            "target_update_fraction" => a.target_update_fraction = parse(key, value)?,
            "critic_grad_clip" => a.critic_grad_clip = parse_optional(key, value)?,
            "exploration_type" => a.exploration.kind = value.parse()?,
            "exploration_final" => a.exploration.final_value = parse(key, value)?,
            "exploration_decay_steps" => a.exploration.decay_horizon = parse(key, value)?,
            "prob_sample" => a.exploration.prob_sample = parse(key, value)?,
            "sigma_local" => a.exploration.sigma_local = parse(key, value)?,
            "ou_damping" => a.exploration.ou_damping = parse(key, value)?,
            "ou_std" => a.exploration.ou_std = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Resets every field to the named preset's values.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        let entries = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                Error::Config(format!(
                    "unknown preset `{name}` (available: {})",
                    names.join(", ")
                ))
            })?
            .1;
        *self = ExperimentConfig::default();
        for (k, v) in entries {
            self.set(k, v)?;
        }
        self.preset = Some(name.to_string());
        Ok(())
    }

    /// Every key with its current value, one `key = value` per line, in a
    /// form `parse_config` reads back to an identical config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            writeln!(out, "{k} = {v}").expect("writing to a String cannot fail");
        }
        out
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let a = &self.agent_config;
        let ex = &a.exploration;
        let opt = |v: Option<f64>| v.map_or("off".to_string(), |x| x.to_string());
        vec![
            ("env", self.env.clone()),
            ("agent", self.agent.to_string()),
            ("seed", self.seed.to_string()),
            ("total_steps", self.total_steps.to_string()),
            ("eval_interval", self.eval_interval.to_string()),
            ("eval_episodes", self.eval_episodes.to_string()),
            ("reward_scaling", self.reward_scaling.to_string()),
            ("warmup_steps", self.warmup_steps.to_string()),
            (
                "replay_capacity",
                self.replay_capacity
                    .map_or("inf".to_string(), |c| c.to_string()),
            ),
            ("epsilon", self.epsilon.to_string()),
            (
                "boltzmann_temperature",
                self.boltzmann_temperature.to_string(),
            ),
            ("quantization_bins", a.bins.to_string()),
            ("hidden_size", a.hidden_size.to_string()),
            ("embedding_size", a.embedding_size.to_string()),
            ("parameterization", a.parameterization.to_string()),
            ("lstm_hidden_size", a.lstm_hidden_size.to_string()),
            ("number_of_lstm_layers", a.lstm_layers.to_string()),
            ("batch_size", a.batch_size.to_string()),
            ("gamma", a.gamma.to_string()),
            ("target_moving_average", a.target_moving_average.to_string()),
            ("lr_td", a.lr_td.to_string()),
            ("lr_maxing", a.lr_maxing.to_string()),
            ("lr_decay_td", schedule_text(a.lr_schedule_td)),
            ("lr_decay_maxing", schedule_text(a.lr_schedule_maxing)),
            ("td_multiplier", a.td_multiplier.to_string()),
            ("tree_multiplier", a.tree_multiplier.to_string()),
            ("base_multiplier", a.base_multiplier.to_string()),
            (
                "base_replay_multiplier",
                a.base_replay_multiplier.to_string(),
            ),
            ("drag_coefficient", a.drag_coefficient.to_string()),
            ("greedy_penalty_coefficient", a.greedy_penalty.to_string()),
            ("use_target_for_qd", a.use_target_for_qd.to_string()),
            ("l2", a.l2.to_string()),
            ("gradient_clipping", opt(a.gradient_clipping)),
            ("train_number_beams", a.train_beams.to_string()),
            ("eval_number_beams", a.eval_beams.to_string()),
            ("number_of_baseline_samples", a.baseline_samples.to_string()),
            ("entropy_coefficient", a.entropy_coefficient.to_string()),
            ("learning_rate", a.learning_rate.to_string()),
            ("actor_hidden_1", a.actor_hidden[0].to_string()),
            ("actor_hidden_2", a.actor_hidden[1].to_string()),
            ("critic_hidden_1", a.critic_hidden[0].to_string()),
            ("critic_hidden_2", a.critic_hidden[1].to_string()),
            ("target_update_rate", a.target_update_rate.to_string()),
            (
                "target_update_fraction",
                a.target_update_fraction.to_string(),
            ),
            ("critic_grad_clip", opt(a.critic_grad_clip)),
            ("exploration_type", ex.kind.to_string()),
            ("exploration_final", ex.final_value.to_string()),
            ("exploration_decay_steps", ex.decay_horizon.to_string()),
            ("prob_sample", ex.prob_sample.to_string()),
            ("sigma_local", ex.sigma_local.to_string()),
            ("ou_damping", ex.ou_damping.to_string()),
            ("ou_std", ex.ou_std.to_string()),
        ]
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("`{key}`: cannot parse `{value}` ({e})")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(Error::Config(format!(
            "`{key}`: expected on/off or true/false, got `{value}`"
        ))),
    }
}

fn parse_optional(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "off" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_schedule(key: &str, value: &str) -> Result<LrSchedule> {
    match value {
        "none" => Ok(LrSchedule::Constant),
        "log-linear" => Ok(LrSchedule::LOG_LINEAR_DEFAULT),
        _ => Err(Error::Config(format!(
            "`{key}`: expected log-linear or none, got `{value}`"
        ))),
    }
}

fn schedule_text(s: LrSchedule) -> String {
    match s {
        LrSchedule::Constant => "none".into(),
        _ => "log-linear".into(),
    }
}

/// Parses `key = value` lines. `#` starts a comment. A `preset` line, if
/// present, is applied first whatever its position, then the remaining keys
/// override it. Repeated keys are rejected. `env` and `agent` must be given,
/// directly or through the preset.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with_preset(text, None)
}

/// As [`parse_config`], with a preset chosen outside the file. A preset named
/// in the file takes precedence.
pub fn parse_config_with_preset(text: &str, preset: Option<&str>) -> Result<ExperimentConfig> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected `key = value`, got `{line}`",
                i + 1
            ))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !seen.insert(k.to_string()) {
            return Err(Error::Config(format!(
                "line {}: key `{k}` given twice",
                i + 1
            )));
        }
        pairs.push((i + 1, k, v));
    }
    let mut cfg = ExperimentConfig::default();
    let file_preset = pairs
        .iter()
        .find(|(_, k, _)| *k == "preset")
        .map(|(_, _, v)| *v);
    if let Some(p) = file_preset.or(preset) {
        cfg.apply_preset(p)?;
    }
    for &(line, k, v) in pairs.iter().filter(|(_, k, _)| *k != "preset") {
        cfg.set(k, v)
            .map_err(|e| Error::Config(format!("line {line}: {}", strip_prefix(e))))?;
    }
    if cfg.preset.is_none() {
        for required in ["env", "agent"] {
            if !seen.contains(required) {
                return Err(Error::Config(format!(
                    "missing required key `{required}` (or a preset)"
                )));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

type Preset = (&'static str, &'static [(&'static str, &'static str)]);

/// Tuned settings for the hopper and cheetah benchmarks, applied to the
/// point-mass task since no physics engine ships with the toolkit.
pub const PRESETS: &[Preset] = &[
    (
        "sdqn-hopper",
        &[
            ("env", "pointmass"),
            ("agent", "sdqn"),
            ("replay_capacity", "inf"),
            ("batch_size", "512"),
            ("quantization_bins", "32"),
            ("hidden_size", "256"),
            ("embedding_size", "128"),
            ("reward_scaling", "0.1"),
            ("target_moving_average", "0.99"),
            ("lr_td", "1e-3"),
            ("lr_maxing", "5e-5"),
            ("gradient_clipping", "off"),
            ("l2", "1e-4"),
            ("lr_decay_td", "log-linear"),
            ("lr_decay_maxing", "none"),
            ("td_multiplier", "0.5"),
            ("use_target_for_qd", "off"),
            ("tree_multiplier", "5"),
            ("gamma", "0.995"),
            ("drag_coefficient", "0.1"),
            ("greedy_penalty_coefficient", "1.0"),
            ("exploration_type", "boltzmann"),
            ("boltzmann_temperature", "1.0"),
            ("prob_sample", "0.2"),
        ],
    ),
    (
        "sdqn-cheetah",
        &[
            ("env", "pointmass"),
            ("agent", "sdqn"),
            ("replay_capacity", "inf"),
            ("batch_size", "512"),
            ("quantization_bins", "32"),
            ("hidden_size", "512"),
            ("embedding_size", "128"),
            ("reward_scaling", "0.1"),
            ("target_moving_average", "0.9"),
            ("lr_td", "1e-3"),
            ("lr_maxing", "1e-4"),
            ("gradient_clipping", "off"),
            ("l2", "1e-4"),
            ("lr_decay_td", "log-linear"),
            ("lr_decay_maxing", "none"),
            ("td_multiplier", "0.5"),
            ("use_target_for_qd", "on"),
            ("tree_multiplier", "5"),
            ("gamma", "0.99"),
            ("drag_coefficient", "0.1"),
            ("greedy_penalty_coefficient", "1.0"),
            ("exploration_type", "boltzmann"),
            ("boltzmann_temperature", "0.1"),
            ("prob_sample", "1.0"),
        ],
    ),
    (
        "add-hopper",
        &[
            ("env", "pointmass"),
            ("agent", "add"),
            ("replay_capacity", "inf"),
            ("batch_size", "256"),
            ("quantization_bins", "16"),
            ("lstm_hidden_size", "128"),
            ("number_of_lstm_layers", "1"),
            ("embedding_size", "128"),
            ("lr_td", "1e-4"),
            ("lr_maxing", "1e-5"),
            ("td_multiplier", "0.2"),
            ("target_moving_average", "0.999"),
            ("use_target_for_qd", "on"),
            ("reward_scaling", "0.05"),
            ("train_number_beams", "2"),
            ("eval_number_beams", "2"),
            ("exploration_type", "boltzmann"),
            ("boltzmann_temperature", "0.1"),
            ("prob_sample", "0.5"),
        ],
    ),
    (
        "add-cheetah",
        &[
            ("env", "pointmass"),
            ("agent", "add"),
            ("replay_capacity", "inf"),
            ("batch_size", "256"),
            ("quantization_bins", "32"),
            ("lstm_hidden_size", "256"),
            ("number_of_lstm_layers", "1"),
            ("lr_td", "5e-3"),
            ("lr_maxing", "5e-5"),
            ("td_multiplier", "1.0"),
            ("target_moving_average", "0.99"),
            ("use_target_for_qd", "on"),
            ("reward_scaling", "0.12"),
            ("train_number_beams", "1"),
            ("eval_number_beams", "2"),
            ("exploration_type", "boltzmann"),
            ("boltzmann_temperature", "0.1"),
            ("prob_sample", "0.5"),
        ],
    ),
    (
        "prob-hopper",
        &[
            ("env", "pointmass"),
            ("agent", "prob"),
            ("replay_capacity", "20000"),
            ("batch_size", "512"),
            ("quantization_bins", "32"),
            ("hidden_size", "256"),
            ("embedding_size", "128"),
            ("lr_td", "1e-4"),
            ("lr_maxing", "1e-5"),
            ("td_multiplier", "10"),
            ("target_moving_average", "0.98"),
            ("number_of_baseline_samples", "2"),
            ("train_number_beams", "1"),
            ("eval_number_beams", "1"),
            ("exploration_type", "epsilon"),
            ("epsilon", "0.1"),
            ("reward_scaling", "0.1"),
            ("entropy_coefficient", "1.0"),
        ],
    ),
    (
        "prob-cheetah",
        &[
            ("env", "pointmass"),
            ("agent", "prob"),
            ("replay_capacity", "20000"),
            ("batch_size", "256"),
            ("quantization_bins", "32"),
            ("hidden_size", "256"),
            ("embedding_size", "128"),
            ("lr_td", "1e-3"),
            ("lr_maxing", "1e-4"),
            ("td_multiplier", "10"),
            ("target_moving_average", "0.99"),
            ("number_of_baseline_samples", "4"),
            ("train_number_beams", "1"),
            ("eval_number_beams", "1"),
            ("exploration_type", "epsilon"),
            ("epsilon", "0.0"),
            ("reward_scaling", "0.5"),
            ("entropy_coefficient", "1.0"),
        ],
    ),
    (
        "idqn-hopper",
        &[
            ("env", "pointmass"),
            ("agent", "idqn"),
            ("replay_capacity", "inf"),
            ("batch_size", "512"),
            ("quantization_bins", "16"),
            ("hidden_size", "512"),
            ("gamma", "0.99"),
            ("reward_scaling", "0.1"),
            ("target_moving_average", "0.99"),
            ("l2", "off"),
            ("exploration_type", "epsilon"),
            ("epsilon", "0.05"),
            ("lr_td", "1e-4"),
            ("lr_decay_td", "none"),
        ],
    ),
    (
        "idqn-cheetah",
        &[
            ("env", "pointmass"),
            ("agent", "idqn"),
            ("replay_capacity", "inf"),
            ("batch_size", "256"),
            ("quantization_bins", "8"),
            ("hidden_size", "128"),
            ("gamma", "0.995"),
            ("reward_scaling", "0.1"),
            ("target_moving_average", "0.99"),
            ("l2", "1e-4"),
            ("exploration_type", "epsilon"),
            ("epsilon", "0.01"),
            ("lr_td", "1e-4"),
            ("lr_decay_td", "none"),
        ],
    ),
    (
        "ddpg-hopper",
        &[
            ("env", "pointmass"),
            ("agent", "ddpg"),
            ("learning_rate", "0.00026"),
            ("gamma", "0.995"),
            ("batch_size", "451"),
            ("actor_hidden_1", "48"),
            ("actor_hidden_2", "107"),
            ("critic_hidden_1", "349"),
            ("critic_hidden_2", "299"),
            ("reward_scaling", "0.01"),
            ("target_update_rate", "10"),
            ("target_update_fraction", "0.0103"),
            ("critic_grad_clip", "8.49"),
            ("exploration_type", "ou"),
            ("ou_damping", "0.0367"),
            ("ou_std", "0.074"),
            ("l2", "off"),
        ],
    ),
    (
        "ddpg-cheetah",
        &[
            ("env", "pointmass"),
            ("agent", "ddpg"),
            ("learning_rate", "0.000086"),
            ("gamma", "0.995"),
            ("batch_size", "117"),
            ("actor_hidden_1", "11"),
            ("actor_hidden_2", "199"),
            ("critic_hidden_1", "164"),
            ("critic_hidden_2", "256"),
            ("reward_scaling", "0.01"),
            ("target_update_rate", "445"),
            ("target_update_fraction", "0.0677"),
            ("critic_grad_clip", "0.600"),
            ("exploration_type", "ou"),
            ("ou_damping", "0.6045"),
            ("ou_std", "0.255"),
            ("l2", "off"),
        ],
    ),
    // Desk-scale experiments on the native tasks.
    (
        "bandit-sdqn",
        &[
            ("env", "bandit2d"),
            ("agent", "sdqn"),
            ("total_steps", "30000"),
            ("eval_episodes", "1"),
            ("quantization_bins", "32"),
            ("hidden_size", "32"),
            ("embedding_size", "16"),
            ("batch_size", "32"),
            ("lr_maxing", "1e-3"),
            ("lr_decay_td", "none"),
            ("reward_scaling", "1"),
            ("exploration_type", "epsilon"),
            ("epsilon", "1.0"),
        ],
    ),
    (
        "bandit-ddpg",
        &[
            ("env", "bandit2d"),
            ("agent", "ddpg"),
            ("total_steps", "30000"),
            ("eval_episodes", "1"),
            ("actor_hidden_1", "32"),
            ("actor_hidden_2", "32"),
            ("critic_hidden_1", "64"),
            ("critic_hidden_2", "64"),
            ("batch_size", "64"),
            ("learning_rate", "1e-3"),
            ("reward_scaling", "1"),
            ("exploration_type", "gaussian-local"),
            ("sigma_local", "0.2"),
        ],
    ),
    (
        "bandit-naf",
        &[
            ("env", "bandit2d"),
            ("agent", "naf"),
            ("total_steps", "30000"),
            ("eval_episodes", "1"),
            ("hidden_size", "32"),
            ("batch_size", "64"),
            ("learning_rate", "1e-3"),
            ("reward_scaling", "1"),
            ("exploration_type", "uniform"),
        ],
    ),
    (
        "pointmass-sdqn",
        &[
            ("env", "pointmass"),
            ("agent", "sdqn"),
            ("total_steps", "100000"),
            ("eval_interval", "10000"),
            ("quantization_bins", "9"),
            ("hidden_size", "64"),
            ("embedding_size", "32"),
            ("eval_episodes", "10"),
            ("batch_size", "64"),
            ("lr_td", "1e-4"),
            ("lr_maxing", "1e-3"),
            ("lr_decay_td", "none"),
            ("target_moving_average", "0.995"),
            ("gamma", "0.95"),
            ("drag_coefficient", "0"),
            ("use_target_for_qd", "on"),
            ("l2", "off"),
            ("reward_scaling", "1"),
            ("exploration_type", "epsilon"),
            ("epsilon", "0.2"),
            ("exploration_final", "0.02"),
            ("exploration_decay_steps", "100000"),
        ],
    ),
    (
        "pointmass-ddpg",
        &[
            ("env", "pointmass"),
            ("agent", "ddpg"),
            ("total_steps", "100000"),
            ("eval_interval", "10000"),
            ("actor_hidden_1", "64"),
            ("actor_hidden_2", "64"),
            ("critic_hidden_1", "64"),
            ("critic_hidden_2", "64"),
            ("learning_rate", "1e-4"),
            ("batch_size", "64"),
            ("gamma", "0.98"),
            ("target_update_rate", "1"),
            ("target_update_fraction", "0.005"),
            ("critic_grad_clip", "off"),
            ("l2", "off"),
            ("reward_scaling", "1"),
            ("exploration_type", "gaussian-local"),
            ("sigma_local", "0.2"),
        ],
    ),
];
