use std::fmt;
use std::str::FromStr;

use crate::autodiff::LrSchedule;
use crate::error::{Error, Result};
use crate::explore::{ExplorationKind, ExplorationSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Sdqn,
    Add,
    Prob,
    Idqn,
    Ddpg,
    Naf,
}

impl AgentKind {
    pub const ALL: [AgentKind; 6] = [
        AgentKind::Sdqn,
        AgentKind::Add,
        AgentKind::Prob,
        AgentKind::Idqn,
        AgentKind::Ddpg,
        AgentKind::Naf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Sdqn => "sdqn",
            AgentKind::Add => "add",
            AgentKind::Prob => "prob",
            AgentKind::Idqn => "idqn",
            AgentKind::Ddpg => "ddpg",
            AgentKind::Naf => "naf",
        }
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown agent `{s}` (expected sdqn, add, prob, idqn, ddpg or naf)"
                ))
            })
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadParameterization {
    /// Independent MLP per head.
    UntiedMlp,
    /// One LSTM stepped once per action dimension.
    Lstm,
}

impl FromStr for HeadParameterization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "untied-mlp" => Ok(Self::UntiedMlp),
            "lstm" => Ok(Self::Lstm),
            _ => Err(Error::Config(format!(
                "unknown parameterization `{s}` (expected untied-mlp or lstm)"
            ))),
        }
    }
}

impl fmt::Display for HeadParameterization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::UntiedMlp => "untied-mlp",
            Self::Lstm => "lstm",
        })
    }
}

/// Hyperparameters for every agent kind in one flat record. Each agent
/// reads the fields it needs. Defaults follow the tuned hopper settings for
/// the sequential learner.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub bins: usize,
    pub hidden_size: usize,
    pub embedding_size: usize,
    pub parameterization: HeadParameterization,
    pub lstm_hidden_size: usize,
    pub lstm_layers: usize,
    pub batch_size: usize,
    pub gamma: f64,
    /// Polyak coefficient: `target <- tau * target + (1 - tau) * online`.
    pub target_moving_average: f64,
    pub lr_td: f64,
    pub lr_maxing: f64,
    pub lr_schedule_td: LrSchedule,
    pub lr_schedule_maxing: LrSchedule,
    pub td_multiplier: f64,
    pub tree_multiplier: f64,
    pub base_multiplier: f64,
    /// Extra weight on matching the last head to the double network at
    /// replayed actions as well as at the greedy action. 0 disables it.
    pub base_replay_multiplier: f64,
    pub drag_coefficient: f64,
    pub greedy_penalty: f64,
    pub use_target_for_qd: bool,
    pub l2: f64,
    pub gradient_clipping: Option<f64>,
    pub train_beams: usize,
    pub eval_beams: usize,
    pub baseline_samples: usize,
    pub entropy_coefficient: f64,
    pub learning_rate: f64,
    pub actor_hidden: [usize; 2],
    pub critic_hidden: [usize; 2],
    pub target_update_rate: u64,
    pub target_update_fraction: f64,
    /// Per-sample norm bound on the action gradient passed from critic to actor.
    pub critic_grad_clip: Option<f64>,
    pub exploration: ExplorationSchedule,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            bins: 32,
            hidden_size: 256,
            embedding_size: 128,
            parameterization: HeadParameterization::UntiedMlp,
            lstm_hidden_size: 128,
            lstm_layers: 1,
            batch_size: 512,
            gamma: 0.995,
            target_moving_average: 0.99,
            lr_td: 1e-3,
            lr_maxing: 5e-5,
            lr_schedule_td: LrSchedule::LOG_LINEAR_DEFAULT,
            lr_schedule_maxing: LrSchedule::Constant,
            td_multiplier: 0.5,
            tree_multiplier: 5.0,
            base_multiplier: 1.0,
            base_replay_multiplier: 1.0,
            drag_coefficient: 0.1,
            greedy_penalty: 1.0,
            use_target_for_qd: false,
            l2: 1e-4,
            gradient_clipping: None,
            train_beams: 1,
            eval_beams: 1,
            baseline_samples: 2,
            entropy_coefficient: 1.0,
            learning_rate: 2.6e-4,
            actor_hidden: [48, 107],
            critic_hidden: [349, 299],
            target_update_rate: 10,
            target_update_fraction: 0.0103,
            critic_grad_clip: Some(8.49),
            exploration: ExplorationSchedule {
                kind: ExplorationKind::Boltzmann,
                initial: 1.0,
                final_value: 0.001,
                decay_horizon: 1_000_000,
                prob_sample: 0.2,
                ..ExplorationSchedule::default()
            },
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::Config(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        if self.bins < 2 {
            return Err(Error::Config(format!(
                "quantization_bins must be at least 2, got {}",
                self.bins
            )));
        }
        positive("hidden_size", self.hidden_size)?;
        positive("embedding_size", self.embedding_size)?;
        positive("lstm_hidden_size", self.lstm_hidden_size)?;
        positive("number_of_lstm_layers", self.lstm_layers)?;
        positive("batch_size", self.batch_size)?;
        positive("train_number_beams", self.train_beams)?;
        positive("eval_number_beams", self.eval_beams)?;
        positive("target_update_rate", self.target_update_rate as usize)?;
        self.actor_hidden
            .iter()
            .chain(&self.critic_hidden)
            .try_for_each(|&h| positive("layer width", h))?;
        if self.baseline_samples < 2 {
            return Err(Error::Config(
                "number_of_baseline_samples must be at least 2".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        for (name, v) in [
            ("target_moving_average", self.target_moving_average),
            ("target_update_fraction", self.target_update_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [
            ("td_multiplier", self.td_multiplier),
            ("tree_multiplier", self.tree_multiplier),
            ("base_multiplier", self.base_multiplier),
            ("base_replay_multiplier", self.base_replay_multiplier),
            ("drag_coefficient", self.drag_coefficient),
            ("greedy_penalty", self.greedy_penalty),
            ("entropy_coefficient", self.entropy_coefficient),
            ("l2", self.l2),
        ] {
            if !(v >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("lr_td", self.lr_td),
            ("lr_maxing", self.lr_maxing),
            ("learning_rate", self.learning_rate),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        self.exploration.validate()
    }
}
