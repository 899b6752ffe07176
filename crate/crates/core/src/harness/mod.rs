//! Experiment configuration, the training loop, evaluation and exports.

mod config;
mod metrics;
mod surface;
mod train;

pub use config::{parse_config, parse_config_with_preset, ExperimentConfig, PRESETS};
pub use metrics::{
    metrics_csv, windowed_metric, MetricsRow, WindowedMetric, METRICS_HEADER, METRIC_WINDOW,
};
pub use surface::{export_q_surface, surface_argmax, surface_csv, SurfaceRow};
pub use train::{
    agent_from_checkpoint, config_from_checkpoint, eval_seed, evaluate_policy, evaluate_returns,
    pd_controller, run_training, run_training_with, TrainingOutcome,
};
