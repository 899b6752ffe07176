use super::params::{Gradients, ParameterStore};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Learning-rate schedule over optimizer steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrSchedule {
    Constant,
    /// `lr(t) = lr0 * 10^(-decades * min(t, horizon) / horizon)`.
    LogLinear {
        decades: f64,
        horizon: u64,
    },
}

impl LrSchedule {
    pub const LOG_LINEAR_DEFAULT: LrSchedule = LrSchedule::LogLinear {
        decades: 2.0,
        horizon: 1_000_000,
    };

    pub fn rate(&self, base: f64, step: u64) -> f64 {
        match *self {
            LrSchedule::Constant => base,
            LrSchedule::LogLinear { decades, horizon } => {
                let frac = step.min(horizon) as f64 / horizon as f64;
                base * 10f64.powf(-decades * frac)
            }
        }
    }
}

/// Adam with bias correction. Moments are allocated lazily the first time a
/// parameter receives a gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub schedule: LrSchedule,
    t: u64,
    m: Vec<Option<Tensor>>,
    v: Vec<Option<Tensor>>,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            schedule: LrSchedule::Constant,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn with_schedule(mut self, schedule: LrSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn current_lr(&self) -> f64 {
        self.schedule.rate(self.lr, self.t)
    }

    /// Applies one update to every parameter that has a gradient buffer.
    /// Fails without modifying anything if a gradient is non-finite.
    pub fn step(&mut self, params: &mut ParameterStore, grads: &Gradients) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::ParameterMismatch(format!(
                "{} gradient slots for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        for (id, g) in grads.iter() {
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient(params.name(id).to_string()));
            }
        }
        if self.m.len() < params.len() {
            self.m.resize(params.len(), None);
            self.v.resize(params.len(), None);
        }
        let lr = self.current_lr();
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powf(self.t as f64);
        let bc2 = 1.0 - self.beta2.powf(self.t as f64);
        for (id, g) in grads.iter() {
            let theta = params.tensor_mut(id);
            let m = self.m[id].get_or_insert_with(|| Tensor::zeros(g.shape()));
            let v = self.v[id].get_or_insert_with(|| Tensor::zeros(g.shape()));
            for (((p, gv), mv), vv) in theta
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let mhat = *mv / bc1;
                let vhat = *vv / bc2;
                *p -= lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step(
    params: &mut ParameterStore,
    grads: &Gradients,
    state: &mut AdamState,
) -> Result<()> {
    state.step(params, grads)
}
