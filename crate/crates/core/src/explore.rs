//! Exploration schedules and noise processes.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplorationKind {
    /// Per-dimension: with probability epsilon pick a uniform bin, else greedy.
    /// Continuous agents replace the whole action with a uniform one.
    Epsilon,
    /// Per-dimension Boltzmann sampling over head values.
    Boltzmann,
    /// Gaussian noise around the greedy continuous action.
    GaussianLocal,
    /// Uniformly random continuous actions, ignoring the policy.
    Uniform,
    /// Temporally correlated noise added to the greedy continuous action.
    OrnsteinUhlenbeck,
}

impl FromStr for ExplorationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" => Ok(Self::Epsilon),
            "boltzmann" => Ok(Self::Boltzmann),
            "gaussian-local" => Ok(Self::GaussianLocal),
            "uniform" => Ok(Self::Uniform),
            "ou" => Ok(Self::OrnsteinUhlenbeck),
            _ => Err(Error::Config(format!(
                "unknown exploration_type `{s}` (expected epsilon, boltzmann, gaussian-local, uniform or ou)"
            ))),
        }
    }
}

impl fmt::Display for ExplorationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Epsilon => "epsilon",
            Self::Boltzmann => "boltzmann",
            Self::GaussianLocal => "gaussian-local",
            Self::Uniform => "uniform",
            Self::OrnsteinUhlenbeck => "ou",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationSchedule {
    pub kind: ExplorationKind,
    /// Starting epsilon, or starting temperature for Boltzmann.
    pub initial: f64,
    pub final_value: f64,
    pub decay_horizon: u64,
    /// Probability of sampling rather than taking the max (Boltzmann only);
    /// decays alongside the temperature.
    pub prob_sample: f64,
    pub sigma_local: f64,
    pub ou_damping: f64,
    pub ou_std: f64,
}

impl Default for ExplorationSchedule {
    fn default() -> Self {
        Self {
            kind: ExplorationKind::Epsilon,
            initial: 0.1,
            final_value: 0.001,
            decay_horizon: 1_000_000,
            prob_sample: 1.0,
            sigma_local: 0.2,
            ou_damping: 0.15,
            ou_std: 0.2,
        }
    }
}

impl ExplorationSchedule {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        match self.kind {
            ExplorationKind::Epsilon => {
                prob("epsilon", self.initial)?;
                prob("final exploration value", self.final_value)?;
            }
            ExplorationKind::Boltzmann => {
                if !(self.initial > 0.0 && self.final_value > 0.0) {
                    return Err(Error::Config(
                        "boltzmann temperatures must be positive".into(),
                    ));
                }
            }
            _ => {}
        }
        prob("prob_sample", self.prob_sample)?;
        if self.sigma_local < 0.0 || self.ou_std < 0.0 || self.ou_damping < 0.0 {
            return Err(Error::Config("noise scales must be non-negative".into()));
        }
        Ok(())
    }

    /// Epsilon or temperature at `step`.
    pub fn value(&self, step: u64) -> f64 {
        linear_decay(self.initial, self.final_value, self.decay_horizon, step)
    }

    pub fn prob_sample_at(&self, step: u64) -> f64 {
        let end = self.final_value.min(self.prob_sample);
        linear_decay(self.prob_sample, end, self.decay_horizon, step)
    }

    /// Chooses one bin from a head's values under this schedule.
    pub fn choose_bin(&self, q: &[f64], step: u64, rng: &mut Rng) -> Result<usize> {
        match self.kind {
            ExplorationKind::Epsilon => {
                if rng.random::<f64>() < self.value(step) {
                    Ok(rng.random_range(0..q.len()))
                } else {
                    argmax_checked(q)
                }
            }
            ExplorationKind::Boltzmann => {
                boltzmann_select(q, self.value(step), self.prob_sample_at(step), rng)
            }
            _ => argmax_checked(q),
        }
    }

    /// Applies continuous-action noise to a greedy action and clamps it.
    /// Epsilon and Boltzmann leave the action unchanged except for the
    /// epsilon case, which swaps in a uniform action.
    pub fn perturb(
        &self,
        greedy: &[f64],
        low: &[f64],
        high: &[f64],
        step: u64,
        ou: Option<&mut OuNoise>,
        rng: &mut Rng,
    ) -> Vec<f64> {
        let uniform = |rng: &mut Rng| -> Vec<f64> {
            low.iter()
                .zip(high)
                .map(|(&lo, &hi)| rng.random_range(lo..=hi))
                .collect()
        };
        let noisy: Vec<f64> = match self.kind {
            ExplorationKind::Uniform => return uniform(rng),
            ExplorationKind::Epsilon => {
                if rng.random::<f64>() < self.value(step) {
                    return uniform(rng);
                }
                greedy.to_vec()
            }
            ExplorationKind::GaussianLocal => greedy
                .iter()
                .map(|&a| {
                    let z: f64 = StandardNormal.sample(rng);
                    a + self.sigma_local * z
                })
                .collect(),
            ExplorationKind::OrnsteinUhlenbeck => match ou {
                Some(noise) => greedy
                    .iter()
                    .zip(noise.sample(rng))
                    .map(|(a, n)| a + n)
                    .collect(),
                None => greedy.to_vec(),
            },
            ExplorationKind::Boltzmann => greedy.to_vec(),
        };
        noisy
            .iter()
            .zip(low.iter().zip(high))
            .map(|(&a, (&lo, &hi))| a.clamp(lo, hi))
            .collect()
    }
}

/// Linear interpolation from `start` to `end` over `horizon` steps, then constant.
pub fn linear_decay(start: f64, end: f64, horizon: u64, step: u64) -> f64 {
    if horizon == 0 || step >= horizon {
        return end;
    }
    let frac = step as f64 / horizon as f64;
    start + (end - start) * frac
}

pub fn schedule_value(sched: &ExplorationSchedule, step: u64) -> f64 {
    sched.value(step)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

fn argmax_checked(q: &[f64]) -> Result<usize> {
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("head values".into()));
    }
    Ok(argmax(q))
}

/// Probabilities proportional to `exp(q / temperature)`.
pub fn boltzmann_probabilities(q: &[f64], temperature: f64) -> Vec<f64> {
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = q.iter().map(|&v| ((v - m) / temperature).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    p
}

/// With probability `prob_sample` draw a bin from the Boltzmann distribution,
/// otherwise take the argmax.
pub fn boltzmann_select(
    q: &[f64],
    temperature: f64,
    prob_sample: f64,
    rng: &mut Rng,
) -> Result<usize> {
    if q.is_empty() {
        return Err(Error::InvalidArgument("empty value vector".into()));
    }
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("boltzmann input".into()));
    }
    if rng.random::<f64>() >= prob_sample {
        return Ok(argmax(q));
    }
    Ok(sample_categorical(
        &boltzmann_probabilities(q, temperature),
        rng,
    ))
}

/// Draws an index from a normalized probability vector.
pub fn sample_categorical(p: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1)
}

/// Ornstein-Uhlenbeck process `x += damping * (0 - x) * dt + std * sqrt(dt) * xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuNoise {
    pub x: Vec<f64>,
    pub damping: f64,
    pub std: f64,
    pub dt: f64,
}

impl OuNoise {
    pub fn new(dims: usize, damping: f64, std: f64, dt: f64) -> Self {
        Self {
            x: vec![0.0; dims],
            damping,
            std,
            dt,
        }
    }

    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn sample(&mut self, rng: &mut Rng) -> Vec<f64> {
        let scale = self.std * self.dt.sqrt();
        for x in &mut self.x {
            let z: f64 = StandardNormal.sample(rng);
            *x += -self.damping * *x * self.dt + scale * z;
        }
        self.x.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn eps(initial: f64) -> ExplorationSchedule {
        ExplorationSchedule {
            kind: ExplorationKind::Epsilon,
            initial,
            ..Default::default()
        }
    }

    #[test]
    fn schedule_examples() {
        let s = eps(0.5);
        assert_eq!(s.value(0), 0.5);
        assert_eq!(s.value(1_000_000), 0.001);
        assert_eq!(s.value(5_000_000), 0.001);
        assert!((s.value(500_000) - (0.5 + 0.001) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn boltzmann_examples() {
        let mut rng = Rng::seed_from_u64(0);
        let q = [0.1, 0.9, 0.9, 0.3];
        for _ in 0..100 {
            assert_eq!(boltzmann_select(&q, 1e-9, 0.0, &mut rng).unwrap(), 1);
        }
        let p = boltzmann_probabilities(&[2f64.ln(), 0.0], 1.0);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(boltzmann_select(&[f64::NAN, 0.0], 1.0, 1.0, &mut rng).is_err());
        assert!(boltzmann_select(&[0.0, 0.0], 0.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn boltzmann_frequencies() {
        let mut rng = Rng::seed_from_u64(5);
        let n = 100_000;
        let mut uniform = [0usize; 4];
        let mut skewed = [0usize; 2];
        for _ in 0..n {
            uniform[boltzmann_select(&[0.3; 4], 1.0, 1.0, &mut rng).unwrap()] += 1;
            skewed[boltzmann_select(&[2f64.ln(), 0.0], 1.0, 1.0, &mut rng).unwrap()] += 1;
        }
        let check = |count: usize, p: f64| {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (count as f64 - n as f64 * p).abs() < 3.0 * sd,
                "{count} vs p={p}"
            );
        };
        uniform.iter().for_each(|&c| check(c, 0.25));
        check(skewed[0], 2.0 / 3.0);
    }

    #[test]
    fn ou_examples() {
        let mut rng = Rng::seed_from_u64(0);
        let mut ou = OuNoise::new(1, 1.0, 0.0, 0.5);
        assert_eq!(ou.sample(&mut rng), vec![0.0]);
        ou.x = vec![1.0];
        assert_eq!(ou.sample(&mut rng), vec![0.5]);
        assert_eq!(ou.sample(&mut rng), vec![0.25]);
    }

    #[test]
    fn ou_stationary_variance() {
        let mut rng = Rng::seed_from_u64(11);
        let (theta, sigma) = (0.15, 0.3);
        let mut ou = OuNoise::new(1, theta, sigma, 1e-2);
        for _ in 0..10_000 {
            ou.sample(&mut rng);
        }
        let n = 1_000_000;
        let mut sum2 = 0.0;
        for _ in 0..n {
            sum2 += ou.sample(&mut rng)[0].powi(2);
        }
        let var = sum2 / n as f64;
        let want = sigma * sigma / (2.0 * theta);
        assert!((var - want).abs() < 0.1 * want, "var {var} want {want}");
    }

    #[test]
    fn perturb_clamps() {
        let mut rng = Rng::seed_from_u64(2);
        let s = ExplorationSchedule {
            kind: ExplorationKind::GaussianLocal,
            sigma_local: 10.0,
            ..Default::default()
        };
        for _ in 0..100 {
            let a = s.perturb(&[0.0, 0.0], &[-1.0, -1.0], &[1.0, 1.0], 0, None, &mut rng);
            assert!(a.iter().all(|x| (-1.0..=1.0).contains(x)));
        }
    }

    proptest! {
        #[test]
        fn probabilities_normalized_and_shift_invariant(
            q in proptest::collection::vec(-20.0f64..20.0, 1..16),
            t in 0.01f64..10.0,
            c in -100.0f64..100.0,
        ) {
            let p = boltzmann_probabilities(&q, t);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = q.iter().map(|v| v + c).collect();
            let p2 = boltzmann_probabilities(&shifted, t);
            for (a, b) in p.iter().zip(&p2) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn epsilon_schedule_nonincreasing(e0 in 0.001f64..=1.0, a in 0u64..2_000_000, b in 0u64..2_000_000) {
            let s = eps(e0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(s.value(hi) <= s.value(lo) + 1e-15);
        }
    }
}
