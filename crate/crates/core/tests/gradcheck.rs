//! Reverse-mode gradients against central finite differences.

mod common;

use common::gradients::{self, Case, TOLERANCE};

fn run(case: Case, seeds: u64) {
    for seed in 0..seeds {
        let err = case(seed);
        assert!(err <= TOLERANCE, "seed {seed}: relative error {err}");
    }
}

const AGENT_SEEDS: u64 = 20;

#[test]
fn composed_networks_match_finite_differences() {
    run(gradients::mlp, 100);
}

#[test]
fn unrolled_lstm_matches_finite_differences() {
    run(gradients::lstm, 100);
}

#[test]
fn elementwise_and_structural_ops_match_finite_differences() {
    run(gradients::ops, 100);
}

#[test]
fn sequential_losses_match_finite_differences() {
    run(gradients::sequential_td, AGENT_SEEDS);
    run(gradients::sequential_heads, AGENT_SEEDS);
}

#[test]
fn additive_matching_loss_matches_finite_differences() {
    run(gradients::additive_matching, AGENT_SEEDS);
}

#[test]
fn policy_surrogate_matches_finite_differences() {
    run(gradients::policy_surrogate, AGENT_SEEDS);
}

#[test]
fn independent_and_quadratic_losses_match_finite_differences() {
    run(gradients::independent_td, AGENT_SEEDS);
    run(gradients::quadratic_td, AGENT_SEEDS);
}

#[test]
fn actor_critic_losses_match_finite_differences() {
    run(gradients::ddpg_critic, AGENT_SEEDS);
    run(gradients::ddpg_actor, AGENT_SEEDS);
}
