//! Shared test helpers: tabular instances and weight programming that makes
//! the untied heads and the double network reproduce given tables exactly.
#![allow(dead_code)]

pub mod gradients;

use rand::{Rng as _, SeedableRng};
use sdqn_core::autodiff::{ParameterStore, Tensor};
use sdqn_core::env::{EnvSpec, Transition};
use sdqn_core::Rng;

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Single-observation spec with `n` action dimensions in `[-1, 1]`.
pub fn unit_spec(obs: usize, n: usize) -> EnvSpec {
    EnvSpec {
        observation_dim: obs,
        action_dim: n,
        action_low: vec![-1.0; n],
        action_high: vec![1.0; n],
        max_episode_steps: 1,
    }
}

/// Lexicographic index of a bin sequence in base `b`.
pub fn index_of(bins: &[usize], b: usize) -> usize {
    bins.iter().fold(0, |acc, &k| acc * b + k)
}

pub fn digits(mut idx: usize, len: usize, b: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for d in (0..len).rev() {
        out[d] = idx % b;
        idx /= b;
    }
    out
}

/// Center of bin `k` for `[-1, 1]` split into `b` bins.
pub fn center(k: usize, b: usize) -> f64 {
    -1.0 + (k as f64 + 0.5) * 2.0 / b as f64
}

/// Random last-head table `q[index_of(a)]` for all `b^n` sequences.
pub fn random_table(n: usize, b: usize, rng: &mut Rng) -> Vec<f64> {
    (0..b.pow(n as u32))
        .map(|_| rng.random_range(-1.0..1.0))
        .collect()
}

/// Backward-max chain from a full table: `chain[i][index_of(prefix)]` is the
/// `b` values of head `i` after the length-`i` prefix.
pub fn backward_max_chain(n: usize, b: usize, table: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let mut levels: Vec<Vec<f64>> = vec![table.to_vec()];
    for _ in 1..n {
        let prev = levels.last().unwrap();
        let next: Vec<f64> = prev
            .chunks(b)
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        levels.push(next);
    }
    levels.reverse();
    // levels[i] has b^(i+1) entries: head i values indexed by prefix + own bin.
    levels
        .into_iter()
        .map(|flat| flat.chunks(b).map(|c| c.to_vec()).collect())
        .collect()
}

fn set(store: &mut ParameterStore, name: &str, f: impl FnOnce(&mut Tensor)) {
    let t = store
        .get_mut(name)
        .unwrap_or_else(|e| panic!("{name}: {e}"));
    f(t)
}

fn zero(store: &mut ParameterStore, name: &str) {
    set(store, name, |t| {
        t.data_mut().iter_mut().for_each(|x| *x = 0.0)
    });
}

fn put(t: &mut Tensor, r: usize, c: usize, v: f64) {
    let cols = t.cols();
    t.data_mut()[r * cols + c] = v;
}

/// Programs untied head `i` under `prefix` (e.g. `heads/`) to output
/// `table[index_of(prefix bins)]`. Needs `embedding >= b` and
/// `hidden >= b^i`.
pub fn program_untied_head(
    store: &mut ParameterStore,
    prefix: &str,
    i: usize,
    b: usize,
    table: &[Vec<f64>],
) {
    let p = format!("{prefix}{i}/");
    let e = store.get(&format!("{p}state.w")).unwrap().cols();
    zero(store, &format!("{p}state.w"));
    zero(store, &format!("{p}state.b"));
    for j in 0..i {
        let w = format!("{p}prior{j}.w");
        zero(store, &w);
        zero(store, &format!("{p}prior{j}.b"));
        set(store, &w, |t| (0..b).for_each(|k| put(t, 1 + k, k, 1.0)));
    }
    for l in 0..3 {
        zero(store, &format!("{p}body.l{l}.w"));
        zero(store, &format!("{p}body.l{l}.b"));
    }
    if i == 0 {
        set(store, &format!("{p}body.l2.b"), |t| {
            t.data_mut().copy_from_slice(&table[0])
        });
        return;
    }
    let combos = b.pow(i as u32);
    set(store, &format!("{p}body.l0.w"), |t| {
        for c in 0..combos {
            for (j, &k) in digits(c, i, b).iter().enumerate() {
                put(t, (j + 1) * e + k, c, 1.0);
            }
        }
    });
    set(store, &format!("{p}body.l0.b"), |t| {
        (0..combos).for_each(|c| t.data_mut()[c] = -(i as f64 - 1.0))
    });
    set(store, &format!("{p}body.l1.w"), |t| {
        (0..combos).for_each(|c| put(t, c, c, 1.0))
    });
    set(store, &format!("{p}body.l2.w"), |t| {
        for (c, row) in table.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                put(t, c, k, v);
            }
        }
    });
}

/// Programs every untied head from a backward-max style chain.
pub fn program_untied_heads(
    store: &mut ParameterStore,
    prefix: &str,
    b: usize,
    chain: &[Vec<Vec<f64>>],
) {
    for (i, table) in chain.iter().enumerate() {
        program_untied_head(store, prefix, i, b, table);
    }
}

/// Programs the double network under `prefix` (e.g. `qd/`) so that
/// `Q^D(s, a) = table[index_of(bins(a))]`. Needs `embedding >= b^n` and
/// `hidden >= b^n`.
pub fn program_double_q(
    store: &mut ParameterStore,
    prefix: &str,
    n: usize,
    b: usize,
    table: &[f64],
) {
    let e = store.get(&format!("{prefix}state.w")).unwrap().cols();
    for name in ["state", "action", "hidden", "out"] {
        zero(store, &format!("{prefix}{name}.w"));
        zero(store, &format!("{prefix}{name}.b"));
    }
    let combos = b.pow(n as u32);
    set(store, &format!("{prefix}action.w"), |t| {
        for c in 0..combos {
            for (j, &k) in digits(c, n, b).iter().enumerate() {
                put(t, n + j * b + k, c, 1.0);
            }
        }
    });
    set(store, &format!("{prefix}action.b"), |t| {
        (0..combos).for_each(|c| t.data_mut()[c] = -(n as f64 - 1.0))
    });
    set(store, &format!("{prefix}hidden.w"), |t| {
        (0..combos).for_each(|c| put(t, e + c, c, 1.0))
    });
    set(store, &format!("{prefix}out.w"), |t| {
        (0..combos).for_each(|c| put(t, c, 0, table[c]))
    });
}

/// A constant double network `Q^D = c`.
pub fn program_constant_q(store: &mut ParameterStore, prefix: &str, c: f64) {
    for name in ["state", "action", "hidden", "out"] {
        zero(store, &format!("{prefix}{name}.w"));
        zero(store, &format!("{prefix}{name}.b"));
    }
    set(store, &format!("{prefix}out.b"), |t| t.data_mut()[0] = c);
}

pub fn transition(action: Vec<f64>, reward: f64, terminal: bool, discount: f64) -> Transition {
    Transition {
        state: vec![0.0],
        action,
        reward,
        next_state: vec![0.0],
        terminal,
        discount,
    }
}

/// Central finite difference of `f` with respect to one entry of a named
/// parameter.
pub fn finite_difference(
    store: &ParameterStore,
    name: &str,
    index: usize,
    h: f64,
    mut f: impl FnMut(&ParameterStore) -> f64,
) -> f64 {
    let mut plus = store.clone();
    plus.get_mut(name).unwrap().data_mut()[index] += h;
    let mut minus = store.clone();
    minus.get_mut(name).unwrap().data_mut()[index] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

/// `|a - n| / max(|a|, |n|, floor)`; the floor keeps round-off on
/// vanishing gradients from dominating.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}
