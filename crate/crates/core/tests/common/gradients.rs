//! Gradient-check cases. Each case builds one random configuration from a
//! seed and returns the worst relative error between reverse-mode gradients
//! and central finite differences.

use rand::Rng as _;
use sdqn_core::agents::{
    AddSdqn, Agent, AgentConfig, Ddpg, Idqn, Naf, ProbSdqn, Sdqn, HEADS_PREFIX, QD_PREFIX,
};
use sdqn_core::autodiff::{Activation, Gradients, LstmCell, Mlp, ParameterStore, Tape, Tensor};
use sdqn_core::env::Transition;
use sdqn_core::Rng;

use super::{finite_difference, relative_error, rng, unit_spec};

const H: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Entries sampled per agent parameter; layer cases check every entry.
const ENTRIES: usize = 6;

pub type Case = fn(u64) -> f64;

pub const LAYER_CASES: &[(&str, Case)] = &[("mlp", mlp), ("lstm", lstm), ("ops", ops)];

pub const LOSS_CASES: &[(&str, Case)] = &[
    ("sequential td", sequential_td),
    ("sequential heads", sequential_heads),
    ("additive matching", additive_matching),
    ("policy surrogate", policy_surrogate),
    ("independent td", independent_td),
    ("quadratic td", quadratic_td),
    ("actor-critic critic", ddpg_critic),
    ("actor-critic actor", ddpg_actor),
];

fn random_tensor(rows: usize, cols: usize, r: &mut Rng) -> Tensor {
    Tensor::matrix(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| r.random_range(-1.0..1.0))
            .collect(),
    )
    .unwrap()
}

/// Worst relative error over up to `per_param` random entries of every
/// parameter whose name starts with `prefix`.
fn check(
    store: &ParameterStore,
    grads: &Gradients,
    prefix: &str,
    per_param: usize,
    r: &mut Rng,
    mut f: impl FnMut(&ParameterStore) -> f64,
) -> f64 {
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (name, t) in store.iter().filter(|(n, _)| n.starts_with(prefix)) {
        let analytic = grads.by_name(store, name);
        let picks: Vec<usize> = if t.len() <= per_param {
            (0..t.len()).collect()
        } else {
            (0..per_param).map(|_| r.random_range(0..t.len())).collect()
        };
        for i in picks {
            let a = analytic.map_or(0.0, |g| g.data()[i]);
            let n = finite_difference(store, name, i, H, &mut f);
            worst = worst.max(relative_error(a, n));
            checked += 1;
        }
    }
    assert!(checked > 0, "no parameters under {prefix}");
    worst
}

pub fn mlp(seed: u64) -> f64 {
    let acts = [Activation::Relu, Activation::Tanh, Activation::None];
    let mut r = rng(seed);
    let mut store = ParameterStore::new();
    let hidden = acts[seed as usize % 3];
    let out = acts[(seed as usize / 3) % 3];
    let mlp = Mlp::new(&mut store, "mlp", &[3, 5, 4, 2], hidden, out, &mut r).unwrap();
    let x = random_tensor(4, 3, &mut r);
    let y = random_tensor(4, 2, &mut r);
    let loss = |s: &ParameterStore| {
        let mut tape = Tape::new(s);
        let xv = tape.constant(x.clone());
        let o = mlp.forward(&mut tape, xv).unwrap();
        let l = tape.mse_to(o, y.clone()).unwrap();
        (tape.value(l).item(), tape.backward(l).unwrap())
    };
    let (_, grads) = loss(&store);
    check(&store, &grads, "mlp", 1000, &mut r, |s| loss(s).0)
}

pub fn lstm(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut store = ParameterStore::new();
    let cell = LstmCell::new(&mut store, "cell", 3, 4, &mut r).unwrap();
    let xs = [random_tensor(2, 3, &mut r), random_tensor(2, 3, &mut r)];
    let h0 = random_tensor(2, 4, &mut r);
    let c0 = random_tensor(2, 4, &mut r);
    let loss = |s: &ParameterStore| {
        let mut tape = Tape::new(s);
        let mut h = tape.constant(h0.clone());
        let mut c = tape.constant(c0.clone());
        for x in &xs {
            let xv = tape.constant(x.clone());
            (h, c) = cell.forward(&mut tape, xv, h, c).unwrap();
        }
        let hs = tape.square(h);
        let a = tape.sum(hs);
        let b = tape.mean(c);
        let l = tape.add(a, b).unwrap();
        (tape.value(l).item(), tape.backward(l).unwrap())
    };
    let (_, grads) = loss(&store);
    check(&store, &grads, "cell", 1000, &mut r, |s| loss(s).0)
}

/// Every elementwise and structural tape op feeding one scalar.
pub fn ops(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut store = ParameterStore::new();
    store.insert("p", random_tensor(3, 4, &mut r)).unwrap();
    store.insert("q", random_tensor(3, 4, &mut r)).unwrap();
    store.insert("b", random_tensor(1, 4, &mut r)).unwrap();
    store.insert("w", random_tensor(4, 3, &mut r)).unwrap();
    let idx: Vec<usize> = (0..3).map(|_| r.random_range(0..4)).collect();
    let loss = |s: &ParameterStore| {
        let mut t = Tape::new(s);
        let (p, q, b, w) = (
            t.param("p").unwrap(),
            t.param("q").unwrap(),
            t.param("b").unwrap(),
            t.param("w").unwrap(),
        );
        let pq = t.mul(p, q).unwrap();
        let shifted = t.add_row(pq, b).unwrap();
        let sm = t.softmax(shifted);
        let ls = t.log_softmax(q);
        let picked = t.gather(ls, &idx).unwrap();
        let e = t.exp(p);
        let th = t.tanh(e);
        let diff = t.sub(th, sm).unwrap();
        let both = t.concat(&[diff, q]).unwrap();
        let part = t.slice(both, 2, 5).unwrap();
        let sq = t.square(part);
        let rows = t.sum_cols(sq);
        let proj = t.matmul(p, w).unwrap();
        let sig = t.sigmoid(proj);
        let sig_sum = t.sum_cols(sig);
        let scaled = t.scale(sig_sum, 0.3);
        let relu = t.relu(shifted);
        let relu_m = t.mean(relu);
        let total = t.add(rows, scaled).unwrap();
        let total = t.add(total, picked).unwrap();
        let mean = t.mean(total);
        let l = t.add(mean, relu_m).unwrap();
        (t.value(l).item(), t.backward(l).unwrap())
    };
    let (_, grads) = loss(&store);
    check(&store, &grads, "", 1000, &mut r, |s| loss(s).0)
}

fn small(bins: usize) -> AgentConfig {
    AgentConfig {
        bins,
        hidden_size: 6,
        embedding_size: 5,
        lstm_hidden_size: 5,
        actor_hidden: [6, 5],
        critic_hidden: [6, 5],
        drag_coefficient: 0.3,
        critic_grad_clip: None,
        l2: 0.0,
        ..AgentConfig::default()
    }
}

fn random_batch(obs: usize, n: usize, len: usize, r: &mut Rng) -> Vec<Transition> {
    (0..len)
        .map(|_| Transition {
            state: (0..obs).map(|_| r.random_range(-1.0..1.0)).collect(),
            action: (0..n).map(|_| r.random_range(-1.0..1.0)).collect(),
            reward: r.random_range(-1.0..1.0),
            next_state: (0..obs).map(|_| r.random_range(-1.0..1.0)).collect(),
            terminal: r.random_bool(0.25),
            discount: 0.9,
        })
        .collect()
}

/// Moves every target parameter away from its online value so the terms that
/// compare online and target outputs are not trivially zero.
fn jitter_target(agent: &mut dyn Agent, r: &mut Rng) {
    let (_, target) = agent.stores_mut();
    let names: Vec<String> = target.iter().map(|(n, _)| n.to_string()).collect();
    for name in names {
        target
            .get_mut(&name)
            .unwrap()
            .data_mut()
            .iter_mut()
            .for_each(|x| *x += r.random_range(-0.1..0.1));
    }
}

fn sequential(seed: u64) -> (Sdqn, Vec<Transition>, Rng) {
    let mut r = rng(seed);
    let mut a = Sdqn::new(&unit_spec(3, 3), small(4), &mut r).unwrap();
    jitter_target(&mut a, &mut r);
    let batch = random_batch(3, 3, 5, &mut r);
    (a, batch, r)
}

pub fn sequential_td(seed: u64) -> f64 {
    let (a, batch, mut r) = sequential(seed);
    let y = a.td_targets(&batch).unwrap();
    let (_, _, grads) = a.critic_objective(a.stores().0, &batch, &y).unwrap();
    check(a.stores().0, &grads, QD_PREFIX, ENTRIES, &mut r, |s| {
        a.critic_objective(s, &batch, &y).unwrap().1
    })
}

/// The full heads objective: base, replay-action, inner and greedy terms.
pub fn sequential_heads(seed: u64) -> f64 {
    let (a, batch, mut r) = sequential(seed);
    let (_, grads) = a.heads_objective(a.stores().0, &batch).unwrap();
    check(a.stores().0, &grads, HEADS_PREFIX, ENTRIES, &mut r, |s| {
        a.heads_objective(s, &batch).unwrap().0.total
    })
}

pub fn additive_matching(seed: u64) -> f64 {
    let mut r = rng(1000 + seed);
    let a = AddSdqn::new(&unit_spec(2, 2), small(3), &mut r).unwrap();
    let batch = random_batch(2, 2, 4, &mut r);
    let (_, grads) = a.matching_objective(a.stores().0, &batch).unwrap();
    check(a.stores().0, &grads, "heads/", ENTRIES, &mut r, |s| {
        a.matching_objective(s, &batch).unwrap().0
    })
}

pub fn policy_surrogate(seed: u64) -> f64 {
    let mut r = rng(2000 + seed);
    let mut cfg = small(3);
    cfg.entropy_coefficient = 0.7;
    let a = ProbSdqn::new(&unit_spec(2, 2), cfg, &mut r).unwrap();
    let states = random_tensor(4, 2, &mut r);
    let bins: Vec<Vec<usize>> = (0..4)
        .map(|_| vec![r.random_range(0..3), r.random_range(0..3)])
        .collect();
    let adv: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
    let (_, grads) = a
        .surrogate_objective(a.stores().0, &states, &bins, &adv)
        .unwrap();
    check(a.stores().0, &grads, "policy/", ENTRIES, &mut r, |s| {
        a.surrogate_objective(s, &states, &bins, &adv).unwrap().0
    })
}

pub fn independent_td(seed: u64) -> f64 {
    let mut r = rng(3000 + seed);
    let a = Idqn::new(&unit_spec(3, 2), small(4), &mut r).unwrap();
    let batch = random_batch(3, 2, 5, &mut r);
    let y = a.td_targets(&batch).unwrap();
    let (_, grads) = a.td_objective(a.stores().0, &batch, &y).unwrap();
    check(a.stores().0, &grads, "", ENTRIES, &mut r, |s| {
        a.td_objective(s, &batch, &y).unwrap().0
    })
}

pub fn quadratic_td(seed: u64) -> f64 {
    let mut r = rng(4000 + seed);
    let a = Naf::new(&unit_spec(3, 2), small(4), &mut r).unwrap();
    let batch = random_batch(3, 2, 5, &mut r);
    let y = a.td_targets(&batch).unwrap();
    let (_, grads) = a.td_objective(a.stores().0, &batch, &y).unwrap();
    check(a.stores().0, &grads, "", ENTRIES, &mut r, |s| {
        a.td_objective(s, &batch, &y).unwrap().0
    })
}

pub fn ddpg_critic(seed: u64) -> f64 {
    let mut r = rng(5000 + seed);
    let a = Ddpg::new(&unit_spec(3, 2), small(4), &mut r).unwrap();
    let batch = random_batch(3, 2, 5, &mut r);
    let y = a.td_targets(&batch).unwrap();
    let (_, grads) = a.critic_objective(a.stores().0, &batch, &y).unwrap();
    check(a.stores().0, &grads, "critic/", ENTRIES, &mut r, |s| {
        a.critic_objective(s, &batch, &y).unwrap().0
    })
}

/// Actor gradient against the mean critic value of the actor's own actions.
pub fn ddpg_actor(seed: u64) -> f64 {
    let mut r = rng(6000 + seed);
    let a = Ddpg::new(&unit_spec(3, 2), small(4), &mut r).unwrap();
    let states = random_tensor(5, 3, &mut r);
    let (_, grads) = a.actor_objective(a.stores().0, &states).unwrap();
    check(a.stores().0, &grads, "actor/", ENTRIES, &mut r, |s| {
        let acts = a.actions(s, &states).unwrap();
        let q = a.critic_values(s, &states, &acts).unwrap();
        -q.iter().sum::<f64>() / q.len() as f64
    })
}
