//! Network blocks shared by the discretized agents.

use crate::autodiff::{Activation, Linear, LstmCell, Mlp, ParameterStore, Tape, Tensor, Var};
use crate::discretize::Discretizer;
use crate::error::{dim_err, Result};
use crate::Rng;

use super::config::{AgentConfig, HeadParameterization};

/// `[m, 1 + B]`: the bin center followed by a one-hot of the bin.
pub(crate) fn bin_features(disc: &Discretizer, dim: usize, bins: &[usize]) -> Tensor {
    let b = disc.bins();
    let mut data = vec![0.0; bins.len() * (1 + b)];
    for (r, &k) in bins.iter().enumerate() {
        let row = &mut data[r * (1 + b)..(r + 1) * (1 + b)];
        row[0] = disc.center(k, dim);
        row[1 + k] = 1.0;
    }
    Tensor::matrix(bins.len(), 1 + b, data).expect("bin feature shape")
}

/// `[m, N + N * B]`: the continuous action followed by the one-hot bins of
/// every dimension.
pub(crate) fn action_features(disc: &Discretizer, actions: &[Vec<f64>]) -> Tensor {
    let n = disc.dims();
    let b = disc.bins();
    let width = n + n * b;
    let mut data = vec![0.0; actions.len() * width];
    for (r, a) in actions.iter().enumerate() {
        let row = &mut data[r * width..(r + 1) * width];
        for d in 0..n {
            row[d] = a[d];
            row[n + d * b + disc.to_bin(a[d], d)] = 1.0;
        }
    }
    Tensor::matrix(actions.len(), width, data).expect("action feature shape")
}

pub(crate) fn action_feature_width(n: usize, bins: usize) -> usize {
    n + n * bins
}

pub(crate) fn repeat_rows(t: &Tensor, k: usize) -> Tensor {
    let mut data = Vec::with_capacity(t.len() * k);
    for _ in 0..k {
        data.extend_from_slice(t.data());
    }
    Tensor::matrix(t.rows() * k, t.cols(), data).expect("repeat shape")
}

/// Rows of `[m, B]` values as vectors.
pub(crate) fn rows_of(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

/// Maps `tanh` outputs in `[-1, 1]` affinely onto `[low, high]` per column.
pub(crate) fn squash_to_bounds(
    tape: &mut Tape<'_>,
    x: Var,
    low: &[f64],
    high: &[f64],
) -> Result<Var> {
    let m = tape.value(x).rows();
    let half: Vec<f64> = low.iter().zip(high).map(|(l, h)| 0.5 * (h - l)).collect();
    let mid: Vec<f64> = low.iter().zip(high).map(|(l, h)| 0.5 * (h + l)).collect();
    let t = tape.tanh(x);
    let halves = tape.constant(repeat_rows(&Tensor::matrix(1, half.len(), half)?, m));
    let scaled = tape.mul(t, halves)?;
    let mids = tape.constant(Tensor::matrix(1, mid.len(), mid)?);
    tape.add_row(scaled, mids)
}

/// Scalar critic over (state, action): separate embeddings of both, then one
/// hidden layer.
#[derive(Debug, Clone)]
pub(crate) struct DoubleQNet {
    state_embed: Linear,
    action_embed: Linear,
    hidden: Linear,
    out: Linear,
}

impl DoubleQNet {
    pub fn new(
        store: &mut ParameterStore,
        prefix: &str,
        obs_dim: usize,
        action_width: usize,
        embedding: usize,
        hidden: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        Ok(Self {
            state_embed: Linear::new(store, &format!("{prefix}state"), obs_dim, embedding, rng)?,
            action_embed: Linear::new(
                store,
                &format!("{prefix}action"),
                action_width,
                embedding,
                rng,
            )?,
            hidden: Linear::new(
                store,
                &format!("{prefix}hidden"),
                2 * embedding,
                hidden,
                rng,
            )?,
            out: Linear::new(store, &format!("{prefix}out"), hidden, 1, rng)?,
        })
    }

    pub fn forward(&self, tape: &mut Tape<'_>, states: Var, actions: Var) -> Result<Var> {
        let s = self.state_embed.forward(tape, states)?;
        let s = tape.relu(s);
        let a = self.action_embed.forward(tape, actions)?;
        let a = tape.relu(a);
        let h = tape.concat(&[s, a])?;
        let h = self.hidden.forward(tape, h)?;
        let h = tape.relu(h);
        self.out.forward(tape, h)
    }

    pub fn eval(
        &self,
        store: &ParameterStore,
        states: &Tensor,
        actions: Tensor,
    ) -> Result<Vec<f64>> {
        let mut tape = Tape::new(store);
        let s = tape.constant(states.clone());
        let a = tape.constant(actions);
        let q = self.forward(&mut tape, s, a)?;
        Ok(tape.value(q).data().to_vec())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct MlpHead {
    state_embed: Linear,
    prior: Vec<Linear>,
    body: Mlp,
}

#[derive(Debug, Clone)]
pub(crate) struct LstmHeads {
    state_init: Vec<Linear>,
    start: String,
    action_embed: Linear,
    cells: Vec<LstmCell>,
    out: Linear,
}

/// The chain of per-dimension heads. Head `i` maps the state and the first
/// `i` chosen bins to `B` values.
#[derive(Debug, Clone)]
pub(crate) enum HeadNet {
    Untied(Vec<MlpHead>),
    Lstm(LstmHeads),
}

impl HeadNet {
    pub fn new(
        store: &mut ParameterStore,
        prefix: &str,
        parameterization: HeadParameterization,
        obs_dim: usize,
        n: usize,
        cfg: &AgentConfig,
        rng: &mut Rng,
    ) -> Result<Self> {
        let b = cfg.bins;
        let e = cfg.embedding_size;
        match parameterization {
            HeadParameterization::UntiedMlp => {
                let heads = (0..n)
                    .map(|i| {
                        let p = format!("{prefix}{i}/");
                        Ok(MlpHead {
                            state_embed: Linear::new(store, &format!("{p}state"), obs_dim, e, rng)?,
                            prior: (0..i)
                                .map(|j| Linear::new(store, &format!("{p}prior{j}"), 1 + b, e, rng))
                                .collect::<Result<_>>()?,
                            body: Mlp::new(
                                store,
                                &format!("{p}body"),
                                &[(i + 1) * e, cfg.hidden_size, cfg.hidden_size, b],
                                Activation::Relu,
                                Activation::None,
                                rng,
                            )?,
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(HeadNet::Untied(heads))
            }
            HeadParameterization::Lstm => Self::lstm(store, prefix, obs_dim, cfg, rng),
        }
    }

    /// Tied LSTM stepped once per dimension. The state sets the initial
    /// hidden vector of each layer; the first input is a learned vector and
    /// later inputs embed the previously chosen bin.
    pub fn lstm(
        store: &mut ParameterStore,
        prefix: &str,
        obs_dim: usize,
        cfg: &AgentConfig,
        rng: &mut Rng,
    ) -> Result<Self> {
        let e = cfg.embedding_size;
        let h = cfg.lstm_hidden_size;
        let start = format!("{prefix}start");
        store.insert_uniform(&start, &[1, e], 1.0 / (e as f64).sqrt(), rng)?;
        Ok(HeadNet::Lstm(LstmHeads {
            state_init: (0..cfg.lstm_layers)
                .map(|l| Linear::new(store, &format!("{prefix}init{l}"), obs_dim, h, rng))
                .collect::<Result<_>>()?,
            start,
            action_embed: Linear::new(store, &format!("{prefix}embed"), 1 + cfg.bins, e, rng)?,
            cells: (0..cfg.lstm_layers)
                .map(|l| {
                    LstmCell::new(
                        store,
                        &format!("{prefix}cell{l}"),
                        if l == 0 { e } else { h },
                        h,
                        rng,
                    )
                })
                .collect::<Result<_>>()?,
            out: Linear::new(store, &format!("{prefix}out"), h, cfg.bins, rng)?,
        }))
    }

    /// Values of head `i` given the first `i` bins of each prefix row.
    pub fn head(
        &self,
        tape: &mut Tape<'_>,
        disc: &Discretizer,
        states: Var,
        prefix: &[Vec<usize>],
        i: usize,
    ) -> Result<Var> {
        match self {
            HeadNet::Untied(heads) => {
                let h = &heads[i];
                let s = h.state_embed.forward(tape, states)?;
                let mut parts = vec![tape.relu(s)];
                for (j, layer) in h.prior.iter().enumerate() {
                    let col: Vec<usize> = prefix.iter().map(|p| p[j]).collect();
                    let x = tape.constant(bin_features(disc, j, &col));
                    let y = layer.forward(tape, x)?;
                    parts.push(tape.relu(y));
                }
                let x = tape.concat(&parts)?;
                h.body.forward(tape, x)
            }
            HeadNet::Lstm(_) => Ok(self.heads(tape, disc, states, prefix, i + 1)?[i]),
        }
    }

    /// Values of heads `0..count`, each conditioned on the prefix bins
    /// (teacher forcing).
    pub fn heads(
        &self,
        tape: &mut Tape<'_>,
        disc: &Discretizer,
        states: Var,
        prefix: &[Vec<usize>],
        count: usize,
    ) -> Result<Vec<Var>> {
        match self {
            HeadNet::Untied(_) => (0..count)
                .map(|i| self.head(tape, disc, states, prefix, i))
                .collect(),
            HeadNet::Lstm(net) => {
                let m = tape.value(states).rows();
                let hidden = net.cells[0].hidden;
                let mut hs = Vec::with_capacity(net.cells.len());
                let mut cs = Vec::with_capacity(net.cells.len());
                for init in &net.state_init {
                    let z = init.forward(tape, states)?;
                    hs.push(tape.tanh(z));
                    cs.push(tape.constant(Tensor::zeros(&[m, hidden])));
                }
                let start = tape.param(&net.start)?;
                let zeros = tape.constant(Tensor::zeros(&[m, tape.value(start).cols()]));
                let mut input = tape.add_row(zeros, start)?;
                let mut outs = Vec::with_capacity(count);
                for i in 0..count {
                    if i > 0 {
                        let col: Vec<usize> = prefix.iter().map(|p| p[i - 1]).collect();
                        let x = tape.constant(bin_features(disc, i - 1, &col));
                        let y = net.action_embed.forward(tape, x)?;
                        input = tape.relu(y);
                    }
                    let mut x = input;
                    for (l, cell) in net.cells.iter().enumerate() {
                        let (h, c) = cell.forward(tape, x, hs[l], cs[l])?;
                        hs[l] = h;
                        cs[l] = c;
                        x = h;
                    }
                    outs.push(net.out.forward(tape, x)?);
                }
                Ok(outs)
            }
        }
    }
}

/// Decodes one bin per dimension, head by head, letting `choose` pick each
/// row's bin from that head's values. Later heads see the earlier choices.
pub(crate) fn decode_sequential(
    net: &HeadNet,
    store: &ParameterStore,
    disc: &Discretizer,
    states: &Tensor,
    mut choose: impl FnMut(usize, usize, &[f64]) -> Result<usize>,
) -> Result<Vec<Vec<usize>>> {
    let m = states.rows();
    let n = disc.dims();
    let mut prefix: Vec<Vec<usize>> = vec![Vec::with_capacity(n); m];
    let mut tape = Tape::new(store);
    let s = tape.constant(states.clone());
    for i in 0..n {
        let v = net.head(&mut tape, disc, s, &prefix, i)?;
        let vals = tape.value(v);
        if vals.cols() != disc.bins() {
            return Err(dim_err("head output", disc.bins(), vals.cols()));
        }
        for (r, p) in prefix.iter_mut().enumerate() {
            p.push(choose(r, i, vals.row(r))?);
        }
    }
    Ok(prefix)
}
