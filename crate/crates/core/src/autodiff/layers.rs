use rand::Rng;

use super::params::ParameterStore;
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{dim_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    None,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape<'_>, x: Var) -> Var {
        match self {
            Activation::Relu => tape.relu(x),
            Activation::Tanh => tape.tanh(x),
            Activation::None => x,
        }
    }
}

/// Fully connected layer `x W + b` with `W: [in, out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: String,
    pub bias: String,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    /// Registers `{prefix}.w` and `{prefix}.b`, both uniform in `±1/sqrt(fan_in)`.
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        prefix: &str,
        input: usize,
        output: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let bound = 1.0 / (input as f64).sqrt();
        let weight = format!("{prefix}.w");
        let bias = format!("{prefix}.b");
        store.insert_uniform(&weight, &[input, output], bound, rng)?;
        store.insert_uniform(&bias, &[1, output], bound, rng)?;
        Ok(Self {
            weight,
            bias,
            input,
            output,
        })
    }

    pub fn forward(&self, tape: &mut Tape<'_>, x: Var) -> Result<Var> {
        let w = tape.param(&self.weight)?;
        let b = tape.param(&self.bias)?;
        let h = tape.matmul(x, w)?;
        tape.add_row(h, b)
    }
}

/// Stack of [`Linear`] layers. `activation` follows every hidden layer and
/// `output_activation` follows the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub activation: Activation,
    pub output_activation: Activation,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        prefix: &str,
        sizes: &[usize],
        activation: Activation,
        output_activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "an MLP needs at least input and output sizes, got {sizes:?}"
            )));
        }
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{prefix}.l{i}"), w[0], w[1], rng))
            .collect::<Result<_>>()?;
        Ok(Self {
            layers,
            activation,
            output_activation,
        })
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].output
    }

    pub fn forward(&self, tape: &mut Tape<'_>, x: Var) -> Result<Var> {
        let mut h = x;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let width = tape.value(h).cols();
            if width != layer.input {
                return Err(dim_err(format!("mlp layer {i} input"), layer.input, width));
            }
            h = layer.forward(tape, h)?;
            let act = if i == last {
                self.output_activation
            } else {
                self.activation
            };
            h = act.apply(tape, h);
        }
        Ok(h)
    }
}

/// Evaluates an MLP whose parameters are named `{prefix}.l{i}.w/b` for the
/// given layer sizes, applying `activation` after every layer.
pub fn forward_mlp(
    params: &ParameterStore,
    input: &Tensor,
    prefix: &str,
    layer_sizes: &[usize],
    activation: Activation,
) -> Result<Tensor> {
    let mlp = Mlp {
        layers: layer_sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear {
                weight: format!("{prefix}.l{i}.w"),
                bias: format!("{prefix}.l{i}.b"),
                input: w[0],
                output: w[1],
            })
            .collect(),
        activation,
        output_activation: activation,
    };
    let mut tape = Tape::new(params);
    let x = tape.constant(input.clone());
    let y = mlp.forward(&mut tape, x)?;
    Ok(tape.value(y).clone())
}

/// Single LSTM cell with fused gate weights, gate order `[i, f, o, g]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub w_input: String,
    pub w_hidden: String,
    pub bias: String,
    pub input: usize,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let bound = 1.0 / (hidden as f64).sqrt();
        let cell = Self {
            w_input: format!("{prefix}.wx"),
            w_hidden: format!("{prefix}.wh"),
            bias: format!("{prefix}.b"),
            input,
            hidden,
        };
        store.insert_uniform(&cell.w_input, &[input, 4 * hidden], bound, rng)?;
        store.insert_uniform(&cell.w_hidden, &[hidden, 4 * hidden], bound, rng)?;
        store.insert_uniform(&cell.bias, &[1, 4 * hidden], bound, rng)?;
        Ok(cell)
    }

    /// One step: returns `(h', c')`, where `h'` is also the cell output.
    pub fn forward(&self, tape: &mut Tape<'_>, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let hw = tape.value(h).cols();
        let cw = tape.value(c).cols();
        if hw != self.hidden || cw != self.hidden {
            return Err(dim_err(
                "lstm state width",
                self.hidden,
                format!("h={hw}, c={cw}"),
            ));
        }
        let xw = tape.value(x).cols();
        if xw != self.input {
            return Err(dim_err("lstm input width", self.input, xw));
        }
        let wx = tape.param(&self.w_input)?;
        let wh = tape.param(&self.w_hidden)?;
        let b = tape.param(&self.bias)?;
        let zx = tape.matmul(x, wx)?;
        let zh = tape.matmul(h, wh)?;
        let z = tape.add(zx, zh)?;
        let z = tape.add_row(z, b)?;
        let n = self.hidden;
        let zi = tape.slice(z, 0, n)?;
        let zf = tape.slice(z, n, n)?;
        let zo = tape.slice(z, 2 * n, n)?;
        let zg = tape.slice(z, 3 * n, n)?;
        let i = tape.sigmoid(zi);
        let f = tape.sigmoid(zf);
        let o = tape.sigmoid(zo);
        let g = tape.tanh(zg);
        let fc = tape.mul(f, c)?;
        let ig = tape.mul(i, g)?;
        let c_next = tape.add(fc, ig)?;
        let tc = tape.tanh(c_next);
        let h_next = tape.mul(o, tc)?;
        Ok((h_next, c_next))
    }
}

/// Evaluates one LSTM step outside of any training tape.
pub fn forward_lstm(
    params: &ParameterStore,
    cell: &LstmCell,
    input: &Tensor,
    state: (&Tensor, &Tensor),
) -> Result<(Tensor, (Tensor, Tensor))> {
    let mut tape = Tape::new(params);
    let x = tape.constant(input.clone());
    let h = tape.constant(state.0.clone());
    let c = tape.constant(state.1.clone());
    let (h2, c2) = cell.forward(&mut tape, x, h, c)?;
    let h2 = tape.value(h2).clone();
    let c2 = tape.value(c2).clone();
    Ok((h2.clone(), (h2, c2)))
}
