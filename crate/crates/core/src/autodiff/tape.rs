//! Reverse-mode automatic differentiation over rank-2 tensors.
//!
//! A [`Tape`] records every primitive in evaluation order while the forward
//! pass runs, so the record is topologically sorted by construction. Calling
//! [`Tape::backward`] consumes the tape, walks it once in reverse and returns
//! the parameter gradients. Tapes are per-loss: build, differentiate, drop.

use super::params::{Gradients, ParameterStore};
use super::tensor::Tensor;
use crate::error::{dim_err, Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(usize),
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    Square(Var),
    Softmax(Var),
    LogSoftmax(Var),
    Mean(Var),
    Sum(Var),
    SumCols(Var),
    Concat(Vec<Var>),
    Slice { src: Var, start: usize },
    Gather { src: Var, index: Vec<usize> },
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

pub struct Tape<'a> {
    params: &'a ParameterStore,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
    frozen: Vec<String>,
}

impl<'a> Tape<'a> {
    pub fn new(params: &'a ParameterStore) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            param_vars: vec![None; params.len()],
            frozen: Vec::new(),
        }
    }

    /// Parameters whose names start with `prefix` enter the tape as constants,
    /// so no gradient ever reaches them.
    pub fn freeze(mut self, prefix: impl Into<String>) -> Self {
        self.frozen.push(prefix.into());
        self
    }

    pub fn store(&self) -> &'a ParameterStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Op::Constant, value)
    }

    pub fn param(&mut self, name: &str) -> Result<Var> {
        let id = self
            .params
            .id(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        if let Some(v) = self.param_vars[id] {
            return Ok(v);
        }
        let value = self.params.tensor(id).clone();
        let op = if self.frozen.iter().any(|p| name.starts_with(p.as_str())) {
            Op::Constant
        } else {
            Op::Param(id)
        };
        let v = self.push(op, value);
        self.param_vars[id] = Some(v);
        Ok(v)
    }

    fn dims(&self, v: Var) -> (usize, usize) {
        let t = self.value(v);
        (t.rows(), t.cols())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims(a);
        let (k2, n) = self.dims(b);
        if k != k2 {
            return Err(dim_err("matmul inner dimension", k, k2));
        }
        let out = matmul_raw(self.value(a).data(), m, k, self.value(b).data(), n);
        Ok(self.push(Op::MatMul(a, b), Tensor::matrix(m, n, out)?))
    }

    /// `x[m, n] + b[1, n]`, broadcasting `b` over rows.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (m, n) = self.dims(x);
        let bt = self.value(b);
        if bt.len() != n {
            return Err(dim_err("bias width", n, bt.len()));
        }
        let bd = bt.data();
        let mut out = self.value(x).data().to_vec();
        for row in out.chunks_exact_mut(n) {
            for (o, bv) in row.iter_mut().zip(bd) {
                *o += bv;
            }
        }
        Ok(self.push(Op::AddRow(x, b), Tensor::matrix(m, n, out)?))
    }

    fn same_shape(&self, a: Var, b: Var, ctx: &str) -> Result<()> {
        let (sa, sb) = (self.dims(a), self.dims(b));
        if sa != sb {
            return Err(dim_err(ctx, format!("{sa:?}"), format!("{sb:?}")));
        }
        Ok(())
    }

    fn binary(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let (m, n) = self.dims(a);
        let out = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        self.push(op, Tensor::matrix(m, n, out).expect("binary shape"))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        Ok(self.binary(a, b, Op::Add(a, b), |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        Ok(self.binary(a, b, Op::Sub(a, b), |x, y| x - y))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        Ok(self.binary(a, b, Op::Mul(a, b), |x, y| x * y))
    }

    fn unary(&mut self, x: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let value = self.value(x).map(f);
        self.push(op, value)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.unary(x, Op::Scale(x, c), |v| c * v)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, Op::Relu(x), |v| v.max(0.0))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, Op::Tanh(x), f64::tanh)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, Op::Sigmoid(x), sigmoid)
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(x, Op::Exp(x), f64::exp)
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.unary(x, Op::Square(x), |v| v * v)
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, x: Var) -> Var {
        let (m, n) = self.dims(x);
        let mut out = self.value(x).data().to_vec();
        for row in out.chunks_exact_mut(n) {
            softmax_in_place(row);
        }
        self.push(Op::Softmax(x), Tensor::matrix(m, n, out).expect("softmax"))
    }

    /// Row-wise log-softmax.
    pub fn log_softmax(&mut self, x: Var) -> Var {
        let (m, n) = self.dims(x);
        let mut out = self.value(x).data().to_vec();
        for row in out.chunks_exact_mut(n) {
            let lse = log_sum_exp(row);
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        self.push(
            Op::LogSoftmax(x),
            Tensor::matrix(m, n, out).expect("log_softmax"),
        )
    }

    /// Mean of all elements, as a `[1, 1]` scalar.
    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let v = t.data().iter().sum::<f64>() / t.len() as f64;
        self.push(Op::Mean(x), Tensor::scalar(v))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let v = self.value(x).data().iter().sum::<f64>();
        self.push(Op::Sum(x), Tensor::scalar(v))
    }

    /// Sums each row, producing `[m, 1]`.
    pub fn sum_cols(&mut self, x: Var) -> Var {
        let (m, n) = self.dims(x);
        let out = self
            .value(x)
            .data()
            .chunks_exact(n)
            .map(|r| r.iter().sum())
            .collect();
        self.push(Op::SumCols(x), Tensor::matrix(m, 1, out).expect("sum_cols"))
    }

    /// Concatenates along columns; all inputs must have the same row count.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(dim_err("concat", "at least one input", 0));
        };
        let m = self.dims(first).0;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.dims(p);
            if r != m {
                return Err(dim_err("concat rows", m, r));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(m * total);
        for i in 0..m {
            for &p in parts {
                out.extend_from_slice(self.value(p).row(i));
            }
        }
        Ok(self.push(Op::Concat(parts.to_vec()), Tensor::matrix(m, total, out)?))
    }

    /// Columns `start..start + len`.
    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let (m, n) = self.dims(x);
        if len == 0 || start + len > n {
            return Err(dim_err(
                "slice",
                format!("range within {n} columns"),
                format!("{start}..{}", start + len),
            ));
        }
        let t = self.value(x);
        let mut out = Vec::with_capacity(m * len);
        for i in 0..m {
            out.extend_from_slice(&t.row(i)[start..start + len]);
        }
        Ok(self.push(Op::Slice { src: x, start }, Tensor::matrix(m, len, out)?))
    }

    /// Picks column `index[i]` from row `i`, producing `[m, 1]`.
    pub fn gather(&mut self, x: Var, index: &[usize]) -> Result<Var> {
        let (m, n) = self.dims(x);
        if index.len() != m {
            return Err(dim_err("gather index length", m, index.len()));
        }
        if let Some(&bad) = index.iter().find(|&&k| k >= n) {
            return Err(dim_err("gather column", format!("< {n}"), bad));
        }
        let t = self.value(x);
        let out = index
            .iter()
            .enumerate()
            .map(|(i, &k)| t.get(i, k))
            .collect();
        Ok(self.push(
            Op::Gather {
                src: x,
                index: index.to_vec(),
            },
            Tensor::matrix(m, 1, out)?,
        ))
    }

    /// Mean squared difference between `x` and a constant target of the same shape.
    pub fn mse_to(&mut self, x: Var, target: Tensor) -> Result<Var> {
        let t = self.constant(target);
        let d = self.sub(x, t)?;
        let sq = self.square(d);
        Ok(self.mean(sq))
    }

    pub fn backward(self, loss: Var) -> Result<Gradients> {
        Ok(self.backward_with(loss, &[])?.0)
    }

    /// Backpropagates from a scalar `loss`, also returning the gradient at each
    /// node in `wrt` (constants included).
    pub fn backward_with(self, loss: Var, wrt: &[Var]) -> Result<(Gradients, Vec<Tensor>)> {
        let lt = self.value(loss);
        if lt.len() != 1 {
            return Err(Error::NonScalarLoss(lt.shape().to_vec()));
        }
        let n = self.nodes.len();
        let mut needs = vec![false; n];
        for &w in wrt {
            needs[w.0] = true;
        }
        for (i, node) in self.nodes.iter().enumerate().take(loss.0 + 1) {
            if needs[i] {
                continue;
            }
            needs[i] = match &node.op {
                Op::Constant => false,
                Op::Param(_) => true,
                op => inputs(op).iter().any(|v| needs[v.0]),
            };
        }

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; n];
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients::empty(self.params.len());

        for i in (0..=loss.0).rev() {
            if !needs[i] {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let y = &node.value;
            match &node.op {
                Op::Constant => {
                    grads[i] = Some(g);
                }
                Op::Param(id) => {
                    out.accumulate(*id, &g, y.shape());
                    grads[i] = Some(g);
                }
                Op::MatMul(a, b) => {
                    let (m, k) = self.dims(*a);
                    let nn = y.cols();
                    if needs[a.0] {
                        let bd = self.value(*b).data();
                        let mut da = vec![0.0; m * k];
                        for r in 0..m {
                            let gr = &g[r * nn..(r + 1) * nn];
                            for kk in 0..k {
                                let br = &bd[kk * nn..(kk + 1) * nn];
                                da[r * k + kk] = dot(gr, br);
                            }
                        }
                        add_grad(&mut grads, *a, &da);
                    }
                    if needs[b.0] {
                        let ad = self.value(*a).data();
                        let mut db = vec![0.0; k * nn];
                        for r in 0..m {
                            let gr = &g[r * nn..(r + 1) * nn];
                            for kk in 0..k {
                                let av = ad[r * k + kk];
                                if av != 0.0 {
                                    axpy(av, gr, &mut db[kk * nn..(kk + 1) * nn]);
                                }
                            }
                        }
                        add_grad(&mut grads, *b, &db);
                    }
                }
                Op::AddRow(x, b) => {
                    let nn = y.cols();
                    if needs[b.0] {
                        let mut db = vec![0.0; nn];
                        for row in g.chunks_exact(nn) {
                            axpy(1.0, row, &mut db);
                        }
                        add_grad(&mut grads, *b, &db);
                    }
                    if needs[x.0] {
                        add_grad(&mut grads, *x, &g);
                    }
                }
                Op::Add(a, b) => {
                    if needs[a.0] {
                        add_grad(&mut grads, *a, &g);
                    }
                    if needs[b.0] {
                        add_grad(&mut grads, *b, &g);
                    }
                }
                Op::Sub(a, b) => {
                    if needs[a.0] {
                        add_grad(&mut grads, *a, &g);
                    }
                    if needs[b.0] {
                        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                        add_grad(&mut grads, *b, &neg);
                    }
                }
                Op::Mul(a, b) => {
                    if needs[a.0] {
                        let d: Vec<f64> = g
                            .iter()
                            .zip(self.value(*b).data())
                            .map(|(g, y)| g * y)
                            .collect();
                        add_grad(&mut grads, *a, &d);
                    }
                    if needs[b.0] {
                        let d: Vec<f64> = g
                            .iter()
                            .zip(self.value(*a).data())
                            .map(|(g, x)| g * x)
                            .collect();
                        add_grad(&mut grads, *b, &d);
                    }
                }
                Op::Scale(x, c) => {
                    let d: Vec<f64> = g.iter().map(|v| c * v).collect();
                    add_grad(&mut grads, *x, &d);
                }
                Op::Relu(x) => {
                    let d: Vec<f64> = g
                        .iter()
                        .zip(self.value(*x).data())
                        .map(|(g, &x)| if x > 0.0 { *g } else { 0.0 })
                        .collect();
                    add_grad(&mut grads, *x, &d);
                }
                Op::Tanh(x) => {
                    let d: Vec<f64> = g
                        .iter()
                        .zip(y.data())
                        .map(|(g, y)| g * (1.0 - y * y))
                        .collect();
                    add_grad(&mut grads, *x, &d);
                }
                Op::Sigmoid(x) => {
                    let d: Vec<f64> = g
                        .iter()
                        .zip(y.data())
                        .map(|(g, y)| g * y * (1.0 - y))
                        .collect();
                    add_grad(&mut grads, *x, &d);
                }
                Op::Exp(x) => {
                    let d: Vec<f64> = g.iter().zip(y.data()).map(|(g, y)| g * y).collect();
                    add_grad(&mut grads, *x, &d);
                }
                Op::Square(x) => {
                    let d: Vec<f64> = g
                        .iter()
                        .zip(self.value(*x).data())
                        .map(|(g, x)| 2.0 * x * g)
                        .collect();
                    add_grad(&mut grads, *x, &d);
                }
                Op::Softmax(x) => {
                    let nn = y.cols();
                    let mut d = Vec::with_capacity(g.len());
                    for (gr, yr) in g.chunks_exact(nn).zip(y.data().chunks_exact(nn)) {
                        let s = dot(gr, yr);
                        d.extend(gr.iter().zip(yr).map(|(g, y)| y * (g - s)));
                    }
                    add_grad(&mut grads, *x, &d);
                }
                Op::LogSoftmax(x) => {
                    let nn = y.cols();
                    let mut d = Vec::with_capacity(g.len());
                    for (gr, yr) in g.chunks_exact(nn).zip(y.data().chunks_exact(nn)) {
                        let s: f64 = gr.iter().sum();
                        d.extend(gr.iter().zip(yr).map(|(g, ly)| g - ly.exp() * s));
                    }
                    add_grad(&mut grads, *x, &d);
                }
                Op::Mean(x) => {
                    let len = self.value(*x).len();
                    let d = vec![g[0] / len as f64; len];
                    add_grad(&mut grads, *x, &d);
                }
                Op::Sum(x) => {
                    let d = vec![g[0]; self.value(*x).len()];
                    add_grad(&mut grads, *x, &d);
                }
                Op::SumCols(x) => {
                    let nn = self.value(*x).cols();
                    let d: Vec<f64> = g
                        .iter()
                        .flat_map(|&gv| std::iter::repeat_n(gv, nn))
                        .collect();
                    add_grad(&mut grads, *x, &d);
                }
                Op::Concat(parts) => {
                    let total = y.cols();
                    let mut offset = 0;
                    for p in parts {
                        let (m, w) = self.dims(*p);
                        if needs[p.0] {
                            let mut d = Vec::with_capacity(m * w);
                            for r in 0..m {
                                d.extend_from_slice(&g[r * total + offset..r * total + offset + w]);
                            }
                            add_grad(&mut grads, *p, &d);
                        }
                        offset += w;
                    }
                }
                Op::Slice { src, start } => {
                    let (m, n_src) = self.dims(*src);
                    let w = y.cols();
                    let mut d = vec![0.0; m * n_src];
                    for r in 0..m {
                        d[r * n_src + start..r * n_src + start + w]
                            .copy_from_slice(&g[r * w..(r + 1) * w]);
                    }
                    add_grad(&mut grads, *src, &d);
                }
                Op::Gather { src, index } => {
                    let (m, n_src) = self.dims(*src);
                    let mut d = vec![0.0; m * n_src];
                    for (r, &k) in index.iter().enumerate() {
                        d[r * n_src + k] = g[r];
                    }
                    add_grad(&mut grads, *src, &d);
                }
            }
        }

        let mut wrt_grads = Vec::with_capacity(wrt.len());
        for &w in wrt {
            let shape = self.value(w).shape().to_vec();
            let data = grads[w.0]
                .clone()
                .unwrap_or_else(|| vec![0.0; shape.iter().product()]);
            wrt_grads.push(Tensor::new(shape, data)?);
        }
        Ok((out, wrt_grads))
    }
}

fn inputs(op: &Op) -> Vec<Var> {
    match op {
        Op::Constant | Op::Param(_) => vec![],
        Op::MatMul(a, b) | Op::AddRow(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => {
            vec![*a, *b]
        }
        Op::Scale(x, _)
        | Op::Relu(x)
        | Op::Tanh(x)
        | Op::Sigmoid(x)
        | Op::Exp(x)
        | Op::Square(x)
        | Op::Softmax(x)
        | Op::LogSoftmax(x)
        | Op::Mean(x)
        | Op::Sum(x)
        | Op::SumCols(x) => vec![*x],
        Op::Concat(parts) => parts.clone(),
        Op::Slice { src, .. } | Op::Gather { src, .. } => vec![*src],
    }
}

fn add_grad(grads: &mut [Option<Vec<f64>>], v: Var, d: &[f64]) {
    match &mut grads[v.0] {
        Some(acc) => axpy(1.0, d, acc),
        slot @ None => *slot = Some(d.to_vec()),
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

pub(crate) fn matmul_raw(a: &[f64], m: usize, k: usize, b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for kk in 0..k {
            let av = a[i * k + kk];
            if av != 0.0 {
                axpy(av, &b[kk * n..(kk + 1) * n], orow);
            }
        }
    }
    out
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Numerically stable softmax with max subtraction.
pub fn softmax_in_place(row: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        z += *v;
    }
    for v in row.iter_mut() {
        *v /= z;
    }
}
