use std::collections::HashMap;

use rand::Rng;

use super::tensor::Tensor;
use crate::error::{dim_err, Error, Result};

/// Named parameters in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<usize> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::InvalidArgument(format!(
                "duplicate parameter `{name}`"
            )));
        }
        let id = self.tensors.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.tensors.push(value);
        Ok(id)
    }

    /// Inserts a tensor initialised uniformly in `[-bound, bound]`.
    pub fn insert_uniform<R: Rng + ?Sized>(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        bound: f64,
        rng: &mut R,
    ) -> Result<usize> {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
        self.insert(name, Tensor::new(shape.to_vec(), data)?)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.id(name)
            .map(|i| &self.tensors[i])
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        match self.id(name) {
            Some(i) => Ok(&mut self.tensors[i]),
            None => Err(Error::UnknownParameter(name.to_string())),
        }
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn tensor(&self, id: usize) -> &Tensor {
        &self.tensors[id]
    }

    pub fn tensor_mut(&mut self, id: usize) -> &mut Tensor {
        &mut self.tensors[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.tensors.iter())
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    fn check_same_layout(&self, other: &ParameterStore) -> Result<()> {
        if self.names != other.names {
            return Err(Error::ParameterMismatch(format!(
                "{:?} vs {:?}",
                self.names, other.names
            )));
        }
        for (name, (a, b)) in self
            .names
            .iter()
            .zip(self.tensors.iter().zip(&other.tensors))
        {
            if a.shape() != b.shape() {
                return Err(dim_err(
                    format!("parameter `{name}`"),
                    format!("{:?}", a.shape()),
                    format!("{:?}", b.shape()),
                ));
            }
        }
        Ok(())
    }
}

/// Gradient buffers aligned with a [`ParameterStore`]. Parameters that did not
/// participate in a loss have no buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn empty(num_params: usize) -> Self {
        Self {
            grads: vec![None; num_params],
        }
    }

    pub fn zeros_like(store: &ParameterStore) -> Self {
        Self {
            grads: store
                .tensors
                .iter()
                .map(|t| Some(Tensor::zeros(t.shape())))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Tensor> {
        self.grads.get(id).and_then(Option::as_ref)
    }

    pub fn by_name<'a>(&'a self, store: &ParameterStore, name: &str) -> Option<&'a Tensor> {
        store.id(name).and_then(|i| self.get(i))
    }

    pub fn set(&mut self, id: usize, grad: Tensor) {
        self.grads[id] = Some(grad);
    }

    /// Adds `grad` into the buffer for `id`, creating it if absent.
    pub fn accumulate(&mut self, id: usize, grad: &[f64], shape: &[usize]) {
        match &mut self.grads[id] {
            Some(t) => {
                for (a, b) in t.data_mut().iter_mut().zip(grad) {
                    *a += b;
                }
            }
            slot @ None => {
                *slot = Some(Tensor::new(shape.to_vec(), grad.to_vec()).expect("gradient shape"));
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Tensor)> {
        self.grads
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_ref().map(|g| (i, g)))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (usize, &mut Tensor)> {
        self.grads
            .iter_mut()
            .enumerate()
            .filter_map(|(i, g)| g.as_mut().map(|g| (i, g)))
    }

    pub fn global_norm(&self) -> f64 {
        self.iter().map(|(_, g)| g.sq_norm()).sum::<f64>().sqrt()
    }

    /// Scales every buffer by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for (_, g) in self.iter_mut() {
            for v in g.data_mut() {
                *v *= factor;
            }
        }
    }

    /// Adds `coef * theta` to each present buffer (L2 weight decay).
    pub fn add_weight_decay(&mut self, store: &ParameterStore, coef: f64) {
        for (id, g) in self.iter_mut() {
            for (gv, pv) in g.data_mut().iter_mut().zip(store.tensor(id).data()) {
                *gv += coef * pv;
            }
        }
    }
}

/// `target <- tau * target + (1 - tau) * online`, elementwise. Written as a
/// step toward `online` so that equal entries stay bit-identical.
pub fn polyak_update(target: &mut ParameterStore, online: &ParameterStore, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!(
            "tau must be in [0, 1], got {tau}"
        )));
    }
    target.check_same_layout(online)?;
    for (t, o) in target.tensors.iter_mut().zip(&online.tensors) {
        for (tv, ov) in t.data_mut().iter_mut().zip(o.data()) {
            *tv += (1.0 - tau) * (ov - *tv);
        }
    }
    Ok(())
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// `None` disables clipping. Returns the norm before clipping.
pub fn clip_gradients(grads: &mut Gradients, max_norm: Option<f64>) -> f64 {
    let norm = grads.global_norm();
    if let Some(max_norm) = max_norm {
        if norm > max_norm && norm > 0.0 {
            grads.scale(max_norm / norm);
        }
    }
    norm
}
