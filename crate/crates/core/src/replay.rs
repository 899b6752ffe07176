//! FIFO experience replay.

use std::collections::VecDeque;

use rand::Rng as _;

use crate::env::Transition;
use crate::error::{Error, Result};
use crate::Rng;

#[derive(Debug, Clone, Default)]
pub struct ReplayBuffer {
    capacity: Option<usize>,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    /// `None` keeps every transition.
    pub fn new(capacity: Option<usize>) -> Result<Self> {
        if capacity == Some(0) {
            return Err(Error::InvalidArgument(
                "replay capacity must be positive".into(),
            ));
        }
        Ok(Self {
            capacity,
            items: VecDeque::new(),
        })
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if let Some(cap) = self.capacity {
            if self.items.len() == cap {
                self.items.pop_front();
            }
        }
        self.items.push_back(t);
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `n` transitions drawn uniformly with replacement.
    pub fn sample_batch(&self, n: usize, rng: &mut Rng) -> Result<Vec<Transition>> {
        if self.items.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        Ok((0..n)
            .map(|_| self.items[rng.random_range(0..self.items.len())].clone())
            .collect())
    }
}
