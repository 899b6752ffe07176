//! Minimal reverse-mode autodiff: tensors, parameter stores, a recording
//! tape, dense and LSTM layers, Adam, Polyak averaging and checkpoints.

mod checkpoint;
mod layers;
mod optim;
mod params;
mod tape;
mod tensor;

pub use checkpoint::{Checkpoint, CHECKPOINT_HEADER};
pub use layers::{forward_lstm, forward_mlp, Activation, Linear, LstmCell, Mlp};
pub use optim::{adam_step, AdamState, LrSchedule};
pub use params::{clip_gradients, polyak_update, Gradients, ParameterStore};
pub use tape::{log_sum_exp, sigmoid, softmax_in_place, Tape, Var};
pub use tensor::Tensor;
