//! Adam with coupled L2 weight decay and the training loop.

mod adam;
mod train;

pub use adam::{step, AdamConfig, AdamState};
pub use train::{train, TrainError, TrainOutcome};
