//! Multilayer perceptrons, the Adam optimizer and the training loop.

pub mod adam;
pub mod io;
pub mod mlp;
pub mod train;

pub use adam::{AdamConfig, AdamState};
pub use io::{load_model, read_model, save_model, write_model};
pub use mlp::{forward, forward_trace, reconstruction_loss, ForwardTrace, Layer, Mlp, MlpVars};
pub use train::{
    evaluate_losses, train, train_with_callback, Autoencoder, EpochRecord, LossSummary, Regularizer, TrainConfig,
    TrainingLog,
};
