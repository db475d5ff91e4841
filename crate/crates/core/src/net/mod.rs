//! The denoising network: a single-hidden-layer autoencoder followed by a
//! trainable filter-matrix layer, `y = F · (W2 · tanh(W1 · x + b1) + b2)`.

mod adam;
mod checkpoint;
mod denoiser;
mod network;

pub use adam::{adam_update, Adam, AdamConfig};
pub use checkpoint::Checkpoint;
pub use denoiser::{DenoiseStats, Denoiser};
pub use network::{batch_mse, mse_loss, Activation, ForwardCache, Gradients, LossReport, Network};
