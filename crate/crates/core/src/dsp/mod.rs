//! Signal-processing primitives used around the network.

mod butterworth;
mod matrix;
mod multirate;
mod snr;

pub use butterworth::{design_butterworth, FilterSpec};
pub use matrix::{kernel_to_matrix, FilterMatrix};
pub use multirate::Resampler;
pub use snr::{mix_at_snr, noise_scale_for_snr, snr_db, snr_from_levels, Mixture};
