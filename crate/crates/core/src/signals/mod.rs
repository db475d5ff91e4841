//! Acoustic signals: annotated waveforms, synthetic muzzle blasts and vehicle
//! noise, and mono WAV storage with key/value sidecars.

mod blast;
mod noise;
mod wav;
mod waveform;

pub use blast::{friedlander, friedlander_value};
pub use noise::{gen_vehicle_noise, gen_vehicle_noise_with, NoiseRecipe};
pub use wav::{
    load_noise, load_shot, load_wav, save_noise, save_shot, save_wav, sidecar_path, SampleEncoding,
    Sidecar,
};
pub use waveform::{Annotation, EventLabel, NoiseRecord, ShotRecord, Waveform};
pub(crate) use waveform::rms as waveform_rms;

/// Default sampling frequency (Hz): a 2048-sample frame spans 62.5 ms.
pub const DEFAULT_FS: u32 = 32_768;
