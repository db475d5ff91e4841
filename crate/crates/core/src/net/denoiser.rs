use std::time::Instant;

use ndarray::ArrayView2;

use super::checkpoint::Checkpoint;
use super::network::Network;
use crate::dsp::Resampler;
use crate::{Error, Result};

/// Full-rate denoising chain: decimate, scale, network, unscale, interpolate.
#[derive(Debug, Clone)]
pub struct Denoiser {
    network: Network,
    resampler: Resampler,
    scale: f64,
    frame_len: usize,
    fs: u32,
}

/// Per-frame wall-clock timings of a [`Denoiser::denoise`] call.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DenoiseStats {
    pub frame_latency_s: Vec<f64>,
}

impl DenoiseStats {
    pub fn frames(&self) -> usize {
        self.frame_latency_s.len()
    }

    pub fn mean_latency_s(&self) -> f64 {
        if self.frame_latency_s.is_empty() {
            return 0.0;
        }
        self.frame_latency_s.iter().sum::<f64>() / self.frame_latency_s.len() as f64
    }

    pub fn max_latency_s(&self) -> f64 {
        self.frame_latency_s.iter().copied().fold(0.0, f64::max)
    }
}

impl Denoiser {
    pub fn new(network: Network, resampler: Resampler, scale: f64, frame_len: usize, fs: u32) -> Result<Self> {
        if frame_len % resampler.factor() != 0 || frame_len / resampler.factor() != network.dim() {
            return Err(Error::InvalidArgument(format!(
                "frame length {frame_len} / factor {} does not match network width {}",
                resampler.factor(),
                network.dim()
            )));
        }
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument("scale must be positive".into()));
        }
        Ok(Denoiser {
            network,
            resampler,
            scale,
            frame_len,
            fs,
        })
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let resampler = Resampler::anti_alias(ck.fs as f64, ck.decim_factor, ck.aa_order, ck.aa_taps)?;
        Denoiser::new(ck.network.clone(), resampler, ck.scale, ck.frame_len, ck.fs)
    }

    pub fn fs(&self) -> u32 {
        self.fs
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn resampler(&self) -> &Resampler {
        &self.resampler
    }

    /// Network pass on an already-decimated frame, in physical units.
    pub fn denoise_decimated(&self, frame: &[f64]) -> Result<Vec<f64>> {
        let x: Vec<f64> = frame.iter().map(|v| v / self.scale).collect();
        let view = ArrayView2::from_shape((1, x.len()), &x).map_err(|_| Error::LengthMismatch {
            expected: self.network.dim(),
            actual: x.len(),
        })?;
        let y = self.network.predict_batch(view)?;
        Ok(y.iter().map(|v| v * self.scale).collect())
    }

    /// Denoises one full-rate frame of `frame_len` samples.
    pub fn denoise_frame(&self, frame: &[f64]) -> Result<Vec<f64>> {
        if frame.len() != self.frame_len {
            return Err(Error::LengthMismatch {
                expected: self.frame_len,
                actual: frame.len(),
            });
        }
        let decimated = self.resampler.decimate(frame)?;
        let y = self.denoise_decimated(&decimated)?;
        Ok(self.resampler.interpolate(&y))
    }

    /// Frame-by-frame denoising of an arbitrary-length signal. The last frame is
    /// zero-padded and the output trimmed to the input length.
    pub fn denoise(&self, x: &[f64]) -> Result<(Vec<f64>, DenoiseStats)> {
        let mut out = Vec::with_capacity(x.len() + self.frame_len);
        let mut stats = DenoiseStats::default();
        for chunk in x.chunks(self.frame_len) {
            let start = Instant::now();
            let y = if chunk.len() == self.frame_len {
                self.denoise_frame(chunk)?
            } else {
                let mut padded = chunk.to_vec();
                padded.resize(self.frame_len, 0.0);
                self.denoise_frame(&padded)?
            };
            stats.frame_latency_s.push(start.elapsed().as_secs_f64());
            out.extend(y);
        }
        out.truncate(x.len());
        Ok((out, stats))
    }
}
