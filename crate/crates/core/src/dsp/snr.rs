use crate::signals::{NoiseRecord, ShotRecord, Waveform};
use crate::{Error, Result};

/// `20·log10(peak / rms)`: blast peak over noise effective pressure.
pub fn snr_from_levels(peak_pa: f64, noise_rms_pa: f64) -> Result<f64> {
    if !(noise_rms_pa > 0.0) {
        return Err(Error::SilentNoise);
    }
    Ok(20.0 * (peak_pa / noise_rms_pa).log10())
}

/// SNR of `shot` against a noise segment, in dB.
pub fn snr_db(shot: &ShotRecord, noise_segment: &[f64]) -> Result<f64> {
    let rms = crate::signals::waveform_rms(noise_segment);
    snr_from_levels(shot.peak_pa, rms)
}

/// Gain that brings a noise segment of RMS `segment_rms` to `target_snr_db` against `peak_pa`.
pub fn noise_scale_for_snr(peak_pa: f64, segment_rms: f64, target_snr_db: f64) -> Result<f64> {
    if !(segment_rms > 0.0) {
        return Err(Error::SilentNoise);
    }
    Ok(peak_pa / (segment_rms * 10f64.powf(target_snr_db / 20.0)))
}

/// A shot mixed with scaled noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub noisy: Waveform,
    /// The unmodified shot, sample-aligned with `noisy`.
    pub clean: Waveform,
    pub achieved_snr_db: f64,
    pub noise_scale: f64,
}

/// Adds the noise segment starting at `noise_offset` (shot length) to the
/// shot, scaled so the SNR equals `target_snr_db`.
pub fn mix_at_snr(shot: &ShotRecord, noise: &NoiseRecord, noise_offset: usize, target_snr_db: f64) -> Result<Mixture> {
    let n = shot.waveform.len();
    let noise_samples = noise.waveform.samples();
    if shot.waveform.fs() != noise.waveform.fs() {
        return Err(Error::InvalidArgument(format!(
            "shot at {} Hz cannot be mixed with noise at {} Hz",
            shot.waveform.fs(),
            noise.waveform.fs()
        )));
    }
    if !target_snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("target SNR must be finite, got {target_snr_db}")));
    }
    if noise_offset.checked_add(n).is_none_or(|end| end > noise_samples.len()) {
        return Err(Error::InvalidArgument(format!(
            "noise offset {noise_offset} + {n} samples exceeds noise length {}",
            noise_samples.len()
        )));
    }
    let segment = &noise_samples[noise_offset..noise_offset + n];
    let scale = noise_scale_for_snr(shot.peak_pa, crate::signals::waveform_rms(segment), target_snr_db)?;
    let scaled: Vec<f64> = segment.iter().map(|v| v * scale).collect();
    let achieved_snr_db = snr_db(shot, &scaled)?;
    let noisy: Vec<f64> = shot.waveform.samples().iter().zip(&scaled).map(|(s, v)| s + v).collect();
    Ok(Mixture {
        noisy: Waveform::with_annotations(noisy, shot.waveform.fs(), shot.waveform.annotations().to_vec())?,
        clean: shot.waveform.clone(),
        achieved_snr_db,
        noise_scale: scale,
    })
}
