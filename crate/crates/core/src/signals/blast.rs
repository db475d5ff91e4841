use super::waveform::{Annotation, EventLabel, ShotRecord, Waveform};
use crate::{Error, Result};

/// Friedlander pressure at `t` seconds after arrival:
/// `peak · (1 − t/t_plus) · exp(−t/t_plus)`, zero before arrival.
pub fn friedlander_value(peak_pa: f64, t_plus: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let u = t / t_plus;
    peak_pa * (1.0 - u) * (-u).exp()
}

/// Synthesises a muzzle blast as a Friedlander wave starting at `onset`.
///
/// The positive phase (`t_plus` seconds) must fit in the record; the negative
/// tail is truncated at the end of the record. The returned shot is tagged
/// with caliber class `"synthetic"`; use [`ShotRecord::relabel`] to set a
/// corpus identity.
pub fn friedlander(peak_pa: f64, t_plus: f64, fs: u32, n_samples: usize, onset: usize) -> Result<ShotRecord> {
    if !(peak_pa > 0.0) || !peak_pa.is_finite() {
        return Err(Error::InvalidArgument(format!("peak pressure must be positive, got {peak_pa}")));
    }
    if !(t_plus > 0.0) || !t_plus.is_finite() {
        return Err(Error::InvalidArgument(format!("positive-phase duration must be positive, got {t_plus}")));
    }
    if fs == 0 {
        return Err(Error::InvalidArgument("sampling frequency must be positive".into()));
    }
    let phase_samples = t_plus * fs as f64;
    if onset >= n_samples || onset as f64 + phase_samples > n_samples as f64 {
        return Err(Error::InvalidArgument(format!(
            "onset {onset} with a {phase_samples:.1}-sample positive phase does not fit in {n_samples} samples"
        )));
    }
    let samples = (0..n_samples)
        .map(|k| {
            if k < onset {
                0.0
            } else {
                // work in sample units so t = t_plus lands exactly on u = 1
                let u = (k - onset) as f64 / phase_samples;
                peak_pa * (1.0 - u) * (-u).exp()
            }
        })
        .collect();
    let waveform = Waveform::with_annotations(
        samples,
        fs,
        vec![Annotation {
            label: EventLabel::MuzzleBlast,
            onset,
        }],
    )?;
    ShotRecord::new(waveform, "synthetic", format!("friedlander-{onset}"))
}
