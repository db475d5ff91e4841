use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Kind of acoustic event marked on a waveform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventLabel {
    /// Muzzle blast.
    MuzzleBlast,
    /// Mach (shock) wave.
    MachWave,
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventLabel::MuzzleBlast => "MB",
            EventLabel::MachWave => "MW",
        })
    }
}

impl FromStr for EventLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MB" => Ok(EventLabel::MuzzleBlast),
            "MW" => Ok(EventLabel::MachWave),
            other => Err(Error::InvalidArgument(format!("unknown event label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub label: EventLabel,
    pub onset: usize,
}

/// Pressure time series (Pa) with its sampling rate and event annotations.
///
/// Construction checks that the series is non-empty and finite, the rate is
/// positive, and every annotation falls inside the series.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    fs: u32,
    annotations: Vec<Annotation>,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, fs: u32) -> Result<Self> {
        Self::with_annotations(samples, fs, Vec::new())
    }

    pub fn with_annotations(samples: Vec<f64>, fs: u32, annotations: Vec<Annotation>) -> Result<Self> {
        if fs == 0 {
            return Err(Error::InvalidWaveform("sampling frequency must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidWaveform("no samples".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidWaveform(format!("sample {i} is not finite")));
        }
        if let Some(a) = annotations.iter().find(|a| a.onset >= samples.len()) {
            return Err(Error::InvalidWaveform(format!(
                "{} annotation at {} is outside {} samples",
                a.label,
                a.onset,
                samples.len()
            )));
        }
        Ok(Waveform {
            samples,
            fs,
            annotations,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> u32 {
        self.fs
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs as f64
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Onset of the first muzzle-blast annotation, if any.
    pub fn mb_onset(&self) -> Option<usize> {
        self.annotations
            .iter()
            .find(|a| a.label == EventLabel::MuzzleBlast)
            .map(|a| a.onset)
    }
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// A clean shot: a waveform carrying exactly one muzzle-blast annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub waveform: Waveform,
    pub caliber_class: String,
    /// Peak absolute pressure over the blast support (onset to end), Pa.
    pub peak_pa: f64,
    pub shot_id: String,
}

impl ShotRecord {
    pub fn new(waveform: Waveform, caliber_class: impl Into<String>, shot_id: impl Into<String>) -> Result<Self> {
        let caliber_class = caliber_class.into();
        let shot_id = shot_id.into();
        if caliber_class.is_empty() {
            return Err(Error::InvalidArgument("caliber class must not be empty".into()));
        }
        if shot_id.is_empty() {
            return Err(Error::InvalidArgument("shot id must not be empty".into()));
        }
        let mb: Vec<_> = waveform
            .annotations()
            .iter()
            .filter(|a| a.label == EventLabel::MuzzleBlast)
            .collect();
        if mb.len() != 1 {
            return Err(Error::InvalidWaveform(format!(
                "shot {shot_id} has {} MB annotations, expected exactly one",
                mb.len()
            )));
        }
        let onset = mb[0].onset;
        let peak_pa = waveform.samples()[onset..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !(peak_pa > 0.0) {
            return Err(Error::InvalidWaveform(format!("shot {shot_id} has no blast energy after onset")));
        }
        Ok(ShotRecord {
            waveform,
            caliber_class,
            peak_pa,
            shot_id,
        })
    }

    pub fn onset(&self) -> usize {
        self.waveform.mb_onset().expect("validated at construction")
    }

    /// Same waveform with a different caliber tag and id.
    pub fn relabel(self, caliber_class: impl Into<String>, shot_id: impl Into<String>) -> Result<Self> {
        ShotRecord::new(self.waveform, caliber_class, shot_id)
    }
}

/// A noise recording without annotations, with its full-record RMS.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRecord {
    pub waveform: Waveform,
    pub noise_id: String,
    pub rms_pa: f64,
}

impl NoiseRecord {
    pub fn new(waveform: Waveform, noise_id: impl Into<String>) -> Result<Self> {
        let noise_id = noise_id.into();
        if noise_id.is_empty() {
            return Err(Error::InvalidArgument("noise id must not be empty".into()));
        }
        if !waveform.annotations().is_empty() {
            return Err(Error::InvalidWaveform(format!("noise {noise_id} must not carry annotations")));
        }
        let rms_pa = waveform.rms();
        if !(rms_pa > 0.0) {
            return Err(Error::SilentNoise);
        }
        Ok(NoiseRecord {
            waveform,
            noise_id,
            rms_pa,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_waveforms() {
        assert!(Waveform::new(vec![], 100).is_err());
        assert!(Waveform::new(vec![1.0], 0).is_err());
        assert!(Waveform::new(vec![1.0, f64::NAN], 100).is_err());
        assert!(Waveform::new(vec![1.0, f64::INFINITY], 100).is_err());
        let a = Annotation {
            label: EventLabel::MuzzleBlast,
            onset: 2,
        };
        assert!(Waveform::with_annotations(vec![0.0, 1.0], 100, vec![a]).is_err());
    }

    #[test]
    fn shot_requires_one_mb() {
        let w = Waveform::new(vec![0.0, 1.0, -2.0], 10).unwrap();
        assert!(ShotRecord::new(w, "A", "s0").is_err());
        let mb = |onset| Annotation {
            label: EventLabel::MuzzleBlast,
            onset,
        };
        let w = Waveform::with_annotations(vec![5.0, 1.0, -2.0], 10, vec![mb(1)]).unwrap();
        let shot = ShotRecord::new(w, "A", "s0").unwrap();
        // peak is measured from the onset on
        assert_eq!(shot.peak_pa, 2.0);
        let w = Waveform::with_annotations(vec![0.0, 1.0, -2.0], 10, vec![mb(0), mb(1)]).unwrap();
        assert!(ShotRecord::new(w, "A", "s0").is_err());
    }

    #[test]
    fn noise_rms_and_annotations() {
        let w = Waveform::new(vec![3.0, -3.0, 3.0, -3.0], 10).unwrap();
        let n = NoiseRecord::new(w, "n0").unwrap();
        assert_eq!(n.rms_pa, 3.0);
        let w = Waveform::new(vec![0.0; 4], 10).unwrap();
        assert!(matches!(NoiseRecord::new(w, "n0"), Err(Error::SilentNoise)));
    }

    #[test]
    fn label_round_trip() {
        for l in [EventLabel::MuzzleBlast, EventLabel::MachWave] {
            assert_eq!(l.to_string().parse::<EventLabel>().unwrap(), l);
        }
        assert!("XX".parse::<EventLabel>().is_err());
    }
}
