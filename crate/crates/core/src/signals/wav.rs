//! Mono WAV I/O (PCM16 or IEEE float32) plus a `key=value` sidecar holding
//! the sampling rate, annotations and corpus identity of each file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::waveform::{Annotation, EventLabel, NoiseRecord, ShotRecord, Waveform};
use crate::fsutil::{read_to_string, tmp_path, write_atomic};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleEncoding {
    /// 16-bit signed PCM, full scale ±1.0.
    Pcm16,
    /// 32-bit IEEE float, values stored as-is (Pa).
    Float32,
}

/// Parsed sidecar metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sidecar {
    pub fs: Option<u32>,
    pub annotations: Vec<Annotation>,
    pub caliber_class: Option<String>,
    pub shot_id: Option<String>,
    pub noise_id: Option<String>,
}

impl Sidecar {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Metadata {
            path: path.to_path_buf(),
            reason,
        };
        let mut out = Sidecar::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key=value", lineno + 1)))?;
            let value = value.trim();
            match key.trim() {
                "fs" => {
                    let fs: u32 = value.parse().map_err(|_| bad(format!("bad fs {value:?}")))?;
                    out.fs = Some(fs);
                }
                "annotation" => {
                    let (label, onset) = value
                        .split_once(':')
                        .ok_or_else(|| bad(format!("bad annotation {value:?}")))?;
                    let label: EventLabel = label.parse().map_err(|_| bad(format!("bad label {label:?}")))?;
                    let onset = onset.parse().map_err(|_| bad(format!("bad onset {onset:?}")))?;
                    out.annotations.push(Annotation { label, onset });
                }
                "caliber_class" => out.caliber_class = Some(value.to_string()),
                "shot_id" => out.shot_id = Some(value.to_string()),
                "noise_id" => out.noise_id = Some(value.to_string()),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        Ok(out)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        if let Some(fs) = self.fs {
            let _ = writeln!(s, "fs={fs}");
        }
        for a in &self.annotations {
            let _ = writeln!(s, "annotation={}:{}", a.label, a.onset);
        }
        if let Some(c) = &self.caliber_class {
            let _ = writeln!(s, "caliber_class={c}");
        }
        if let Some(id) = &self.shot_id {
            let _ = writeln!(s, "shot_id={id}");
        }
        if let Some(id) = &self.noise_id {
            let _ = writeln!(s, "noise_id={id}");
        }
        s
    }
}

/// `foo.wav` → `foo.meta`
pub fn sidecar_path(wav: &Path) -> PathBuf {
    wav.with_extension("meta")
}

fn write_wav_file(path: &Path, w: &Waveform, encoding: SampleEncoding) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.fs(),
        bits_per_sample: match encoding {
            SampleEncoding::Pcm16 => 16,
            SampleEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            SampleEncoding::Pcm16 => hound::SampleFormat::Int,
            SampleEncoding::Float32 => hound::SampleFormat::Float,
        },
    };
    let tmp = tmp_path(path);
    let to_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(&tmp, io),
        other => Error::InvalidArgument(format!("cannot encode {}: {other}", path.display())),
    };
    let mut writer = hound::WavWriter::create(&tmp, spec).map_err(to_err)?;
    for &x in w.samples() {
        match encoding {
            SampleEncoding::Pcm16 => {
                let q = (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(q).map_err(to_err)?;
            }
            SampleEncoding::Float32 => writer.write_sample(x as f32).map_err(to_err)?,
        }
    }
    writer.finalize().map_err(to_err)?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_sidecar(wav_path: &Path, sidecar: &Sidecar) -> Result<()> {
    write_atomic(&sidecar_path(wav_path), sidecar.render().as_bytes())
}

/// Writes `w` as a mono WAV plus its sidecar (`fs` and annotations).
///
/// Float32 is lossless for values representable in `f32`; PCM16 clips to ±1.0.
pub fn save_wav(path: &Path, w: &Waveform, encoding: SampleEncoding) -> Result<()> {
    write_wav_file(path, w, encoding)?;
    write_sidecar(
        path,
        &Sidecar {
            fs: Some(w.fs()),
            annotations: w.annotations().to_vec(),
            ..Sidecar::default()
        },
    )
}

fn read_samples(path: &Path) -> Result<(Vec<f64>, u32)> {
    let malformed = |reason: String| Error::MalformedWav {
        path: path.to_path_buf(),
        reason,
    };
    let map_err = |e: hound::Error| match e {
        hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::NotFound => Error::io(path, io),
        hound::Error::IoError(io) => malformed(io.to_string()),
        hound::Error::FormatError(msg) => malformed(msg.to_string()),
        hound::Error::UnfinishedSample => malformed("truncated sample data".into()),
        other => Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    };
    let mut reader = hound::WavReader::open(path).map_err(map_err)?;
    let spec = reader.spec();
    if spec.sample_rate == 0 {
        return Err(malformed("sample rate is zero".into()));
    }
    if spec.channels != 1 {
        return Err(Error::ChannelCount {
            path: path.to_path_buf(),
            channels: spec.channels,
        });
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_err)?,
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_err)?,
        (fmt, bits) => {
            return Err(Error::UnsupportedEncoding {
                path: path.to_path_buf(),
                reason: format!("{bits}-bit {fmt:?}"),
            })
        }
    };
    if samples.is_empty() {
        return Err(Error::EmptyWav {
            path: path.to_path_buf(),
        });
    }
    Ok((samples, spec.sample_rate))
}

fn read_sidecar(wav_path: &Path) -> Result<Option<Sidecar>> {
    let p = sidecar_path(wav_path);
    if !p.exists() {
        return Ok(None);
    }
    Sidecar::parse(&read_to_string(&p)?, &p).map(Some)
}

fn load_with_sidecar(path: &Path) -> Result<(Waveform, Sidecar)> {
    let (samples, fs) = read_samples(path)?;
    let sidecar = read_sidecar(path)?.unwrap_or_default();
    if let Some(meta_fs) = sidecar.fs {
        if meta_fs != fs {
            return Err(Error::Metadata {
                path: sidecar_path(path),
                reason: format!("fs={meta_fs} disagrees with WAV header ({fs})"),
            });
        }
    }
    let w = Waveform::with_annotations(samples, fs, sidecar.annotations.clone()).map_err(|e| Error::Metadata {
        path: sidecar_path(path),
        reason: e.to_string(),
    })?;
    Ok((w, sidecar))
}

/// Reads a mono WAV; annotations come from the sidecar when one exists.
pub fn load_wav(path: &Path) -> Result<Waveform> {
    load_with_sidecar(path).map(|(w, _)| w)
}

pub fn save_shot(path: &Path, shot: &ShotRecord, encoding: SampleEncoding) -> Result<()> {
    write_wav_file(path, &shot.waveform, encoding)?;
    write_sidecar(
        path,
        &Sidecar {
            fs: Some(shot.waveform.fs()),
            annotations: shot.waveform.annotations().to_vec(),
            caliber_class: Some(shot.caliber_class.clone()),
            shot_id: Some(shot.shot_id.clone()),
            noise_id: None,
        },
    )
}

pub fn load_shot(path: &Path) -> Result<ShotRecord> {
    let (w, meta) = load_with_sidecar(path)?;
    let missing = |key: &str| Error::Metadata {
        path: sidecar_path(path),
        reason: format!("missing {key}"),
    };
    let caliber = meta.caliber_class.ok_or_else(|| missing("caliber_class"))?;
    let id = meta.shot_id.ok_or_else(|| missing("shot_id"))?;
    ShotRecord::new(w, caliber, id)
}

pub fn save_noise(path: &Path, noise: &NoiseRecord, encoding: SampleEncoding) -> Result<()> {
    write_wav_file(path, &noise.waveform, encoding)?;
    write_sidecar(
        path,
        &Sidecar {
            fs: Some(noise.waveform.fs()),
            noise_id: Some(noise.noise_id.clone()),
            ..Sidecar::default()
        },
    )
}

pub fn load_noise(path: &Path) -> Result<NoiseRecord> {
    let (w, meta) = load_with_sidecar(path)?;
    let id = meta.noise_id.ok_or_else(|| Error::Metadata {
        path: sidecar_path(path),
        reason: "missing noise_id".into(),
    })?;
    NoiseRecord::new(w, id)
}
