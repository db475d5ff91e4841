//! Run configuration: a flat `key = value` text file plus overrides.
//!
//! Every key has a default, so an empty file is a valid configuration.
//! `#` starts a comment; list values are comma separated. The resolved
//! configuration renders back to the same format with every key present, in a
//! fixed order, and is embedded in each report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::curriculum::{MaterializeConfig, PhasePlan, TrainConfig};
use crate::detect::StaLtaConfig;
use crate::net::AdamConfig;
use crate::signals::{NoiseRecipe, SampleEncoding};
use crate::{Error, Result};

/// Which sampling rate the `fs/41` cutoff of the network filter refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffBase {
    /// `fs / divisor` Hz, applied at the decimated rate.
    Original,
    /// `(fs / decim_factor) / divisor` Hz.
    Decimated,
}

impl FromStr for CutoffBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(CutoffBase::Original),
            "decimated" => Ok(CutoffBase::Decimated),
            other => Err(Error::Config(format!(
                "net_filter_base must be original or decimated, got {other:?}"
            ))),
        }
    }
}

impl CutoffBase {
    fn as_str(self) -> &'static str {
        match self {
            CutoffBase::Original => "original",
            CutoffBase::Decimated => "decimated",
        }
    }
}

/// Which validation rotations `train` and `evaluate` run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rotations {
    All,
    Only(Vec<usize>),
}

impl Rotations {
    pub fn indices(&self) -> Vec<usize> {
        match self {
            Rotations::All => (0..6).collect(),
            Rotations::Only(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub fs: u32,
    pub frame_len: usize,
    pub decim_factor: usize,
    pub aa_order: u32,
    pub aa_taps: usize,
    pub net_filter_order: u32,
    pub net_filter_taps: usize,
    pub net_filter_divisor: f64,
    pub net_filter_base: CutoffBase,
    pub hidden: usize,
    pub lr: f64,
    pub f_lr_scale: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub phase_thresholds_db: Vec<f64>,
    pub freeze_iters: usize,
    pub total_iters: usize,
    pub snr_grid_db: Vec<f64>,
    pub examples_per_cell: usize,
    pub sections_per_noise: usize,
    pub rotations: Rotations,
    pub shots_a: usize,
    pub shots_b: usize,
    pub peak_min_pa: f64,
    pub peak_max_pa: f64,
    pub t_plus_min_ms: f64,
    pub t_plus_max_ms: f64,
    pub class_b_t_plus_factor: f64,
    pub class_b_peak_factor: f64,
    pub noise_duration_s: f64,
    pub noise_rms_pa: f64,
    pub noise: NoiseRecipe,
    pub wav_encoding: SampleEncoding,
    pub sta_ms: f64,
    pub lta_ms: f64,
    pub detector_threshold: f64,
    pub refractory_ms: f64,
    /// Match tolerance in samples; `None` means `round(fs / 100)`.
    pub tolerance_samples: Option<usize>,
    /// Defaults to `<out>/corpus`.
    pub corpus_dir: Option<PathBuf>,
    /// Defaults to `<out>/checkpoints`.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let plan = PhasePlan::default();
        let adam = AdamConfig::default();
        let det = StaLtaConfig::default();
        RunConfig {
            seed: 1,
            fs: 32_768,
            frame_len: 2048,
            decim_factor: 8,
            aa_order: 10,
            aa_taps: 255,
            net_filter_order: 8,
            net_filter_taps: 31,
            net_filter_divisor: 41.0,
            net_filter_base: CutoffBase::Original,
            hidden: 64,
            lr: adam.lr,
            f_lr_scale: adam.f_lr_scale,
            beta1: adam.beta1,
            beta2: adam.beta2,
            adam_eps: adam.eps,
            batch_size: 0,
            phase_thresholds_db: plan.thresholds_db,
            freeze_iters: plan.freeze_iters,
            total_iters: plan.total_iters,
            snr_grid_db: MaterializeConfig::default().snr_grid_db,
            examples_per_cell: 1,
            sections_per_noise: 2,
            rotations: Rotations::All,
            shots_a: 200,
            shots_b: 100,
            peak_min_pa: 5.0,
            peak_max_pa: 15.0,
            t_plus_min_ms: 1.5,
            t_plus_max_ms: 2.5,
            class_b_t_plus_factor: 1.6,
            class_b_peak_factor: 0.7,
            noise_duration_s: 20.0,
            noise_rms_pa: 1.0,
            noise: NoiseRecipe::default(),
            wav_encoding: SampleEncoding::Float32,
            sta_ms: det.sta_s * 1e3,
            lta_ms: det.lta_s * 1e3,
            detector_threshold: det.threshold,
            refractory_ms: det.refractory_s * 1e3,
            tolerance_samples: None,
            corpus_dir: None,
            checkpoint_dir: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn render_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Reads a config file on top of the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", n + 1)));
            }
            cfg.set(key, value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies `key=value` overrides, as given on the command line.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {:?} is not key=value", o.as_ref())))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "fs" => self.fs = parse(key, value)?,
            "frame_len" => self.frame_len = parse(key, value)?,
            "decim_factor" => self.decim_factor = parse(key, value)?,
            "aa_order" => self.aa_order = parse(key, value)?,
            "aa_taps" => self.aa_taps = parse(key, value)?,
            "net_filter_order" => self.net_filter_order = parse(key, value)?,
            "net_filter_taps" => self.net_filter_taps = parse(key, value)?,
            "net_filter_divisor" => self.net_filter_divisor = parse(key, value)?,
            "net_filter_base" => self.net_filter_base = value.parse()?,
            "hidden" => self.hidden = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "f_lr_scale" => self.f_lr_scale = parse(key, value)?,
            "beta1" => self.beta1 = parse(key, value)?,
            "beta2" => self.beta2 = parse(key, value)?,
            "adam_eps" => self.adam_eps = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "phase_thresholds_db" => self.phase_thresholds_db = parse_list(key, value)?,
            "freeze_iters" => self.freeze_iters = parse(key, value)?,
            "total_iters" => self.total_iters = parse(key, value)?,
            "snr_grid_db" => self.snr_grid_db = parse_list(key, value)?,
            "examples_per_cell" => self.examples_per_cell = parse(key, value)?,
            "sections_per_noise" => self.sections_per_noise = parse(key, value)?,
            "rotations" => {
                self.rotations = if value == "all" {
                    Rotations::All
                } else {
                    Rotations::Only(value.split(',').map(|v| parse(key, v.trim())).collect::<Result<_>>()?)
                }
            }
            "shots_a" => self.shots_a = parse(key, value)?,
            "shots_b" => self.shots_b = parse(key, value)?,
            "peak_min_pa" => self.peak_min_pa = parse(key, value)?,
            "peak_max_pa" => self.peak_max_pa = parse(key, value)?,
            "t_plus_min_ms" => self.t_plus_min_ms = parse(key, value)?,
            "t_plus_max_ms" => self.t_plus_max_ms = parse(key, value)?,
            "class_b_t_plus_factor" => self.class_b_t_plus_factor = parse(key, value)?,
            "class_b_peak_factor" => self.class_b_peak_factor = parse(key, value)?,
            "noise_duration_s" => self.noise_duration_s = parse(key, value)?,
            "noise_rms_pa" => self.noise_rms_pa = parse(key, value)?,
            "noise_pink_weight" => self.noise.pink_weight = parse(key, value)?,
            "noise_engine_weight" => self.noise.engine_weight = parse(key, value)?,
            "noise_engine_f0_hz" => self.noise.engine_f0_hz = parse(key, value)?,
            "noise_engine_harmonics" => self.noise.engine_harmonics = parse(key, value)?,
            "noise_engine_wander" => self.noise.engine_wander = parse(key, value)?,
            "noise_burst_rate_hz" => self.noise.burst_rate_hz = parse(key, value)?,
            "noise_burst_peak_min" => self.noise.burst_peak.0 = parse(key, value)?,
            "noise_burst_peak_max" => self.noise.burst_peak.1 = parse(key, value)?,
            "noise_burst_decay_min_s" => self.noise.burst_decay_s.0 = parse(key, value)?,
            "noise_burst_decay_max_s" => self.noise.burst_decay_s.1 = parse(key, value)?,
            "noise_burst_smoothing" => self.noise.burst_smoothing = parse(key, value)?,
            "wav_encoding" => {
                self.wav_encoding = match value {
                    "float32" => SampleEncoding::Float32,
                    "pcm16" => SampleEncoding::Pcm16,
                    other => return Err(Error::Config(format!("wav_encoding must be float32 or pcm16, got {other:?}"))),
                }
            }
            "sta_ms" => self.sta_ms = parse(key, value)?,
            "lta_ms" => self.lta_ms = parse(key, value)?,
            "detector_threshold" => self.detector_threshold = parse(key, value)?,
            "refractory_ms" => self.refractory_ms = parse(key, value)?,
            "tolerance_samples" => {
                self.tolerance_samples = if value == "auto" { None } else { Some(parse(key, value)?) }
            }
            "corpus_dir" => self.corpus_dir = (!value.is_empty()).then(|| PathBuf::from(value)),
            "checkpoint_dir" => self.checkpoint_dir = (!value.is_empty()).then(|| PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Every key with its resolved value, in rendering order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        vec![
            ("seed", self.seed.to_string()),
            ("fs", self.fs.to_string()),
            ("frame_len", self.frame_len.to_string()),
            ("decim_factor", self.decim_factor.to_string()),
            ("aa_order", self.aa_order.to_string()),
            ("aa_taps", self.aa_taps.to_string()),
            ("net_filter_order", self.net_filter_order.to_string()),
            ("net_filter_taps", self.net_filter_taps.to_string()),
            ("net_filter_divisor", self.net_filter_divisor.to_string()),
            ("net_filter_base", self.net_filter_base.as_str().to_string()),
            ("hidden", self.hidden.to_string()),
            ("lr", self.lr.to_string()),
            ("f_lr_scale", self.f_lr_scale.to_string()),
            ("beta1", self.beta1.to_string()),
            ("beta2", self.beta2.to_string()),
            ("adam_eps", self.adam_eps.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("phase_thresholds_db", render_list(&self.phase_thresholds_db)),
            ("freeze_iters", self.freeze_iters.to_string()),
            ("total_iters", self.total_iters.to_string()),
            ("snr_grid_db", render_list(&self.snr_grid_db)),
            ("examples_per_cell", self.examples_per_cell.to_string()),
            ("sections_per_noise", self.sections_per_noise.to_string()),
            (
                "rotations",
                match &self.rotations {
                    Rotations::All => "all".to_string(),
                    Rotations::Only(v) => v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","),
                },
            ),
            ("shots_a", self.shots_a.to_string()),
            ("shots_b", self.shots_b.to_string()),
            ("peak_min_pa", self.peak_min_pa.to_string()),
            ("peak_max_pa", self.peak_max_pa.to_string()),
            ("t_plus_min_ms", self.t_plus_min_ms.to_string()),
            ("t_plus_max_ms", self.t_plus_max_ms.to_string()),
            ("class_b_t_plus_factor", self.class_b_t_plus_factor.to_string()),
            ("class_b_peak_factor", self.class_b_peak_factor.to_string()),
            ("noise_duration_s", self.noise_duration_s.to_string()),
            ("noise_rms_pa", self.noise_rms_pa.to_string()),
            ("noise_pink_weight", self.noise.pink_weight.to_string()),
            ("noise_engine_weight", self.noise.engine_weight.to_string()),
            ("noise_engine_f0_hz", self.noise.engine_f0_hz.to_string()),
            ("noise_engine_harmonics", self.noise.engine_harmonics.to_string()),
            ("noise_engine_wander", self.noise.engine_wander.to_string()),
            ("noise_burst_rate_hz", self.noise.burst_rate_hz.to_string()),
            ("noise_burst_peak_min", self.noise.burst_peak.0.to_string()),
            ("noise_burst_peak_max", self.noise.burst_peak.1.to_string()),
            ("noise_burst_decay_min_s", self.noise.burst_decay_s.0.to_string()),
            ("noise_burst_decay_max_s", self.noise.burst_decay_s.1.to_string()),
            ("noise_burst_smoothing", self.noise.burst_smoothing.to_string()),
            (
                "wav_encoding",
                match self.wav_encoding {
                    SampleEncoding::Float32 => "float32",
                    SampleEncoding::Pcm16 => "pcm16",
                }
                .to_string(),
            ),
            ("sta_ms", self.sta_ms.to_string()),
            ("lta_ms", self.lta_ms.to_string()),
            ("detector_threshold", self.detector_threshold.to_string()),
            ("refractory_ms", self.refractory_ms.to_string()),
            (
                "tolerance_samples",
                self.tolerance_samples.map_or("auto".to_string(), |t| t.to_string()),
            ),
            ("corpus_dir", path(&self.corpus_dir)),
            ("checkpoint_dir", path(&self.checkpoint_dir)),
        ]
    }

    /// The full resolved configuration in the input file format.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.fs == 0 {
            return bad("fs must be positive".into());
        }
        if self.decim_factor == 0 || self.frame_len == 0 || self.frame_len % self.decim_factor != 0 {
            return bad(format!(
                "frame_len {} must be a positive multiple of decim_factor {}",
                self.frame_len, self.decim_factor
            ));
        }
        if self.aa_taps % 2 == 0 || self.net_filter_taps % 2 == 0 {
            return bad("filter tap counts must be odd".into());
        }
        if self.net_filter_taps > 2 * self.dim() - 1 {
            return bad(format!("net_filter_taps {} too long for width {}", self.net_filter_taps, self.dim()));
        }
        if !(self.net_filter_divisor > 2.0) {
            return bad("net_filter_divisor must exceed 2".into());
        }
        if self.hidden == 0 {
            return bad("hidden must be at least 1".into());
        }
        if !(self.lr > 0.0) || !(self.f_lr_scale >= 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.adam_eps > 0.0) {
            return bad("optimizer settings out of range".into());
        }
        self.phase_plan().validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !(-25.0..=15.0).contains(s)) {
            return bad(format!("snr_grid_db values must lie in [-25, 15]: {:?}", self.snr_grid_db));
        }
        if self.examples_per_cell == 0 || self.sections_per_noise == 0 {
            return bad("examples_per_cell and sections_per_noise must be at least 1".into());
        }
        if let Rotations::Only(v) = &self.rotations {
            if v.is_empty() || v.iter().any(|&r| r >= 6) {
                return bad(format!("rotations must be indices in 0..6, got {v:?}"));
            }
        }
        if self.shots_a < 2 || self.shots_b < 2 {
            return bad("shots_a and shots_b must each be at least 2".into());
        }
        if !(self.peak_min_pa > 0.0 && self.peak_min_pa <= self.peak_max_pa) {
            return bad("peak range invalid".into());
        }
        if !(self.t_plus_min_ms > 0.0 && self.t_plus_min_ms <= self.t_plus_max_ms) {
            return bad("t_plus range invalid".into());
        }
        if !(self.class_b_t_plus_factor > 0.0 && self.class_b_peak_factor > 0.0) {
            return bad("class B factors must be positive".into());
        }
        let longest = self.t_plus_max_ms * 1e-3 * self.class_b_t_plus_factor.max(1.0) * self.fs as f64;
        if self.frame_len / 4 * 3 + longest.ceil() as usize > self.frame_len {
            return bad("positive phase of the longest blast does not fit after the latest onset".into());
        }
        let section = (self.noise_duration_s * self.fs as f64) as usize / self.sections_per_noise.max(1);
        if section < self.frame_len {
            return bad(format!(
                "noise sections of {section} samples cannot hold a {}-sample frame",
                self.frame_len
            ));
        }
        if !(self.noise_rms_pa > 0.0) {
            return bad("noise_rms_pa must be positive".into());
        }
        if !(self.sta_ms > 0.0 && self.lta_ms > 0.0 && self.detector_threshold > 0.0 && self.refractory_ms >= 0.0) {
            return bad("detector settings must be positive".into());
        }
        Ok(())
    }

    /// Width of the decimated frame the network sees.
    pub fn dim(&self) -> usize {
        self.frame_len / self.decim_factor.max(1)
    }

    pub fn decimated_fs(&self) -> f64 {
        self.fs as f64 / self.decim_factor as f64
    }

    pub fn net_filter_cutoff_hz(&self) -> f64 {
        match self.net_filter_base {
            CutoffBase::Original => self.fs as f64 / self.net_filter_divisor,
            CutoffBase::Decimated => self.decimated_fs() / self.net_filter_divisor,
        }
    }

    pub fn phase_plan(&self) -> PhasePlan {
        PhasePlan {
            thresholds_db: self.phase_thresholds_db.clone(),
            freeze_iters: self.freeze_iters,
            total_iters: self.total_iters,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            adam: AdamConfig {
                lr: self.lr,
                f_lr_scale: self.f_lr_scale,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.adam_eps,
            },
            batch_size: self.batch_size,
            seed: self.seed,
        }
    }

    /// Mixing settings with an explicit stream seed.
    pub fn materialize_config(&self, seed: u64) -> MaterializeConfig {
        MaterializeConfig {
            snr_grid_db: self.snr_grid_db.clone(),
            examples_per_cell: self.examples_per_cell,
            seed,
        }
    }

    pub fn detector(&self) -> StaLtaConfig {
        StaLtaConfig {
            sta_s: self.sta_ms * 1e-3,
            lta_s: self.lta_ms * 1e-3,
            threshold: self.detector_threshold,
            refractory_s: self.refractory_ms * 1e-3,
        }
    }

    pub fn tolerance(&self) -> usize {
        self.tolerance_samples.unwrap_or_else(|| crate::detect::default_tolerance(self.fs))
    }
}
