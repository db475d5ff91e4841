//! The jobs behind the `mbdenoise` binary.
//!
//! Every job reads and writes under one output directory:
//!
//! ```text
//! <out>/config.resolved.txt
//! <out>/corpus/manifest.tsv, shots/*.wav|meta, noise/*.wav|meta
//! <out>/checkpoints/rotation-<k>.ckpt
//! <out>/logs/convergence-rotation-<k>.csv
//! <out>/scores/validation.csv, cross_caliber.csv
//! <out>/report/plot_data.csv, report.md
//! ```
//!
//! `corpus_dir` and `checkpoint_dir` in the config redirect the first two.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::curriculum::{
    build_split, derive_seed, materialize_examples, train_curriculum_with, ConvergenceLog, DatasetSplit,
    IterationState, LogRecord, NoisyExample,
};
use crate::detect::{detect_impulses, match_detections, score_rates, scores_csv, Condition, DetectionScore, SnrBin};
use crate::dsp::{design_butterworth, FilterSpec, Resampler};
use crate::fsutil::{create_dir_all, read_to_string, write_atomic};
use crate::net::{Checkpoint, DenoiseStats, Denoiser, Network};
use crate::signals::{
    friedlander, gen_vehicle_noise_with, load_noise, load_shot, load_wav, save_noise, save_shot, save_wav,
    sidecar_path, NoiseRecord, ShotRecord, Waveform,
};
use crate::{Error, Result};

pub const CLASS_A: &str = "A";
pub const CLASS_B: &str = "B";
const MANIFEST: &str = "manifest.tsv";
const MANIFEST_HEADER: &str = "# mbdenoise corpus manifest v1";

/// Where each job's inputs and outputs live.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub out: PathBuf,
    pub corpus: PathBuf,
    pub checkpoints: PathBuf,
    pub logs: PathBuf,
    pub scores: PathBuf,
    pub report: PathBuf,
}

impl Layout {
    pub fn new(config: &RunConfig, out: &Path) -> Self {
        Layout {
            out: out.to_path_buf(),
            corpus: config.corpus_dir.clone().unwrap_or_else(|| out.join("corpus")),
            checkpoints: config.checkpoint_dir.clone().unwrap_or_else(|| out.join("checkpoints")),
            logs: out.join("logs"),
            scores: out.join("scores"),
            report: out.join("report"),
        }
    }

    pub fn checkpoint(&self, rotation: usize) -> PathBuf {
        self.checkpoints.join(format!("rotation-{rotation}.ckpt"))
    }

    pub fn convergence_log(&self, rotation: usize) -> PathBuf {
        self.logs.join(format!("convergence-rotation-{rotation}.csv"))
    }

    pub fn validation_scores(&self) -> PathBuf {
        self.scores.join("validation.csv")
    }

    pub fn cross_caliber_scores(&self) -> PathBuf {
        self.scores.join("cross_caliber.csv")
    }
}

fn require(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {} does not exist", path.display())))
    }
}

/// Writes the resolved config next to the job's outputs.
pub fn write_resolved_config(config: &RunConfig, out: &Path) -> Result<()> {
    create_dir_all(out)?;
    write_atomic(&out.join("config.resolved.txt"), config.render().as_bytes())
}

// ---------------------------------------------------------------- corpus

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    /// Training caliber.
    pub shots_a: Vec<ShotRecord>,
    /// Held-out caliber, scored only.
    pub shots_b: Vec<ShotRecord>,
    pub noises: Vec<NoiseRecord>,
}

fn synth_shots(config: &RunConfig, class: &str, stream: u64, n: usize, t_factor: f64, p_factor: f64) -> Result<Vec<ShotRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[1, stream]));
    let onsets = config.frame_len / 4..config.frame_len / 4 * 3;
    (0..n)
        .map(|k| {
            let peak = rng.random_range(config.peak_min_pa..=config.peak_max_pa) * p_factor;
            let t_plus = rng.random_range(config.t_plus_min_ms..=config.t_plus_max_ms) * 1e-3 * t_factor;
            let onset = rng.random_range(onsets.clone());
            friedlander(peak, t_plus, config.fs, config.frame_len, onset)?.relabel(class, format!("{class}-{k:04}"))
        })
        .collect()
}

/// Generates the synthetic corpus in memory.
pub fn synthesize_corpus(config: &RunConfig) -> Result<Corpus> {
    config.validate()?;
    let noises = (0..3)
        .map(|k| {
            let rec = gen_vehicle_noise_with(
                &config.noise,
                derive_seed(config.seed, &[2, k]),
                config.noise_duration_s,
                config.fs,
                config.noise_rms_pa,
            )?;
            NoiseRecord::new(rec.waveform, format!("noise-{k}"))
        })
        .collect::<Result<_>>()?;
    Ok(Corpus {
        shots_a: synth_shots(config, CLASS_A, 0, config.shots_a, 1.0, 1.0)?,
        shots_b: synth_shots(
            config,
            CLASS_B,
            1,
            config.shots_b,
            config.class_b_t_plus_factor,
            config.class_b_peak_factor,
        )?,
        noises,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_sha256(path: &Path) -> Result<String> {
    std::fs::read(path).map(|b| sha256_hex(&b)).map_err(|e| Error::io(path, e))
}

/// One manifest line: a WAV or sidecar file belonging to a shot or noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// `shot` or `noise`.
    pub kind: String,
    pub id: String,
    /// Caliber class for shots, `-` for noise.
    pub class: String,
    /// Relative to the corpus directory.
    pub path: String,
    pub sha256: String,
}

/// Writes the corpus as WAV + sidecar files and a checksummed manifest.
pub fn write_corpus(corpus: &Corpus, dir: &Path, config: &RunConfig) -> Result<Vec<ManifestEntry>> {
    create_dir_all(&dir.join("shots"))?;
    create_dir_all(&dir.join("noise"))?;
    let mut entries = Vec::new();
    let mut add = |kind: &str, id: &str, class: &str, rel: String| -> Result<()> {
        for rel in [rel.clone(), sidecar_path(Path::new(&rel)).to_string_lossy().into_owned()] {
            entries.push(ManifestEntry {
                kind: kind.into(),
                id: id.into(),
                class: class.into(),
                sha256: file_sha256(&dir.join(&rel))?,
                path: rel,
            });
        }
        Ok(())
    };
    for shot in corpus.shots_a.iter().chain(&corpus.shots_b) {
        let rel = format!("shots/{}.wav", shot.shot_id);
        save_shot(&dir.join(&rel), shot, config.wav_encoding)?;
        add("shot", &shot.shot_id, &shot.caliber_class, rel)?;
    }
    for noise in &corpus.noises {
        let rel = format!("noise/{}.wav", noise.noise_id);
        save_noise(&dir.join(&rel), noise, config.wav_encoding)?;
        add("noise", &noise.noise_id, "-", rel)?;
    }
    let mut text = format!("{MANIFEST_HEADER}\nkind\tid\tclass\tpath\tsha256\n");
    for e in &entries {
        let _ = writeln!(text, "{}\t{}\t{}\t{}\t{}", e.kind, e.id, e.class, e.path, e.sha256);
    }
    write_atomic(&dir.join(MANIFEST), text.as_bytes())?;
    Ok(entries)
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join(MANIFEST);
    let text = read_to_string(&path)?;
    let bad = |reason: String| Error::Metadata {
        path: path.clone(),
        reason,
    };
    let mut lines = text.lines();
    if lines.next() != Some(MANIFEST_HEADER) {
        return Err(bad("missing or unknown manifest header".into()));
    }
    if lines.next() != Some("kind\tid\tclass\tpath\tsha256") {
        return Err(bad("missing column header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() != 5 || !matches!(f[0], "shot" | "noise") {
                return Err(bad(format!("malformed line {l:?}")));
            }
            Ok(ManifestEntry {
                kind: f[0].into(),
                id: f[1].into(),
                class: f[2].into(),
                path: f[3].into(),
                sha256: f[4].into(),
            })
        })
        .collect()
}

/// Loads a corpus, verifying every file against its manifest checksum.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    require(&dir.join(MANIFEST), "corpus manifest")?;
    let entries = read_manifest(dir)?;
    for e in &entries {
        let path = dir.join(&e.path);
        if file_sha256(&path)? != e.sha256 {
            return Err(Error::ChecksumMismatch { path });
        }
    }
    let mut corpus = Corpus {
        shots_a: Vec::new(),
        shots_b: Vec::new(),
        noises: Vec::new(),
    };
    for e in entries.iter().filter(|e| e.path.ends_with(".wav")) {
        let path = dir.join(&e.path);
        if e.kind == "noise" {
            corpus.noises.push(load_noise(&path)?);
            continue;
        }
        let shot = load_shot(&path)?;
        if shot.shot_id != e.id || shot.caliber_class != e.class {
            return Err(Error::Metadata {
                path: sidecar_path(&path),
                reason: format!("sidecar identity does not match manifest entry {}", e.id),
            });
        }
        match e.class.as_str() {
            CLASS_A => corpus.shots_a.push(shot),
            CLASS_B => corpus.shots_b.push(shot),
            other => {
                return Err(Error::Metadata {
                    path: dir.join(MANIFEST),
                    reason: format!("unknown caliber class {other:?}"),
                })
            }
        }
    }
    if corpus.noises.len() != 3 {
        return Err(Error::Metadata {
            path: dir.join(MANIFEST),
            reason: format!("expected 3 noise records, found {}", corpus.noises.len()),
        });
    }
    Ok(corpus)
}

fn check_corpus_fs(corpus: &Corpus, fs: u32) -> Result<()> {
    let shots = corpus.shots_a.iter().chain(&corpus.shots_b).map(|s| (&s.shot_id, s.waveform.fs()));
    let noises = corpus.noises.iter().map(|n| (&n.noise_id, n.waveform.fs()));
    match shots.chain(noises).find(|(_, f)| *f != fs) {
        Some((id, f)) => Err(Error::InvalidWaveform(format!("{id} is sampled at {f} Hz, config says {fs} Hz"))),
        None => Ok(()),
    }
}

/// `gen-data`: synthesizes and writes the corpus.
pub fn cmd_gen_data(config: &RunConfig, layout: &Layout) -> Result<Vec<ManifestEntry>> {
    config.validate()?;
    write_resolved_config(config, &layout.out)?;
    let corpus = synthesize_corpus(config)?;
    write_corpus(&corpus, &layout.corpus, config)
}

// ---------------------------------------------------------------- training

pub fn resampler(config: &RunConfig) -> Result<Resampler> {
    Resampler::anti_alias(config.fs as f64, config.decim_factor, config.aa_order, config.aa_taps)
}

/// Initial kernel of the trainable filter layer.
pub fn network_filter(config: &RunConfig) -> Result<FilterSpec> {
    design_butterworth(
        config.net_filter_order,
        config.net_filter_cutoff_hz(),
        config.decimated_fs(),
        config.net_filter_taps,
    )
}

/// The shot/noise split for one caliber class, at rotation 0.
pub fn split_for(config: &RunConfig, shots: &[ShotRecord], noises: &[NoiseRecord]) -> Result<DatasetSplit> {
    build_split(shots, noises, config.sections_per_noise, derive_seed(config.seed, &[3]))
}

/// Amplitude normalisation: the largest decimated clean sample in training.
pub fn training_scale(examples: &[NoisyExample], split: &DatasetSplit) -> f64 {
    examples
        .iter()
        .filter(|e| split.train_combos.contains(&e.combo))
        .flat_map(|e| e.clean_dec.iter())
        .fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone)]
pub struct RotationRun {
    pub rotation: usize,
    pub checkpoint: Checkpoint,
    pub log: ConvergenceLog,
    /// Materialized example ids that received a gradient.
    pub trained_ids: std::collections::BTreeSet<usize>,
    pub validation_ids: Vec<usize>,
}

/// Trains one validation rotation on class A, calling `observer` every iteration.
pub fn train_rotation_with(
    config: &RunConfig,
    corpus: &Corpus,
    rotation: usize,
    observer: impl FnMut(&IterationState<'_>),
) -> Result<RotationRun> {
    check_corpus_fs(corpus, config.fs)?;
    let split = split_for(config, &corpus.shots_a, &corpus.noises)?.rotate(rotation)?;
    let resampler = resampler(config)?;
    let mut combos = split.train_combos.clone();
    combos.push(split.validation_combo);
    let examples = materialize_examples(
        &split,
        &corpus.shots_a,
        &corpus.noises,
        &combos,
        &config.materialize_config(derive_seed(config.seed, &[4])),
        &resampler,
    )?;
    let scale = training_scale(&examples, &split);
    let net = Network::init(
        config.dim(),
        config.hidden,
        derive_seed(config.seed, &[6, rotation as u64]),
        &network_filter(config)?,
    )?;
    let mut train_cfg = config.train_config();
    train_cfg.seed = derive_seed(config.seed, &[5, rotation as u64]);
    let outcome = train_curriculum_with(net, &examples, &split, &config.phase_plan(), &train_cfg, scale, observer)?;
    Ok(RotationRun {
        rotation,
        checkpoint: Checkpoint {
            network: outcome.network,
            fs: config.fs,
            frame_len: config.frame_len,
            decim_factor: config.decim_factor,
            aa_order: config.aa_order,
            aa_taps: config.aa_taps,
            scale,
        },
        log: outcome.log,
        trained_ids: outcome.trained_ids,
        validation_ids: examples
            .iter()
            .filter(|e| e.combo == split.validation_combo)
            .map(|e| e.id)
            .collect(),
    })
}

/// `train`: one checkpoint and convergence log per selected rotation.
/// `on_rotation` sees each run as soon as its files are written.
pub fn cmd_train(config: &RunConfig, layout: &Layout, mut on_rotation: impl FnMut(&RotationRun)) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let corpus = load_corpus(&layout.corpus)?;
    write_resolved_config(config, &layout.out)?;
    create_dir_all(&layout.checkpoints)?;
    create_dir_all(&layout.logs)?;
    let mut written = Vec::new();
    for k in config.rotations.indices() {
        let run = train_rotation_with(config, &corpus, k, |_| {})?;
        let ck = layout.checkpoint(k);
        run.checkpoint.save(&ck)?;
        write_atomic(&layout.convergence_log(k), run.log.to_csv().as_bytes())?;
        on_rotation(&run);
        written.push(ck);
    }
    Ok(written)
}

// ---------------------------------------------------------------- evaluation

/// Detector outcomes for one evaluation example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub snr_db: f64,
    pub clean: bool,
    pub noisy: bool,
    pub denoised: bool,
}

impl Trial {
    /// Parallel detection on the noisy and denoised signals.
    pub fn combined(&self) -> bool {
        self.noisy || self.denoised
    }

    pub fn get(&self, c: Condition) -> bool {
        match c {
            Condition::Clean => self.clean,
            Condition::Noisy => self.noisy,
            Condition::Denoised => self.denoised,
            Condition::Combined => self.combined(),
        }
    }
}

fn run_trial(denoiser: &Denoiser, e: &NoisyExample, config: &RunConfig) -> Result<Trial> {
    let det = config.detector();
    let tol = config.tolerance();
    let hit = |x: &[f64]| -> Result<bool> {
        Ok(match_detections(&detect_impulses(x, config.fs, &det)?, &[e.onset], tol).matched[0])
    };
    Ok(Trial {
        snr_db: e.grid_snr_db,
        clean: hit(&e.clean)?,
        noisy: hit(&e.noisy)?,
        denoised: hit(&denoiser.denoise_frame(&e.noisy)?)?,
    })
}

/// Runs every example through all detector conditions, in parallel across
/// examples; the result order follows `examples`.
pub fn evaluate_examples(denoiser: &Denoiser, examples: &[NoisyExample], config: &RunConfig) -> Result<Vec<Trial>> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(examples.len().max(1));
    let chunk = examples.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = examples
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|e| run_trial(denoiser, e, config)).collect::<Result<Vec<_>>>()))
            .collect();
        let mut out = Vec::with_capacity(examples.len());
        for h in handles {
            out.extend(h.join().expect("evaluation worker panicked")?);
        }
        Ok(out)
    })
}

/// Per-condition, per-SNR-bin detection rates with margins, condition-major.
pub fn score_trials(trials: &[Trial]) -> Result<Vec<(Condition, DetectionScore)>> {
    let mut rows = Vec::new();
    for c in Condition::ALL {
        let bins = SnrBin::group(trials.iter().map(|t| (t.snr_db, t.get(c))));
        rows.extend(score_rates(&bins)?.into_iter().map(|s| (c, s)));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Class A validation trials, concatenated across rotations.
    pub validation: Vec<Trial>,
    /// Held-out class B trials, concatenated across rotations.
    pub cross_caliber: Vec<Trial>,
}

fn load_checkpoint_for(config: &RunConfig, path: &Path) -> Result<Denoiser> {
    require(path, "checkpoint")?;
    let ck = Checkpoint::load(path)?;
    if ck.fs != config.fs || ck.frame_len != config.frame_len || ck.decim_factor != config.decim_factor {
        return Err(Error::Checkpoint {
            path: path.to_path_buf(),
            reason: format!(
                "trained for fs {} / frame {} / factor {}, config has {} / {} / {}",
                ck.fs, ck.frame_len, ck.decim_factor, config.fs, config.frame_len, config.decim_factor
            ),
        });
    }
    Denoiser::from_checkpoint(&ck)
}

/// Scores every selected rotation's validation combo with its own checkpoint,
/// plus the held-out class on the same noise section.
pub fn evaluate_corpus(config: &RunConfig, corpus: &Corpus, checkpoints: &[(usize, PathBuf)]) -> Result<Evaluation> {
    check_corpus_fs(corpus, config.fs)?;
    let resampler = resampler(config)?;
    let mcfg = config.materialize_config(derive_seed(config.seed, &[4]));
    let bcfg = config.materialize_config(derive_seed(config.seed, &[7]));
    let split_a = split_for(config, &corpus.shots_a, &corpus.noises)?;
    let split_b = split_for(config, &corpus.shots_b, &corpus.noises)?;
    let mut eval = Evaluation {
        validation: Vec::new(),
        cross_caliber: Vec::new(),
    };
    for (k, path) in checkpoints {
        let denoiser = load_checkpoint_for(config, path)?;
        let a = split_a.rotate(*k)?;
        let ex = materialize_examples(&a, &corpus.shots_a, &corpus.noises, &[a.validation_combo], &mcfg, &resampler)?;
        eval.validation.extend(evaluate_examples(&denoiser, &ex, config)?);
        let b = split_b.rotate(*k)?;
        let ex = materialize_examples(&b, &corpus.shots_b, &corpus.noises, &[b.validation_combo], &bcfg, &resampler)?;
        eval.cross_caliber.extend(evaluate_examples(&denoiser, &ex, config)?);
    }
    Ok(eval)
}

/// `evaluate`: validation and cross-caliber score CSVs.
pub fn cmd_evaluate(config: &RunConfig, layout: &Layout) -> Result<Evaluation> {
    config.validate()?;
    let checkpoints: Vec<(usize, PathBuf)> = config
        .rotations
        .indices()
        .into_iter()
        .map(|k| (k, layout.checkpoint(k)))
        .collect();
    for (_, p) in &checkpoints {
        require(p, "checkpoint")?;
    }
    let corpus = load_corpus(&layout.corpus)?;
    write_resolved_config(config, &layout.out)?;
    let eval = evaluate_corpus(config, &corpus, &checkpoints)?;
    create_dir_all(&layout.scores)?;
    write_atomic(&layout.validation_scores(), scores_csv(&score_trials(&eval.validation)?).as_bytes())?;
    write_atomic(&layout.cross_caliber_scores(), scores_csv(&score_trials(&eval.cross_caliber)?).as_bytes())?;
    Ok(eval)
}

// ---------------------------------------------------------------- denoise

/// `denoise`: frame-by-frame denoising of one WAV file. Annotations carry over.
pub fn denoise_file(config: &RunConfig, checkpoint: &Path, input: &Path, output: &Path) -> Result<DenoiseStats> {
    require(input, "input")?;
    let denoiser = load_checkpoint_for(config, checkpoint)?;
    let w = load_wav(input)?;
    if w.fs() != denoiser.fs() {
        return Err(Error::InvalidWaveform(format!(
            "{} is sampled at {} Hz, checkpoint expects {} Hz",
            input.display(),
            w.fs(),
            denoiser.fs()
        )));
    }
    let (y, stats) = denoiser.denoise(w.samples())?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir_all(dir)?;
    }
    save_wav(
        output,
        &Waveform::with_annotations(y, w.fs(), w.annotations().to_vec())?,
        config.wav_encoding,
    )?;
    Ok(stats)
}

// ---------------------------------------------------------------- report

/// `(condition, snr_db, p, delta_p, n)`
type ScoreRow = (String, f64, f64, f64, usize);

fn parse_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    let text = read_to_string(path)?;
    let bad = |l: &str| Error::Metadata {
        path: path.to_path_buf(),
        reason: format!("malformed score row {l:?}"),
    };
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 5 {
                return Err(bad(l));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(l));
            Ok((f[1].to_string(), num(f[0])?, num(f[2])?, num(f[3])?, f[4].parse().map_err(|_| bad(l))?))
        })
        .collect()
}

fn parse_log(path: &Path) -> Result<Vec<LogRecord>> {
    let text = read_to_string(path)?;
    let bad = |l: &str| Error::Metadata {
        path: path.to_path_buf(),
        reason: format!("malformed log row {l:?}"),
    };
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad(l));
            }
            Ok(LogRecord {
                phase: f[0].parse().map_err(|_| bad(l))?,
                iter: f[1].parse().map_err(|_| bad(l))?,
                train_mse: f[2].parse().map_err(|_| bad(l))?,
                val_mse: f[3].parse().map_err(|_| bad(l))?,
                f_frozen: f[4] == "1",
                n_active: f[5].parse().map_err(|_| bad(l))?,
            })
        })
        .collect()
}

/// `report`: a long-format plot file (`figure,series,x,y,err`) and a
/// markdown summary that embeds the resolved config.
pub fn cmd_report(config: &RunConfig, layout: &Layout) -> Result<PathBuf> {
    config.validate()?;
    let rotations = config.rotations.indices();
    let score_files = [
        ("detection_rate_validation", layout.validation_scores()),
        ("detection_rate_cross_caliber", layout.cross_caliber_scores()),
    ];
    for (_, p) in &score_files {
        require(p, "score file")?;
    }
    for &k in &rotations {
        require(&layout.convergence_log(k), "convergence log")?;
    }
    write_resolved_config(config, &layout.out)?;

    let mut plot = String::from("figure,series,x,y,err\n");
    let mut md = String::from("# mbdenoise report\n");
    for (figure, path) in &score_files {
        let rows = parse_scores(path)?;
        let _ = write!(md, "\n## {figure}\n\n| SNR (dB) | condition | P | δP | N |\n|---|---|---|---|---|\n");
        for (cond, snr, p, dp, n) in &rows {
            let _ = writeln!(plot, "{figure},{cond},{snr},{p},{dp}");
            let _ = writeln!(md, "| {snr} | {cond} | {p:.3} | {dp:.3} | {n} |");
        }
    }
    let plan = config.phase_plan();
    let _ = write!(
        md,
        "\n## convergence\n\nPre/post-release columns average train MSE over up to 50 iterations either side of the filter-layer release.\n\n\
         | rotation | phase | threshold (dB) | n_active | start | pre-release | post-release | end | val end |\n\
         |---|---|---|---|---|---|---|---|---|\n"
    );
    for &k in &rotations {
        let log = parse_log(&layout.convergence_log(k))?;
        for r in &log {
            let x = r.phase * plan.total_iters + r.iter;
            let _ = writeln!(plot, "convergence_train,rotation{k},{x},{},", r.train_mse);
            let _ = writeln!(plot, "convergence_val,rotation{k},{x},{},", r.val_mse);
        }
        for (p, &thr) in plan.thresholds_db.iter().enumerate() {
            let ph: Vec<&LogRecord> = log.iter().filter(|r| r.phase == p).collect();
            if ph.is_empty() {
                continue;
            }
            let f = plan.freeze_iters;
            let w = 50.min(f).min(plan.total_iters - f).max(1);
            let mean = |s: &[&LogRecord]| s.iter().map(|r| r.train_mse).sum::<f64>() / s.len().max(1) as f64;
            let _ = writeln!(
                md,
                "| {k} | {p} | {thr} | {} | {:.4e} | {:.4e} | {:.4e} | {:.4e} | {:.4e} |",
                ph[0].n_active,
                ph[0].train_mse,
                mean(&ph[f.saturating_sub(w)..f.min(ph.len())]),
                mean(&ph[f.min(ph.len())..(f + w).min(ph.len())]),
                ph[ph.len() - 1].train_mse,
                ph[ph.len() - 1].val_mse,
            );
        }
    }
    let _ = write!(md, "\n## resolved config\n\n```\n{}```\n", config.render());
    create_dir_all(&layout.report)?;
    write_atomic(&layout.report.join("plot_data.csv"), plot.as_bytes())?;
    let path = layout.report.join("report.md");
    write_atomic(&path, md.as_bytes())?;
    Ok(path)
}
