//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! The desk-scale run (criteria 4, 7 to 11) trains all six rotations on the
//! default corpus and takes several minutes on one core.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use mbdenoise::config::RunConfig;
use mbdenoise::detect::{margin_of_error, score_rates, Condition, DetectionScore, SnrBin};
use mbdenoise::dsp::{design_butterworth, kernel_to_matrix, mix_at_snr, snr_db};
use mbdenoise::net::{batch_mse, Checkpoint, Denoiser, Network};
use mbdenoise::pipeline::{self, Layout, Trial};
use mbdenoise::signals::{friedlander, gen_vehicle_noise};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn direct_conv(kernel: &[f64], x: &[f64]) -> Vec<f64> {
    let half = (kernel.len() / 2) as i64;
    (0..x.len() as i64)
        .map(|n| {
            (-half..=half)
                .filter(|k| (0..x.len() as i64).contains(&(n - k)))
                .map(|k| kernel[(k + half) as usize] * x[(n - k) as usize])
                .sum()
        })
        .collect()
}

fn filter_matrix_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let taps = 2 * rng.random_range(0..128) + 1;
        let kernel: Vec<f64> = (0..taps).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = kernel_to_matrix(&kernel, 256).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = m.apply(&x).unwrap();
            for (a, b) in y.iter().zip(direct_conv(&kernel, &x)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst < 1e-9 && secs < 1.0, format!("max abs error {worst:.2e}, {secs:.3} s"))
}

fn butterworth_law() -> Outcome {
    let fs = 32_768.0;
    let fc = fs / 16.0;
    let spec = design_butterworth(8, fc, fs, 255).unwrap();
    let law = |f: f64| -10.0 * (1.0 + (f / fc).powi(16)).log10();
    // 50 log-spaced points from fc/100 to 2·fc
    let worst = (0..50)
        .map(|k| {
            let f = fc / 100.0 * 200f64.powf(k as f64 / 49.0);
            (spec.magnitude_db(f) - law(f)).abs()
        })
        .fold(0.0f64, f64::max);
    let at_fc = spec.magnitude_db(fc);
    let at_2fc = spec.magnitude_db(2.0 * fc);
    outcome(
        worst < 0.5 && (at_fc + 3.01).abs() < 0.1 && (at_2fc + 48.16).abs() < 0.5,
        format!("max deviation {worst:.3} dB, {at_fc:.3} dB at fc, {at_2fc:.2} dB at 2fc"),
    )
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let filter = design_butterworth(8, 32_768.0 / 41.0, 4096.0, 31).unwrap();
    let eps = 1e-5;
    let (mut ok, mut total) = (0, 0);
    let mut per_group = [0usize; 5];
    for (h, hidden) in [32usize, 64, 128].into_iter().enumerate() {
        let mut net = Network::init(256, hidden, 10 + h as u64, &filter).unwrap();
        net.b1.mapv_inplace(|_| rng.random_range(-0.3..0.3));
        net.b2.mapv_inplace(|_| rng.random_range(-0.3..0.3));
        let x = Array2::from_shape_fn((4, 256), |_| rng.random_range(-1.0..1.0));
        let t = Array2::from_shape_fn((4, 256), |_| rng.random_range(-1.0..1.0));
        let loss = |n: &Network| batch_mse(&n.forward_batch(x.view()).unwrap().0, t.view()).unwrap().0.mse;
        let (y, cache) = net.forward_batch(x.view()).unwrap();
        let g = net.backward(&cache, batch_mse(&y, t.view()).unwrap().1.view()).unwrap();
        let samples = if h == 2 { 334 } else { 333 };
        for _ in 0..samples {
            let group = total % 5;
            let mut plus = net.clone();
            let mut minus = net.clone();
            let analytic = match group {
                0 => {
                    let (i, j) = (rng.random_range(0..hidden), rng.random_range(0..256));
                    plus.w1[[i, j]] += eps;
                    minus.w1[[i, j]] -= eps;
                    g.w1[[i, j]]
                }
                1 => {
                    let i = rng.random_range(0..hidden);
                    plus.b1[i] += eps;
                    minus.b1[i] -= eps;
                    g.b1[i]
                }
                2 => {
                    let (i, j) = (rng.random_range(0..256), rng.random_range(0..hidden));
                    plus.w2[[i, j]] += eps;
                    minus.w2[[i, j]] -= eps;
                    g.w2[[i, j]]
                }
                3 => {
                    let i = rng.random_range(0..256);
                    plus.b2[i] += eps;
                    minus.b2[i] -= eps;
                    g.b2[i]
                }
                _ => {
                    let (i, j) = (rng.random_range(0..256), rng.random_range(0..256));
                    plus.f[[i, j]] += eps;
                    minus.f[[i, j]] -= eps;
                    g.f[[i, j]]
                }
            };
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * eps);
            let denom = analytic.abs().max(numeric.abs());
            let rel = if denom == 0.0 { 0.0 } else { (analytic - numeric).abs() / denom };
            total += 1;
            per_group[group] += 1;
            ok += usize::from(rel < 1e-4);
        }
    }
    let frac = ok as f64 / total as f64;
    outcome(
        total == 1000 && frac >= 0.99 && per_group.iter().all(|&n| n == 200),
        format!("{ok}/{total} parameters within 1e-4 relative error (hidden 32/64/128)"),
    )
}

fn snr_round_trip() -> Outcome {
    let shot = friedlander(10.0, 0.002, 32_768, 2048, 700).unwrap();
    let noise = gen_vehicle_noise(5, 1.0, 32_768, 1.0).unwrap();
    let mut worst = 0.0f64;
    for target in -20..=10 {
        let mix = mix_at_snr(&shot, &noise, 4000, target as f64).unwrap();
        let residual: Vec<f64> = mix.noisy.samples().iter().zip(mix.clean.samples()).map(|(a, b)| a - b).collect();
        // independent recomputation: blast peak over RMS of the added noise
        let peak = shot.waveform.samples()[700..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rms = (residual.iter().map(|v| v * v).sum::<f64>() / residual.len() as f64).sqrt();
        let oracle = 20.0 * (peak / rms).log10();
        let lib = snr_db(&shot, &residual).unwrap();
        worst = worst.max((oracle - target as f64).abs()).max((lib - target as f64).abs());
    }
    outcome(worst < 1e-6, format!("max |achieved - target| {worst:.2e} dB over -20..=10"))
}

fn margin_formula() -> Outcome {
    let mut exact = true;
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for n in [1usize, 100, 300] {
            exact &= margin_of_error(p, n) == (p * (1.0 - p) / n as f64).sqrt();
        }
    }
    let bins = [SnrBin {
        snr_db: 0.0,
        matched: (0..100).map(|k| k < 50).collect(),
    }];
    let scored: Vec<DetectionScore> = score_rates(&bins).unwrap();
    let example = (margin_of_error(0.5, 100) - 0.05).abs() < 1e-15 && (scored[0].delta_p - 0.05).abs() < 1e-15;
    outcome(exact && example, format!("15 grid points exact, (0.5, 100) -> {}", scored[0].delta_p))
}

fn hash_f(n: &Network) -> [u8; 32] {
    let mut h = Sha256::new();
    for v in n.f.iter() {
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize().into()
}

/// Freeze bookkeeping for one rotation, gathered by the training observer.
#[derive(Default)]
struct FreezeTrace {
    /// f never moved while frozen, including across phase boundaries.
    frozen_constant: bool,
    /// First iteration after release in the final phase where f differs.
    final_release_change: Option<usize>,
}

struct DeskRun {
    config: RunConfig,
    layout: Layout,
    train_secs: f64,
    traces: Vec<FreezeTrace>,
    logs: Vec<Vec<mbdenoise::curriculum::LogRecord>>,
    validation: Vec<Trial>,
    cross_caliber: Vec<Trial>,
}

fn desk_run(dir: &Path) -> DeskRun {
    let config = RunConfig::default();
    config.validate().unwrap();
    let layout = Layout::new(&config, dir);
    pipeline::cmd_gen_data(&config, &layout).unwrap();
    let corpus = pipeline::load_corpus(&layout.corpus).unwrap();
    std::fs::create_dir_all(&layout.checkpoints).unwrap();
    std::fs::create_dir_all(&layout.logs).unwrap();
    let plan = config.phase_plan();
    let last_phase = plan.thresholds_db.len() - 1;
    let (mut traces, mut logs) = (Vec::new(), Vec::new());
    let start = Instant::now();
    for k in 0..6 {
        let mut trace = FreezeTrace {
            frozen_constant: true,
            ..Default::default()
        };
        let mut segment: Option<(usize, [u8; 32])> = None;
        let mut before_release = None;
        // the observer sees the network after each iteration's update
        let mut prev = None;
        let run = pipeline::train_rotation_with(&config, &corpus, k, |s| {
            let h = hash_f(s.network);
            let r = s.record;
            if r.f_frozen {
                match segment {
                    Some((p, seg)) if p == r.phase => trace.frozen_constant &= seg == h,
                    _ => {
                        // a frozen segment starts from whatever f the previous step left
                        if let Some(prev) = prev {
                            trace.frozen_constant &= prev == h;
                        }
                        segment = Some((r.phase, h));
                    }
                }
                if r.phase == last_phase {
                    before_release = Some(h);
                }
            } else if r.phase == last_phase
                && trace.final_release_change.is_none()
                && before_release.is_some_and(|b| b != h)
            {
                trace.final_release_change = Some(r.iter - plan.freeze_iters);
            }
            prev = Some(h);
        })
        .unwrap();
        run.checkpoint.save(&layout.checkpoint(k)).unwrap();
        std::fs::write(layout.convergence_log(k), run.log.to_csv()).unwrap();
        eprintln!("  desk rotation {k} trained ({:.0} s elapsed)", start.elapsed().as_secs_f64());
        traces.push(trace);
        logs.push(run.log.records().to_vec());
    }
    let train_secs = start.elapsed().as_secs_f64();
    let eval = pipeline::cmd_evaluate(&config, &layout).unwrap();
    pipeline::cmd_report(&config, &layout).unwrap();
    for path in [layout.validation_scores(), layout.cross_caliber_scores()] {
        eprintln!("{}:\n{}", path.file_name().unwrap().to_string_lossy(), std::fs::read_to_string(&path).unwrap());
    }
    DeskRun {
        config,
        layout,
        train_secs,
        traces,
        logs,
        validation: eval.validation,
        cross_caliber: eval.cross_caliber,
    }
}

fn freeze_contract(desk: &DeskRun) -> Outcome {
    let constant = desk.traces.iter().all(|t| t.frozen_constant);
    let changes: Vec<Option<usize>> = desk.traces.iter().map(|t| t.final_release_change).collect();
    let prompt = changes.iter().all(|c| c.is_some_and(|i| i < 10));
    outcome(
        constant && prompt,
        format!("f constant over all frozen segments: {constant}; final-phase change offset after release per rotation: {changes:?}"),
    )
}

fn convergence_shape(desk: &DeskRun) -> Outcome {
    let plan = desk.config.phase_plan();
    let (f, n) = (plan.freeze_iters, plan.thresholds_db.len());
    let mut jumps = true;
    let mut release = true;
    let mut detail = Vec::new();
    for log in &desk.logs {
        let phase = |p: usize| log.iter().filter(move |r| r.phase == p).collect::<Vec<_>>();
        for p in 1..n {
            jumps &= phase(p)[0].train_mse > phase(p - 1).last().unwrap().train_mse;
        }
        for p in n - 2..n {
            let ph = phase(p);
            let mean = |s: &[&mbdenoise::curriculum::LogRecord]| s.iter().map(|r| r.train_mse).sum::<f64>() / s.len() as f64;
            let (pre, post) = (mean(&ph[f - 50..f]), mean(&ph[f..f + 50]));
            release &= post < pre;
            detail.push(format!("{:.3}", post / pre));
        }
    }
    let budget = desk.train_secs < 1800.0;
    outcome(
        jumps && release && budget,
        format!(
            "jump at every phase start: {jumps}; post/pre-release MSE ratio (last two phases, per rotation): [{}]; 6-rotation training {:.0} s",
            detail.join(", "),
            desk.train_secs
        ),
    )
}

fn rates(trials: &[Trial], snr: f64) -> BTreeMap<&'static str, (f64, f64, usize)> {
    let sel: Vec<&Trial> = trials.iter().filter(|t| t.snr_db == snr).collect();
    let n = sel.len();
    let mut m = BTreeMap::new();
    for (name, c) in [("noisy", Condition::Noisy), ("denoised", Condition::Denoised)] {
        let p = sel.iter().filter(|t| t.get(c)).count() as f64 / n.max(1) as f64;
        m.insert(name, (p, (p * (1.0 - p) / n.max(1) as f64).sqrt(), n));
    }
    m
}

fn denoising_benefit(desk: &DeskRun) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for snr in [-5.0, 0.0] {
        let r = rates(&desk.validation, snr);
        let (pn, dn, n) = r["noisy"];
        let (pd, dd, _) = r["denoised"];
        pass &= n >= 200 && pd >= pn + 0.15 && pd >= 1.3 * pn && pd - pn > 2.0 * (dn + dd);
        detail.push(format!("{snr} dB: noisy {pn:.3}±{dn:.3}, denoised {pd:.3}±{dd:.3}, n={n}"));
    }
    outcome(pass, detail.join("; "))
}

fn cross_caliber(desk: &DeskRun) -> Outcome {
    let r = rates(&desk.cross_caliber, 0.0);
    let (pn, _, n) = r["noisy"];
    let (pd, _, _) = r["denoised"];
    outcome(pd >= pn + 0.10, format!("0 dB held-out class: noisy {pn:.3}, denoised {pd:.3}, n={n}"))
}

fn combined_rule(desk: &DeskRun) -> Outcome {
    let mut pass = true;
    let mut bins = 0;
    for trials in [&desk.validation, &desk.cross_caliber] {
        for snr in &desk.config.snr_grid_db {
            let sel: Vec<&Trial> = trials.iter().filter(|t| t.snr_db == *snr).collect();
            let p = |c: Condition| sel.iter().filter(|t| t.get(c)).count();
            pass &= p(Condition::Combined) >= p(Condition::Noisy).max(p(Condition::Denoised));
            bins += 1;
        }
    }
    outcome(pass, format!("{bins} bins checked on validation and held-out scores"))
}

fn real_time(desk: &DeskRun) -> Outcome {
    let ck = Checkpoint::load(&desk.layout.checkpoint(0)).unwrap();
    let denoiser = Denoiser::from_checkpoint(&ck).unwrap();
    let noise = pipeline::load_corpus(&desk.layout.corpus).unwrap().noises.remove(0);
    let (_, stats) = denoiser.denoise(noise.waveform.samples()).unwrap();
    let mean_ms = stats.mean_latency_s() * 1e3;
    outcome(
        mean_ms < 5.0,
        format!("mean {mean_ms:.3} ms, max {:.3} ms over {} frames", stats.max_latency_s() * 1e3, stats.frames()),
    )
}

fn tree_digest(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

const SMOKE: &str = "shots_a = 12\nshots_b = 6\nnoise_duration_s = 1\nphase_thresholds_db = 0, -5\n\
                     freeze_iters = 10\ntotal_iters = 20\nhidden = 16\n";

fn determinism(scratch: &Path) -> Outcome {
    let exe = env!("CARGO_BIN_EXE_mbdenoise");
    std::fs::create_dir_all(scratch).unwrap();
    let cfg = scratch.join("smoke.cfg");
    std::fs::write(&cfg, SMOKE).unwrap();
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let out = scratch.join(run);
        for cmd in ["gen-data", "train", "evaluate", "report"] {
            let status = Command::new(exe)
                .args([cmd, "--config"])
                .arg(&cfg)
                .args(["--seed", "42", "--out"])
                .arg(&out)
                .status()
                .unwrap();
            if !status.success() {
                return outcome(false, format!("{cmd} failed in run {run}: {status}"));
            }
        }
        trees.push(tree_digest(&out));
    }
    let csvs = trees[0].keys().filter(|p| p.extension().is_some_and(|e| e == "csv")).count();
    let ckpts = trees[0].keys().filter(|p| p.extension().is_some_and(|e| e == "ckpt")).count();
    let same = trees[0] == trees[1];
    outcome(
        same && csvs > 0 && ckpts == 6,
        format!("{} files identical across runs ({csvs} CSVs, {ckpts} checkpoints): {same}", trees[0].len()),
    )
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "filter-matrix oracle", filter_matrix_oracle()),
        (2, "Butterworth law", butterworth_law()),
        (3, "gradient check", gradient_check()),
        (5, "SNR round trip", snr_round_trip()),
        (6, "margin formula", margin_formula()),
        (12, "determinism", determinism(&tmp.path().join("smoke"))),
    ];
    eprintln!("desk-scale run (6 rotations) ...");
    let desk = desk_run(&tmp.path().join("desk"));
    results.extend([
        (4, "freeze contract", freeze_contract(&desk)),
        (7, "convergence shape", convergence_shape(&desk)),
        (8, "denoising benefit", denoising_benefit(&desk)),
        (9, "cross-caliber generalization", cross_caliber(&desk)),
        (10, "combined-detection rule", combined_rule(&desk)),
        (11, "real-time property", real_time(&desk)),
    ]);
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, o) in &results {
        println!("{} {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
