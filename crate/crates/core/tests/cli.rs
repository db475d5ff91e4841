use std::path::Path;
use std::process::{Command, Output};

const SMOKE: &str = "shots_a = 8\nshots_b = 4\nnoise_duration_s = 1\nphase_thresholds_db = 0, -5\n\
                     freeze_iters = 5\ntotal_iters = 10\nhidden = 8\nrotations = 0\n";

fn run(args: &[&str], out: &Path, cfg: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbdenoise"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn setup() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("smoke.cfg");
    std::fs::write(&cfg, SMOKE).unwrap();
    (dir, cfg)
}

#[test]
fn full_job_sequence_succeeds() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    for cmd in ["gen-data", "train", "evaluate", "report"] {
        let o = run(&[cmd], &out, &cfg);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(
        &["denoise", "--input", out.join("corpus/noise/noise-1.wav").to_str().unwrap()],
        &out,
        &cfg,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("noise-1.denoised.wav").exists());
    assert!(out.join("checkpoints/rotation-0.ckpt").exists());
    assert!(!out.join("checkpoints/rotation-1.ckpt").exists());
    assert!(out.join("report/report.md").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let (dir, cfg) = setup();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&["gen-data", "--seed", "5"], &a, &cfg).status.success());
    assert!(run(&["gen-data", "--seed", "6"], &b, &cfg).status.success());
    let resolved = std::fs::read_to_string(a.join("config.resolved.txt")).unwrap();
    assert!(resolved.contains("seed = 5\n"));
    let m = |p: &Path| std::fs::read(p.join("corpus/manifest.tsv")).unwrap();
    assert_ne!(m(&a), m(&b));
}

#[test]
fn exit_codes() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    let code = |o: Output| o.status.code().unwrap();

    assert_eq!(code(run(&["train", "--set", "hidden=lots"], &out, &cfg)), 1);
    assert_eq!(code(run(&["train", "--set", "frame_len=2047"], &out, &cfg)), 1);
    // no corpus yet
    assert_eq!(code(run(&["train"], &out, &cfg)), 1);

    assert_eq!(code(run(&["gen-data"], &out, &cfg)), 0);
    let wav = out.join("corpus/noise/noise-2.wav");
    let mut bytes = std::fs::read(&wav).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    std::fs::write(&wav, bytes).unwrap();
    assert_eq!(code(run(&["train"], &out, &cfg)), 2);

    let fresh = dir.path().join("fresh");
    assert_eq!(code(run(&["gen-data"], &fresh, &cfg)), 0);
    assert_eq!(code(run(&["train", "--set", "lr=1e300"], &fresh, &cfg)), 3);

    let o = Command::new(env!("CARGO_BIN_EXE_mbdenoise")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
