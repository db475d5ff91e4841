use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mbdenoise::config::RunConfig;
use mbdenoise::pipeline::{self, Layout};
use mbdenoise::Result;

#[derive(Parser)]
#[command(name = "mbdenoise", version, about = "Muzzle-blast denoising: data, training, evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Extra key=value overrides, applied after the file and before --seed.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the shot and noise corpus.
    GenData(Common),
    /// Train one network per validation rotation.
    Train(Common),
    /// Denoise a WAV file with a trained checkpoint.
    Denoise {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to `<out>/<input stem>.denoised.wav`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Defaults to rotation 0 under the checkpoint directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Score detection on clean, noisy, denoised and combined signals.
    Evaluate(Common),
    /// Emit plot-ready data and a markdown report.
    Report(Common),
}

fn resolve(common: &Common) -> Result<(RunConfig, Layout)> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&common.overrides)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let layout = Layout::new(&cfg, &common.out);
    Ok((cfg, layout))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(c) => {
            let (cfg, layout) = resolve(&c)?;
            let entries = pipeline::cmd_gen_data(&cfg, &layout)?;
            eprintln!("wrote {} files to {}", entries.len(), layout.corpus.display());
        }
        Command::Train(c) => {
            let (cfg, layout) = resolve(&c)?;
            let start = Instant::now();
            pipeline::cmd_train(&cfg, &layout, |run| {
                let last = run.log.records().last();
                eprintln!(
                    "rotation {} done after {:.1} s: final train mse {:.4e}, val mse {:.4e}",
                    run.rotation,
                    start.elapsed().as_secs_f64(),
                    last.map_or(f64::NAN, |r| r.train_mse),
                    last.map_or(f64::NAN, |r| r.val_mse),
                );
            })?;
        }
        Command::Denoise {
            common,
            input,
            output,
            checkpoint,
        } => {
            let (cfg, layout) = resolve(&common)?;
            let checkpoint = checkpoint.unwrap_or_else(|| layout.checkpoint(0));
            let output = output.unwrap_or_else(|| {
                let stem = input.file_stem().unwrap_or_default().to_string_lossy();
                layout.out.join(format!("{stem}.denoised.wav"))
            });
            let stats = pipeline::denoise_file(&cfg, &checkpoint, &input, &output)?;
            let budget = cfg.frame_len as f64 / cfg.fs as f64;
            eprintln!(
                "{}: {} frames, mean {:.3} ms, max {:.3} ms per frame (budget {:.1} ms)",
                output.display(),
                stats.frames(),
                stats.mean_latency_s() * 1e3,
                stats.max_latency_s() * 1e3,
                budget * 1e3,
            );
        }
        Command::Evaluate(c) => {
            let (cfg, layout) = resolve(&c)?;
            let eval = pipeline::cmd_evaluate(&cfg, &layout)?;
            eprintln!(
                "scored {} validation and {} cross-caliber trials into {}",
                eval.validation.len(),
                eval.cross_caliber.len(),
                layout.scores.display()
            );
        }
        Command::Report(c) => {
            let (cfg, layout) = resolve(&c)?;
            let path = pipeline::cmd_report(&cfg, &layout)?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
