use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use voxface_cli::{cmd_ablate, cmd_eval, cmd_predict, cmd_synth, cmd_train, encode_ablation, CliError, RunConfig, REPORT};

#[derive(Parser)]
#[command(name = "voxface", version, about = "Depth view to voxel face reconstruction")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (or report file for `eval`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["paper", "desk"])]
    preset: Option<String>,
    /// Extra `key=value` settings applied after the config file
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize corrupted depth views with ground-truth grids
    Synth {
        #[arg(long)]
        count: Option<usize>,
        /// Overwrite an existing or partial dataset
        #[arg(long)]
        force: bool,
    },
    /// Train generator and critic on a synthesized dataset
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        no_attention: bool,
        #[arg(long)]
        no_sparsity: bool,
    },
    /// Predict occupancy grids for a depth file or directory
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Also write a surface mesh per prediction
        #[arg(long)]
        mesh: bool,
        #[arg(long)]
        threshold: Option<f32>,
    },
    /// Score predictions against a dataset's ground truth
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        threshold: Option<f32>,
        /// Write per-prediction surfaces with vertex distances here
        #[arg(long)]
        surfaces: Option<PathBuf>,
    },
    /// Train and score all four attention × sparsity variants
    Ablate {
        #[arg(long)]
        data: PathBuf,
    },
}

fn config(shared: &Shared) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(shared.config.as_deref(), shared.preset.as_deref())?;
    for kv in &shared.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = shared.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(shared: &Shared, default: &str) -> PathBuf {
    shared.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let shared = &cli.shared;
    let mut cfg = config(shared)?;
    match cli.command {
        Command::Synth { count, force } => {
            if let Some(c) = count {
                cfg.samples = c;
            }
            let out = out_dir(shared, "data");
            let records = cmd_synth(&cfg, &out, force)?;
            println!("wrote {} samples to {}", records.len(), out.display());
        }
        Command::Train { data, iterations, resume, no_attention, no_sparsity } => {
            if let Some(n) = iterations {
                cfg.iterations = n;
            }
            cfg.attention &= !no_attention;
            cfg.sparsity &= !no_sparsity;
            let out = out_dir(shared, "run");
            let done = cmd_train(&cfg, &data, &out, resume.as_deref())?;
            println!("trained {} iterations; final checkpoint {}", done.trainer.iteration, done.final_checkpoint.display());
        }
        Command::Predict { checkpoint, input, mesh, threshold } => {
            let out = out_dir(shared, "predictions");
            let summary = cmd_predict(&checkpoint, &input, &out, mesh, threshold.unwrap_or(cfg.threshold))?;
            println!("wrote {} predictions to {}", summary.written.len(), out.display());
            if !summary.failures.is_empty() {
                for f in &summary.failures {
                    eprintln!("{f}");
                }
                return Err(CliError::Data(format!("{} inputs failed", summary.failures.len())));
            }
        }
        Command::Eval { pred, data, threshold, surfaces } => {
            let report = shared.out.clone().unwrap_or_else(|| Path::new(&pred).join(REPORT));
            let r = cmd_eval(&pred, &data, threshold.unwrap_or(cfg.threshold), &report, surfaces.as_deref())?;
            println!("mean IoU {:.6}  mean CE {:.6}  ({} samples) -> {}", r.mean_iou, r.mean_ce, r.samples.len(), report.display());
        }
        Command::Ablate { data } => {
            let rows = cmd_ablate(&cfg, &data, &out_dir(shared, "ablation"))?;
            print!("{}", encode_ablation(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("voxface: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
