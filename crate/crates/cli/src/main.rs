//! `eigenexpr` command-line tool.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 for data errors
//! (unreadable or malformed files, crops out of bounds, degenerate regions).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eigenexpr::model::write_atomic;
use eigenexpr::{
    classify, evaluate, load_gray, load_model, load_replay_dir, render, replay, save_model, train, CropSet,
    TrainingManifest,
};

const USAGE_ERROR: u8 = 1;
const DATA_ERROR: u8 = 2;
const THREADS_VAR: &str = "EIGENEXPR_THREADS";

#[derive(Parser)]
#[command(
    name = "eigenexpr",
    version,
    about = "Facial expression recognition by regional eigenvector voting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model from a labelled manifest and save it.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify one image and print the distance and vote tables.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
        /// JSON object mapping each region name to {x, y, w, h}.
        #[arg(long)]
        crops: PathBuf,
    },
    /// Vote on stored distance tables (`<region>.txt` per region).
    Votes {
        #[arg(long)]
        replay: PathBuf,
    },
    /// Classify every manifest entry and write a JSON report.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Manifest the model was trained on; used to report whether the split is disjoint.
        #[arg(long)]
        train_manifest: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Data(eigenexpr::Error),
}

impl From<eigenexpr::Error> for Failure {
    fn from(e: eigenexpr::Error) -> Self {
        Failure::Data(e)
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("{THREADS_VAR} must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot configure {n} threads: {e}")))?;
    }
    Ok(())
}

fn run_train(manifest: &Path, out: &Path) -> Result<String, Failure> {
    let manifest = TrainingManifest::load(manifest)?;
    let model = train(&manifest)?;
    save_model(&model, out)?;
    let mut text = format!("trained on {} images\n", manifest.entries.len());
    let _ = writeln!(text, "{:<10} {:<10} eigenvalues", "expression", "region");
    for (expression, basis) in model.cells() {
        let values: Vec<String> = basis.eigenvalues().iter().map(|v| format!("{v:.6e}")).collect();
        let _ = writeln!(
            text,
            "{:<10} {:<10} {}",
            expression.name(),
            basis.region().name(),
            values.join(" ")
        );
    }
    let _ = writeln!(text, "model written to {}", out.display());
    Ok(text)
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Train { manifest, out } => run_train(&manifest, &out),
        Command::Classify { model, image, crops } => {
            let model = load_model(&model)?;
            let crops = CropSet::load(&crops)?;
            let image = load_gray(&image)?;
            Ok(render::classification(&classify(&image, &crops, &model)?))
        }
        Command::Votes { replay: dir } => Ok(render::replay_summary(&replay(load_replay_dir(&dir)?)?)),
        Command::Eval {
            model,
            manifest,
            report,
            train_manifest,
        } => {
            let model = load_model(&model)?;
            let test = TrainingManifest::load(&manifest)?;
            let training = train_manifest.as_deref().map(TrainingManifest::load).transpose()?;
            let result = evaluate(&model, &test, training.as_ref());
            write_atomic(&report, result.to_json().as_bytes())?;
            Ok(result.render())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match configure_threads().and_then(|()| run(cli)) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE_ERROR)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(DATA_ERROR)
        }
    }
}
