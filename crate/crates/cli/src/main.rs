//! `polytext` command line.
//!
//! Every subcommand writes line-delimited JSON records to stdout. Masks go
//! to PGM files and fit trajectories to CSV files. On failure the process
//! prints one JSON object `{"error": kind, "message": ...}` on stderr and
//! exits nonzero: 2 for usage errors, 1 for everything else.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polytext::config::Config;

#[derive(Debug, Parser)]
#[command(name = "polytext", version, about = "Polygon text detection toolkit")]
struct Cli {
    /// TOML configuration; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build per-level training targets from annotations.
    Labelgen(commands::LabelgenArgs),
    /// Regression, accuracy and focal losses for paired polygons.
    Loss(commands::LossArgs),
    /// Compare analytic loss gradients with finite differences.
    Gradcheck(commands::GradcheckArgs),
    /// Fit a polygon to a target by gradient descent.
    Fit(commands::FitArgs),
    /// Paired comparison of two loss selections over random trials.
    Ablation(commands::AblationArgs),
    /// Turn score and coordinate maps into detections.
    Decode(commands::DecodeArgs),
    /// Polygon non-maximum suppression.
    Nms(commands::NmsArgs),
    /// Precision, recall and F-measure against ground truth.
    Eval(commands::EvalArgs),
    /// Rasterize a polygon to a PGM mask.
    Render(commands::RenderArgs),
}

fn fail(kind: &str, message: &str) {
    let line = serde_json::json!({
        "error": kind,
        "message": message.replace('\n', " ").trim(),
    });
    eprintln!("{line}");
}

fn run(cli: Cli) -> polytext::Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Labelgen(a) => commands::labelgen(a, config, &mut out),
        Command::Loss(a) => commands::loss(a, config, &mut out),
        Command::Gradcheck(a) => commands::gradcheck(a, config, &mut out),
        Command::Fit(a) => commands::fit(a, config, &mut out),
        Command::Ablation(a) => commands::ablation(a, config, &mut out),
        Command::Decode(a) => commands::decode(a, config, &mut out),
        Command::Nms(a) => commands::nms(a, config, &mut out),
        Command::Eval(a) => commands::eval(a, config, &mut out),
        Command::Render(a) => commands::render(a, config, &mut out),
    }?;
    out.flush().map_err(|e| polytext::Error::InvalidInput(format!("stdout: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or_default();
            fail("usage", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            fail(e.kind(), &e.to_string());
            ExitCode::from(1)
        }
    }
}
