use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use entropy_cli::{emit_report, exit, run_pipeline, validate_file, InputError, PipelineSpec, Stage, OUT_DIR_ENV};

/// Entropy construction and verification pipelines.
#[derive(Debug, Parser)]
#[command(name = "entropy-engine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a pipeline and write its report bundle.
    Run {
        spec: PathBuf,
        /// Output directory (overridden by ENTROPY_ENGINE_OUT when set).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replaces the spec's stage list; repeat for several stages.
        #[arg(long = "stage", value_parser = parse_stage)]
        stages: Vec<Stage>,
    },
    /// Parse and lint a pipeline, relation, oracle, model or graph file.
    Validate { file: PathBuf },
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse().map_err(|e: InputError| e.to_string())
}

fn out_dir(flag: Option<PathBuf>) -> Result<PathBuf, InputError> {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => Ok(PathBuf::from(v)),
        _ => flag.ok_or_else(|| InputError::Invalid(format!("--out is required unless {OUT_DIR_ENV} is set"))),
    }
}

fn run(spec: PathBuf, out: Option<PathBuf>, seed: Option<u64>, stages: Vec<Stage>) -> Result<i32, InputError> {
    let out = out_dir(out)?;
    let mut spec = PipelineSpec::load(&spec)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    if !stages.is_empty() {
        spec.stages = stages;
    }
    let bundle = run_pipeline(&spec)?;
    emit_report(&bundle, &out)?;
    for s in &bundle.report.stages {
        println!("{:<20} {:?} ({} violations)", s.stage.name(), s.status, s.violations);
        if let Some(e) = &s.error {
            println!("  error: {e}");
        }
    }
    println!("report written to {}", out.display());
    Ok(bundle.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::INPUT_ERROR as u8 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run {
            spec,
            out,
            seed,
            stages,
        } => run(spec, out, seed, stages),
        Command::Validate { file } => validate_file(&file).map(|kind| {
            println!("{}: valid {} file", file.display(), kind.name());
            exit::OK
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::INPUT_ERROR as u8)
        }
    }
}
