use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clockinterf_cli::{error, Format, Mode, RunOptions};

#[derive(Parser)]
#[command(name = "clockinterf", version, about = "Clock interferometry simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Phase scan of one Ramsey sequence.
    Fringe(RunArgs),
    /// Visibility against interrogation time.
    Visibility(RunArgs),
    /// Beat of unshifted and redshifted clocks.
    RedshiftCompare(RunArgs),
    /// Null-shift stacking over many modulation periods.
    Stack(RunArgs),
    /// Replicated shot-noise runs.
    Montecarlo(RunArgs),
    /// Check output digests against a manifest.
    Verify { manifest: PathBuf },
    /// Re-run the configuration recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn run_mode(mode: Mode, a: RunArgs) -> Result<(), clockinterf_cli::CliError> {
    let opts = RunOptions {
        out: a.out,
        seed: a.seed,
        threads: a.threads,
        format: a.format,
    };
    let m = clockinterf_cli::run_from_file(mode, &a.config, &opts)?;
    for o in &m.outputs {
        println!("{}  {}", o.sha256, o.file);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fringe(a) => run_mode(Mode::Fringe, a),
        Command::Visibility(a) => run_mode(Mode::Visibility, a),
        Command::RedshiftCompare(a) => run_mode(Mode::RedshiftCompare, a),
        Command::Stack(a) => run_mode(Mode::Stack, a),
        Command::Montecarlo(a) => run_mode(Mode::Montecarlo, a),
        Command::Verify { manifest } => clockinterf_cli::verify_manifest(&manifest).map(|m| {
            println!("ok: {} files match", m.outputs.len());
        }),
        Command::Replay {
            manifest,
            out,
            threads,
        } => clockinterf_cli::replay(&manifest, out, threads).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::from(error::EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
