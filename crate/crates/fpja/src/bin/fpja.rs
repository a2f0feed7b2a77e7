//! Command-line frontend: config-driven, reproducible analyses of the
//! three-mode nonreciprocal phase-sensitive amplifier.
//!
//! Exit codes: 0 success, 2 configuration error, 3 physics-domain error
//! (instability, unreachable target, out-of-regime request), 4 numerical
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fpja::commands::{run_command, Command};
use fpja::config::load_config_with_overrides;
use fpja::ErrorKind;

#[derive(Parser)]
#[command(
    name = "fpja",
    version,
    about = "Simulate a three-mode, four-pump nonreciprocal phase-sensitive amplifier"
)]
struct Cli {
    #[command(subcommand)]
    command: CommandArg,
}

#[derive(Args)]
struct RunArgs {
    /// Device configuration file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output data file; a run manifest is written next to it
    #[arg(long)]
    out: PathBuf,
    /// Dotted-path config overrides, e.g. --override pumps.beta_bb.mag=2.0
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum CommandArg {
    /// Scattering parameters versus drive detuning
    Sweep(RunArgs),
    /// Quadrature gain and noise floor versus LO phase
    Quadrature(RunArgs),
    /// Added noise and measurement efficiency versus quadrature gain
    Noise(RunArgs),
    /// Stability map over direct gain and loop phase
    Stability(RunArgs),
    /// Run the four-step programming procedure
    Tune(RunArgs),
    /// Closed-form performance bounds from the mode linewidths
    Bounds(RunArgs),
}

impl CommandArg {
    fn split(self) -> (Command, RunArgs) {
        match self {
            CommandArg::Sweep(a) => (Command::Sweep, a),
            CommandArg::Quadrature(a) => (Command::Quadrature, a),
            CommandArg::Noise(a) => (Command::Noise, a),
            CommandArg::Stability(a) => (Command::Stability, a),
            CommandArg::Tune(a) => (Command::Tune, a),
            CommandArg::Bounds(a) => (Command::Bounds, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = cli.command.split();
    let cfg = match load_config_with_overrides(&args.config, &args.overrides) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    match run_command(cmd, &cfg, &args.out) {
        Ok(out) => {
            eprintln!(
                "wrote {} rows to {} (manifest {})",
                out.rows,
                out.data_path.display(),
                out.manifest_path.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &fpja::Error) -> ExitCode {
    eprintln!("error: category={} message={e}", e.category());
    match e.kind() {
        ErrorKind::Config => ExitCode::from(2),
        ErrorKind::Physics => ExitCode::from(3),
        ErrorKind::Numerical => ExitCode::from(4),
    }
}
