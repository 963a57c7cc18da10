//! `wqed`: single- and two-photon scattering off a cavity in a chiral
//! waveguide, with a brute-force oracle and an acceptance suite.

mod commands;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::Value;

use commands::*;
use io::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "wqed", version, about = "Photon scattering off a cavity in a chiral waveguide")]
struct Cli {
    /// Interpret model frequencies as written, or rescale them by Γ.
    #[arg(long, value_enum, global = true, default_value_t = Units::Absolute)]
    units: Units,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Complex eigenvalues of the effective Hamiltonian per sector.
    Spectrum(SpectrumArgs),
    /// Single-photon amplitudes t_{μν}(k) on a uniform k grid.
    Single(SingleArgs),
    /// Two-photon kernel terms at one point.
    Kernel(KernelArgs),
    /// Scatter a two-photon in-state.
    Scatter(ScatterArgs),
    /// ‖T ψ_in‖ against pulse separation.
    Tnorm(TnormArgs),
    /// Red-first and blue-first two-colour experiment on a Λ atom.
    Fig1(Fig1Args),
    /// Brute-force time evolution on a discretized waveguide.
    Oracle(OracleArgs),
    /// Compare a scatter result with an oracle run.
    Compare(CompareArgs),
    /// Run acceptance criteria.
    Acceptance(AcceptanceArgs),
    /// Run one command described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

/// `run --config` file: `{"units": ..., "command": ..., "args": {...}}`.
/// Relative paths inside `args` are resolved against the config directory.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    units: Units,
    command: String,
    #[serde(default)]
    args: Value,
}

const PATH_KEYS: &[&str] = &["model", "in", "out", "analytic", "oracle"];

fn resolve_paths(args: &mut Value, base: &Path) {
    if let Value::Object(map) = args {
        for key in PATH_KEYS {
            if let Some(Value::String(s)) = map.get_mut(*key) {
                let p = Path::new(s.as_str());
                if p.is_relative() {
                    *s = base.join(p).to_string_lossy().into_owned();
                }
            }
        }
    }
}

fn parse<T: serde::de::DeserializeOwned>(v: Value, cmd: &str) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::Invalid(format!("config args for {cmd}: {e}")))
}

fn run_config(path: &Path) -> CliResult<()> {
    let cfg: ConfigFile = io::read_json(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut args = if cfg.args.is_null() { Value::Object(Default::default()) } else { cfg.args };
    resolve_paths(&mut args, &base);
    let cmd = match cfg.command.as_str() {
        "spectrum" => Command::Spectrum(parse(args, "spectrum")?),
        "single" => Command::Single(parse(args, "single")?),
        "kernel" => Command::Kernel(parse(args, "kernel")?),
        "scatter" => Command::Scatter(parse(args, "scatter")?),
        "tnorm" => Command::Tnorm(parse(args, "tnorm")?),
        "fig1" => Command::Fig1(parse(args, "fig1")?),
        "oracle" => Command::Oracle(parse(args, "oracle")?),
        "compare" => Command::Compare(parse(args, "compare")?),
        "acceptance" => Command::Acceptance(parse(args, "acceptance")?),
        other => return Err(CliError::Invalid(format!("unknown command {other:?} in {}", path.display()))),
    };
    dispatch(cmd, cfg.units)
}

fn dispatch(cmd: Command, units: Units) -> CliResult<()> {
    match cmd {
        Command::Spectrum(a) => spectrum(&a, units),
        Command::Single(a) => single(&a, units),
        Command::Kernel(a) => kernel(&a, units),
        Command::Scatter(a) => scatter(&a, units),
        Command::Tnorm(a) => tnorm(&a, units),
        Command::Fig1(a) => fig1(&a, units),
        Command::Oracle(a) => run_oracle(&a, units),
        Command::Compare(a) => compare(&a),
        Command::Acceptance(a) => run_acceptance(&a),
        Command::Run { config } => run_config(&config),
    }
}

fn init_threads() -> CliResult<()> {
    if let Ok(s) = std::env::var("WQED_THREADS") {
        let n: usize = s.trim().parse().map_err(|_| CliError::Invalid(format!("WQED_THREADS={s:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| dispatch(cli.command, cli.units));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.kind(), "message": e.message() });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
