//! Command-line front end: configuration, subcommand dispatch and serialization.
//!
//! Exit codes: 0 on success, 1 for invalid input, 2 when a computation fails
//! numerically (singularity, step underflow, quadrature non-convergence).

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use bjj_core::Error as CoreError;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{ConfigBuilder, ConfigError, Origin, RunConfig};
use crate::output::{write_report, Report};

#[derive(Debug, Parser)]
#[command(name = "bjj", version, about = "Driven Bose Josephson junction: simulation and chaos diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time series `t,z,phi,dzdt` (CSV).
    Simulate(RunArgs),
    /// Stroboscopic section `n,z,dzdt` sampled once per drive period (CSV).
    Poincare(RunArgs),
    /// Power spectrum `freq,power` of z(t) (CSV).
    Spectrum(RunArgs),
    /// Frequency-locking classification of the long-time attractor (JSON).
    Attractor(RunArgs),
    /// Melnikov function by quadrature and in closed form (JSON).
    Melnikov(RunArgs),
    /// Critical drive amplitude against frequency `omega,de1_critical,branch` (CSV).
    StabilityCurve(RunArgs),
    /// Effective potential scan `z,V` (CSV).
    Potential(RunArgs),
    /// Largest |z| gap between the reduced and the two-mode integration (JSON).
    Crosscheck(RunArgs),
    /// Regime of the unperturbed motion from the initial state (JSON).
    Classify(RunArgs),
    /// Largest Lyapunov exponent over `t_end` (JSON).
    Lyapunov(RunArgs),
    /// List the built-in figure presets.
    Presets,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Configuration file (`key=value` lines, or a previous output).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Start from a built-in preset; `--config` and flags override it.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Any configuration key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    de1: Option<String>,
    #[arg(long = "omega-pi", allow_hyphen_values = true)]
    omega_pi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    z0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    phi0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long = "n-periods", allow_hyphen_values = true)]
    n_periods: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    discard: Option<String>,
    #[arg(long = "t-end", allow_hyphen_values = true)]
    t_end: Option<String>,
    #[arg(long = "sample-dt", allow_hyphen_values = true)]
    sample_dt: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut builder = ConfigBuilder::new();
        if let Some(name) = &self.preset {
            let text = presets::find(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?;
            builder.apply_text(text, name)?;
        }
        if let Some(path) = &self.config {
            builder.apply_file(path)?;
        }
        for item in &self.set {
            let (key, value) = item.split_once('=').ok_or_else(|| ConfigError::Range {
                key: item.clone(),
                origin: Origin::CommandLine,
                reason: "expected --set KEY=VALUE".into(),
            })?;
            builder.set(key, value, Origin::CommandLine)?;
        }
        let flags = [
            ("de1", &self.de1),
            ("omega_pi", &self.omega_pi),
            ("eta", &self.eta),
            ("z0", &self.z0),
            ("phi0", &self.phi0),
            ("lambda", &self.lambda),
            ("n_periods", &self.n_periods),
            ("discard", &self.discard),
            ("t_end", &self.t_end),
            ("sample_dt", &self.sample_dt),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                builder.set(key, v, Origin::CommandLine)?;
            }
        }
        Ok(builder.build()?)
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(
                CoreError::Singularity { .. }
                | CoreError::NonFinite { .. }
                | CoreError::StepUnderflow { .. }
                | CoreError::Quadrature { .. },
            ) => 2,
            _ => 1,
        }
    }
}

fn execute(name: &str, args: &RunArgs, action: fn(&RunConfig) -> bjj_core::Result<Report>) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    let report = action(&cfg)?;
    let write = |out: &mut dyn Write| -> io::Result<()> {
        write_report(out, name, &cfg, &report)?;
        out.flush()
    };
    let (path, result) = match &args.out {
        Some(path) => (
            path.display().to_string(),
            File::create(path).and_then(|f| write(&mut BufWriter::new(f))),
        ),
        None => ("standard output".to_string(), write(&mut BufWriter::new(io::stdout().lock()))),
    };
    result.map_err(|source| CliError::Output { path, source })
}

fn list_presets() {
    for (name, text) in presets::PRESETS {
        println!("{name:<8} {}", presets::command_of(text).unwrap_or("-"));
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => execute("simulate", a, commands::simulate),
        Command::Poincare(a) => execute("poincare", a, commands::poincare),
        Command::Spectrum(a) => execute("spectrum", a, commands::spectrum),
        Command::Attractor(a) => execute("attractor", a, commands::attractor),
        Command::Melnikov(a) => execute("melnikov", a, commands::melnikov),
        Command::StabilityCurve(a) => execute("stability-curve", a, commands::stability),
        Command::Potential(a) => execute("potential", a, commands::potential),
        Command::Crosscheck(a) => execute("crosscheck", a, commands::crosscheck_run),
        Command::Classify(a) => execute("classify", a, commands::classify),
        Command::Lyapunov(a) => execute("lyapunov", a, commands::lyapunov),
        Command::Presets => {
            list_presets();
            Ok(())
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bjj: {e}");
            e.exit_code()
        }
    }
}
