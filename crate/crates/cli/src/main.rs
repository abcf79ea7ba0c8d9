//! `magpol`: command-line front end for the driven-Kerr magnon-polariton model.
//!
//! Exit codes: 0 success, 2 bad configuration / usage / out-of-domain input /
//! unparseable data, 3 I/O failure, 4 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{AxisName, RunConfig};

#[derive(Parser)]
#[command(name = "magpol", version, about = "Bistability and hysteresis of Kerr magnon-polaritons")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Print results as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Validate the configuration, print it with defaults filled in, and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kerr coefficient of the configured material.
    Kerr {
        /// Crystal axis along the bias field; overrides `material.axis`.
        #[arg(long, value_enum)]
        axis: Option<AxisName>,
    },
    /// Linear transmission map over a magnon-frequency (or coil-current) grid.
    Spectrum,
    /// Forward/backward quasi-static scan and its hysteresis loop.
    Sweep,
    /// Time-domain integration of the two-mode equations.
    Simulate,
    /// Fit the Kerr coupling to measured shifts.
    Fit {
        /// Shift data CSV; overrides `fit.data`.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
}

impl Command {
    fn block(&self) -> Option<&'static str> {
        match self {
            Command::Kerr { .. } => None,
            Command::Spectrum => Some("spectrum"),
            Command::Sweep => Some("sweep"),
            Command::Simulate => Some("simulate"),
            Command::Fit { .. } => Some("fit"),
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Io(String),
    Numerical(String),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(msg.into())
    }

    pub fn missing(block: &str) -> Self {
        Failure::Config(format!("missing required `{block}` block"))
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) | Failure::Io(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<magpol_core::Error> for Failure {
    fn from(e: magpol_core::Error) -> Self {
        use magpol_core::Error as E;
        match e {
            E::Io(_) => Failure::Io(e.to_string()),
            E::Numerical(_) | E::StepUnderflow { .. } => Failure::Numerical(e.to_string()),
            E::Domain(_) | E::Usage(_) | E::Parse { .. } => Failure::Config(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::config("--config is required"))?;
    let mut cfg = RunConfig::load(path)?;

    let present = cfg.task_blocks();
    if present.len() > 1 {
        return Err(Failure::config(format!("exactly one task block per run, found {}", present.join(", "))));
    }
    if let Some(block) = cli.command.block() {
        if present != [block] {
            return Err(Failure::missing(block));
        }
    }

    cfg.normalize()?;
    if let Some(dir) = cli.out {
        cfg.output.dir = dir;
    }
    match &cli.command {
        Command::Kerr { axis: Some(a) } => {
            if let Some(m) = &mut cfg.material {
                m.axis = *a;
            }
        }
        Command::Fit { data: Some(d) } => {
            if let Some(f) = &mut cfg.fit {
                f.data = Some(d.clone());
            }
        }
        _ => {}
    }

    let dry = cli.dry_run;
    let report = match cli.command {
        Command::Kerr { axis } => commands::kerr(&cfg, axis, dry)?,
        Command::Spectrum => commands::spectrum(&cfg, dry)?,
        Command::Sweep => commands::sweep(&cfg, dry)?,
        Command::Simulate => commands::simulate(&cfg, dry)?,
        Command::Fit { .. } => commands::fit(&cfg, dry)?,
    };
    match report {
        None => {
            let echo = serde_json::to_value(&cfg).map_err(|e| Failure::config(e.to_string()))?;
            print!("{}", output::to_pretty(&echo));
        }
        Some(r) if cli.json => print!("{}", output::to_pretty(&r.json)),
        Some(r) => println!("{}", r.text),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("magpol: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
