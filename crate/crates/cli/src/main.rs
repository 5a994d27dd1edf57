//! `helicity` command-line front end.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 configuration or
//! usage error, 3 a numerical gate rejected the input.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "helicity", version, about = "Helicity experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides the config's "output" entry.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads. Defaults to the hardware parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Grid spacing override.
    #[arg(long = "h")]
    h: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Writhe of one closed curve.
    Writhe(Common),
    /// Gauss linking number of two closed curves.
    Link(Common),
    /// Curl-inverse check of the Biot-Savart operator on a sampled field.
    Bs(Common),
    /// Helicity of a sampled field.
    Helicity(Common),
    /// Helicity difference of u = BS(w) + harmonic part, in three forms.
    #[command(name = "delta-h")]
    DeltaH(Common),
    /// Harmonic-knot basis, Gram matrix and field coordinates on tori.
    Hodge(Common),
    /// Conservation sweep of a transported vorticity field (CSV).
    Conserve(Common),
    /// Potential-helicity rate against an Euler step.
    #[command(name = "mhd-rate")]
    MhdRate(Common),
    /// Beltrami identities of the spheromak.
    #[command(name = "spheromak-check")]
    SpheromakCheck(Common),
}

impl Command {
    fn split(self) -> (&'static str, Common, fn(ExperimentConfig) -> Result<Outcome, CliError>) {
        match self {
            Command::Writhe(c) => ("writhe", c, commands::writhe_cmd),
            Command::Link(c) => ("link", c, commands::link_cmd),
            Command::Bs(c) => ("bs", c, commands::bs_cmd),
            Command::Helicity(c) => ("helicity", c, commands::helicity_cmd),
            Command::DeltaH(c) => ("delta-h", c, commands::delta_h_cmd),
            Command::Hodge(c) => ("hodge", c, commands::hodge_cmd),
            Command::Conserve(c) => ("conserve", c, commands::conserve_cmd),
            Command::MhdRate(c) => ("mhd-rate", c, commands::mhd_rate_cmd),
            Command::SpheromakCheck(c) => ("spheromak-check", c, commands::spheromak_cmd),
        }
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    let (name, common, exec) = cli.command.split();
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(h) = common.h {
        match cfg.grid.as_mut() {
            Some(g) => g.h = h,
            None => return Err(CliError::Config("--h given but the config has no grid".into())),
        }
    }
    let explicit_out = common.out.clone().or_else(|| cfg.output.clone().map(PathBuf::from));
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    log::info!("running {name} with {} worker threads", rayon::current_num_threads());

    let outcome = exec(cfg)?;
    let path = explicit_out.unwrap_or_else(|| PathBuf::from(format!("{name}.{}", outcome.extension)));
    std::fs::write(&path, outcome.body.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(outcome.summary)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
