//! `stargraph`: resonance scans, scattering, convergence studies and
//! approximation panels from a JSON experiment config.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
//! failures.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand as ClapSubcommand};

use config::{ExperimentConfig, Subcommand};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<stargraph::Error> for Failure {
    fn from(e: stargraph::Error) -> Self {
        match e {
            stargraph::Error::InvalidInput(_) | stargraph::Error::Json(_) => Failure::Config(e.to_string()),
            e => Failure::Numerical(e.to_string()),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "stargraph", version, about = "Singularly scaled potentials on star graphs")]
struct Cli {
    /// experiment config (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory, overrides `out` in the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// overrides `seed` in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "STARGRAPH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand, Clone, Copy)]
enum Command {
    /// resonant coupling constants in `alpha_range`
    Resonances,
    /// `S_eps(k)` against the limit scattering matrix
    Scatter,
    /// resolvent gap study and rate fit
    Converge,
    /// approximation inequalities on a random source panel
    Approx,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cmd = match cli.command {
        Command::Resonances => Subcommand::Resonances,
        Command::Scatter => Subcommand::Scatter,
        Command::Converge => Subcommand::Converge,
        Command::Approx => Subcommand::Approx,
    };
    let path = cli.config.ok_or_else(|| Failure::Config("--config <path> is required".into()))?;
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    cfg.validate(cmd)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("stargraph-out"));
    std::fs::create_dir_all(&out).map_err(|e| Failure::Config(format!("{}: {e}", out.display())))?;
    let written = match cmd {
        Subcommand::Resonances => commands::resonances(&cfg, &out)?,
        Subcommand::Scatter => commands::scatter(&cfg, &out)?,
        Subcommand::Converge => commands::converge(&cfg, &out)?,
        Subcommand::Approx => commands::approx(&cfg, &out)?,
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stargraph: {e}");
            ExitCode::from(e.code())
        }
    }
}
