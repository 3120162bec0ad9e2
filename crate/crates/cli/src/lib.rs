//! Command-line harness: run configuration, synthetic scenarios and the
//! subcommands behind the `ldesmarket` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod synth;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use ldesmarket::accreditation::Paradigm;
use ldesmarket::domain::RunMode;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ldesmarket", version, about = "Stochastic equilibrium market model with long-duration storage")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; the bundled desk case when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "LDESMARKET_OUT")]
    pub out: Option<PathBuf>,
    /// Seed of the synthetic scenario generator.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run mode for `solve` (EOM_VOLL, EOM_PC, E_PLUS_CM, DISPATCH_FIXED_MIX)
    /// or accreditation paradigm (UNCONSTRAINED, CHARGING_FIXED,
    /// CHARGING_AND_DISCHARGING_FIXED).
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Worker threads; 0 for one per core.
    #[arg(long, global = true, env = "LDESMARKET_THREADS")]
    pub threads: Option<usize>,
    /// Relative solver tolerance.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the configuration and every input file.
    Validate,
    /// Solve one market run.
    Solve,
    /// Accredit the benchmark mix and fit storage credit curves.
    Accredit,
    /// Accredit, then build the capacity demand curve.
    Calibrate,
    /// Run the four market designs end to end.
    Suite,
    /// Run the suite, then rerun the capacity market at scaled credits.
    Sweep,
    /// Write the synthetic scenario set.
    Synth,
}

const DEFAULT_OUT: &str = "out";

impl Cli {
    /// The configuration with command-line overrides applied.
    pub fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::desk(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(t) = self.tolerance {
            cfg.solver.tolerance = t;
        }
        if let Some(m) = &self.mode {
            if let Ok(mode) = m.parse::<RunMode>() {
                cfg.design.run_mode = mode;
            } else if let Ok(p) = m.parse::<Paradigm>() {
                cfg.accreditation.paradigm = p;
            } else {
                return Err(CliError::config(format!("--mode '{m}' is neither a run mode nor a paradigm")));
            }
        }
        if let Some(t) = self.threads {
            cfg.threads = Some(t);
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        Ok(cfg)
    }
}

fn out_dir(cfg: Option<&RunConfig>, cli: Option<&Cli>) -> PathBuf {
    cli.and_then(|c| c.out.clone())
        .or_else(|| cfg.and_then(|c| c.out.clone()))
        .or_else(|| std::env::var_os("LDESMARKET_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn dispatch(command: Command, cfg: &RunConfig, out: &std::path::Path) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::Validate => commands::validate(cfg, out),
        Command::Solve => commands::solve(cfg, out),
        Command::Accredit => commands::accredit(cfg, out),
        Command::Calibrate => commands::calibrate(cfg, out),
        Command::Suite => commands::suite(cfg, out),
        Command::Sweep => commands::sweep(cfg, out),
        Command::Synth => commands::synth(cfg, out),
    }
}

fn report(e: &CliError, out: &std::path::Path) -> i32 {
    eprintln!("error: {e}");
    for d in &e.diagnostics {
        eprintln!("  {}: {}", d.location, d.message);
    }
    if let Err(io) = e.write_to(out) {
        eprintln!("cannot write {}: {io}", out.join(error::ERROR_FILE).display());
    }
    e.exit_code()
}

/// Parses `args` and runs the subcommand; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let _ = e.print();
            let err = CliError::config(e.kind().to_string());
            return report(&err, &out_dir(None, None));
        }
    };
    let cfg = match cli.config() {
        Ok(c) => c,
        Err(e) => return report(&e, &out_dir(None, Some(&cli))),
    };
    let out = out_dir(Some(&cfg), Some(&cli));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return report(&CliError::config(format!("thread pool: {e}")), &out),
    };
    match pool.install(|| dispatch(cli.command, &cfg, &out)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => report(&e, &out),
    }
}
