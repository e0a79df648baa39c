use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::{CommonArgs, Settings};
use output::RunDir;

/// Experiments on Gaussian random series over Bessel eigenbases.
#[derive(Parser, Debug)]
#[command(name = "lpseries", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Table of z_n, beta_n, sup norms and L^p norms of the first modes.
    Basis,
    /// L^p norms of many modes by the cumulative sweep, with the delta bound.
    Norms,
    /// Draw truncated series and dump the fields.
    Sample,
    /// Deterministic E|F^N|_p^p, optionally against Monte Carlo.
    ExpectedNorm,
    /// Convergent / Divergent / Inconclusive verdict for one p.
    Classify,
    /// Bracket the critical exponent.
    Pcr,
    /// Estimate alpha*(c) and the divergence bound 2d/alpha*.
    AlphaStar,
    /// Sparse sequence defeating L^p convergence.
    Adversarial,
    /// Exponential moments of |F^N|_p^2.
    Fernique,
    /// Gibbs weights on the disc and their stability in N.
    Gibbs,
    /// Run the acceptance checks.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::Norms => "norms",
            Command::Sample => "sample",
            Command::ExpectedNorm => "expected-norm",
            Command::Classify => "classify",
            Command::Pcr => "pcr",
            Command::AlphaStar => "alpha-star",
            Command::Adversarial => "adversarial",
            Command::Fernique => "fernique",
            Command::Gibbs => "gibbs",
            Command::Verify => "verify",
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let workers = cli.common.workers;
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    let settings = Settings::resolve(&cli.common)?;
    let out = settings.out_dir(cli.command.name());
    let dir = RunDir::create(&out)?;
    let s = &settings;
    match cli.command {
        Command::Basis => commands::basis(s, dir)?,
        Command::Norms => commands::norms(s, dir)?,
        Command::Sample => commands::sample(s, dir)?,
        Command::ExpectedNorm => commands::expected_norm(s, dir)?,
        Command::Classify => commands::classify(s, dir)?,
        Command::Pcr => commands::pcr(s, dir)?,
        Command::AlphaStar => commands::alpha_star_cmd(s, dir)?,
        Command::Adversarial => commands::adversarial(s, dir)?,
        Command::Fernique => commands::fernique(s, dir)?,
        Command::Gibbs => commands::gibbs(s, dir)?,
        Command::Verify => return commands::verify(s, dir),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
