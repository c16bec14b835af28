//! `tradeoff`: batch front end for ratio tables, figure simulations, model
//! fits and market analyses.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver or convergence failure.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::{FitRunConfig, MarketKind, RatioConfig};
use input::DomainArg;

#[derive(Parser)]
#[command(
    name = "tradeoff",
    version,
    about = "Comparison-complexity choice engine"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults apply to omitted fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file, written atomically.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Value-dissimilarity ratios for each problem in a dataset.
    Ratio {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        domain: DomainArg,
    },
    /// Simulated valuation or choice data behind one figure.
    SimulateFigure {
        /// ce-pe-reversal, pve-te-reversal, pwf, pwf-pe, discount-pve,
        /// discount-te, hyperbolic-appendix or decoy-cases.
        figure: String,
    },
    /// Fit model families to a choice dataset.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        domain: DomainArg,
        /// Comma-separated family names, e.g. edu,qdu,hdu,cpf-complexity.
        /// Added to any families listed in the config.
        #[arg(long, value_delimiter = ',')]
        families: Vec<String>,
        /// Irreducible loss used for the completeness column.
        #[arg(long)]
        e_star: Option<f64>,
    },
    /// Equilibria of the pricing and location games.
    Market {
        #[arg(value_enum)]
        kind: MarketKind,
    },
}

fn run(cli: Cli) -> Result<()> {
    let Common {
        config,
        seed,
        out,
        threads,
    } = cli.common;
    if let Some(n) = threads {
        set_threads(n)?;
    }
    let out = out.ok_or_else(|| anyhow::anyhow!("--out is required"))?;
    let config = config.as_deref();
    match cli.command {
        Command::Ratio { input, domain } => commands::ratio(
            &input,
            domain,
            commands::load_config::<RatioConfig>(config)?,
            seed,
            &out,
        ),
        Command::SimulateFigure { figure } => {
            commands::figure(&figure, commands::load_config(config)?, seed, &out)
        }
        Command::Fit {
            input,
            domain,
            families,
            e_star,
        } => {
            let mut cfg: FitRunConfig = commands::load_config(config)?;
            for name in &families {
                cfg.families.push(commands::family_from_name(name)?);
            }
            if e_star.is_some() {
                cfg.e_star = e_star;
            }
            commands::fit_cmd(&input, domain, cfg, seed, &out)
        }
        Command::Market { kind } => commands::market(kind, config, seed, &out),
    }
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) -> Result<()> {
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let solver = err
        .chain()
        .filter_map(|e| e.downcast_ref::<tradeoff_core::Error>())
        .any(tradeoff_core::Error::is_solver_failure);
    if solver {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
