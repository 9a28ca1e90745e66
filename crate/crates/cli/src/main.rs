use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multiprobe::config::{Format, PartialConfig, SweepConfig};
use multiprobe::output::{emit, Schema};
use multiprobe::validate::{self, Context, Scale};
use multiprobe::{census, sweep, CliError, Result};

#[derive(Parser)]
#[command(name = "multiprobe", version, about = "Error-probability bounds for multi-channel pattern discrimination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower and upper error-probability bounds over a parameter grid.
    Bounds(ConfigArgs),
    /// Histogram of pairwise output fidelities.
    Census(ConfigArgs),
    /// Run the oracle and invariant suites.
    Validate {
        #[arg(long, default_value = "quick")]
        scale: String,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "jsonl")]
        format: String,
        /// Corrupt the symplectic form used by the bona fide suite.
        #[arg(long, hide = true)]
        corrupt_omega: bool,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML file with the same keys as the flags; its values win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
    /// pure-loss, additive-noise or thermal.
    #[arg(long)]
    family: Option<String>,
    /// Background channel: transmissivity (loss, thermal) or noise (additive).
    #[arg(long)]
    background: Option<f64>,
    /// Target channel, same units as `--background`.
    #[arg(long)]
    target: Option<f64>,
    /// Thermal noise variance of both channels (thermal family only).
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    /// full, cpf:K, bcpf:K1,K2,... or file:PATH.
    #[arg(long)]
    space: Option<String>,
    /// Preset (full-ghz, tmsv-disjoint, tmsv-hybrid, tmsv-disjoint-idler, nn, all-pairs,
    /// idler-full, classical) or a partition such as `12|34`, `1*|2*` or `12|23|31`.
    #[arg(long)]
    probe: Option<String>,
    /// Squeezing `mu = N_S + 1/2`.
    #[arg(long, conflicts_with = "ns")]
    mu: Option<f64>,
    /// Mean photons per mode `N_S`.
    #[arg(long)]
    ns: Option<f64>,
    /// Probe copies `M`.
    #[arg(long, conflicts_with = "mbar")]
    copies: Option<f64>,
    /// Average channel use `M̄`.
    #[arg(long)]
    mbar: Option<f64>,
    /// `PARAM=START:STOP:STEPS[:log]`; repeat for a product grid, first varies slowest.
    #[arg(long)]
    grid: Vec<String>,
    /// Add the classical benchmark at equal `M̄` and the guaranteed advantage.
    #[arg(long)]
    compare: bool,
    /// Significant digits of census buckets.
    #[arg(long)]
    buckets: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long)]
    format: Option<String>,
}

impl ConfigArgs {
    fn resolve(self, need_resource: bool) -> Result<SweepConfig> {
        let flags = PartialConfig {
            family: self.family,
            background: self.background,
            target: self.target,
            eps: self.eps,
            m: self.m,
            space: self.space,
            probe: self.probe,
            mu: self.mu,
            ns: self.ns,
            copies: self.copies,
            mbar: self.mbar,
            grid: (!self.grid.is_empty()).then_some(self.grid),
            compare: self.compare.then_some(true),
            buckets: self.buckets,
            out: self.out,
            format: self.format,
        };
        let merged = match &self.config {
            Some(path) => {
                let (merged, warnings) = PartialConfig::merge(PartialConfig::load(path)?, flags);
                for w in warnings {
                    eprintln!("warning: {w}");
                }
                merged
            }
            None => flags,
        };
        SweepConfig::resolve(merged, need_resource)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bounds(args) => {
            let config = args.resolve(true)?;
            warn_degenerate(&config);
            let rows = sweep::run(&config)?;
            let schema =
                Schema { name: "bounds", version: sweep::BOUNDS_SCHEMA_VERSION, columns: &sweep::BOUNDS_COLUMNS };
            emit(config.out.as_deref(), config.format, schema, &rows)
        }
        Command::Census(args) => {
            let config = args.resolve(false)?;
            warn_degenerate(&config);
            let rows = census::run(&config)?;
            let schema =
                Schema { name: "census", version: census::CENSUS_SCHEMA_VERSION, columns: &census::CENSUS_COLUMNS };
            emit(config.out.as_deref(), config.format, schema, &rows)
        }
        Command::Validate { scale, out, format, corrupt_omega } => {
            let scale: Scale = scale.parse()?;
            let format: Format = format.parse()?;
            let reports = validate::run(scale, &Context { corrupt_omega });
            let schema = Schema { name: "validate", version: 1, columns: &VALIDATE_COLUMNS };
            emit(out.as_deref(), format, schema, &reports)?;
            let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.suite).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Validation(failed.join(", ")))
            }
        }
    }
}

const VALIDATE_COLUMNS: [&str; 6] = ["suite", "passed", "checks", "max_deviation", "tolerance", "detail"];

fn warn_degenerate(config: &SweepConfig) {
    if config.background.is_some() && config.background == config.target {
        eprintln!("warning: background and target channels coincide; every fidelity is 1");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
