use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use cellfree::baselines::Baseline;
use cellfree::config::load_config_file;
use cellfree::metrics::{run, Algo, Endpoint};
use cellfree::protocol::{listen, serve, Session};
use cellfree::validate::validate_outage;

#[derive(Parser)]
#[command(name = "cellfree", version, about = "Cell-free UAV clustering environment and metric pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoName {
    Closest,
    Opportunistic,
    External,
}

#[derive(Subcommand)]
enum Command {
    /// Run an episode loop and write the metric CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        algo: AlgoName,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Wait for an external agent on host:port.
        #[arg(long, conflicts_with = "connect")]
        listen: Option<String>,
        /// Connect to an external agent waiting on host:port.
        #[arg(long)]
        connect: Option<String>,
    },
    /// Serve the environment over the line protocol (stdin/stdout by default).
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        listen: Option<String>,
    },
    /// Compare the closed-form outage with Monte-Carlo estimates.
    ValidateOutage {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            config,
            algo,
            steps,
            seed,
            out,
            listen,
            connect,
        } => {
            let cfg = load_config_file(&config)?;
            let algo = match algo {
                AlgoName::Closest => Algo::Baseline(Baseline::Closest),
                AlgoName::Opportunistic => Algo::Baseline(Baseline::Opportunistic(cfg.opportunistic.clone())),
                AlgoName::External => match (listen, connect) {
                    (Some(addr), None) => Algo::External(Endpoint::Listen(addr)),
                    (None, Some(addr)) => Algo::External(Endpoint::Connect(addr)),
                    _ => bail!("--algo external needs --listen or --connect"),
                },
            };
            let log = run(&cfg, &algo, steps, seed, &out).context("run failed")?;
            eprintln!(
                "wrote {} steps ({} user samples) to {}",
                log.steps.len(),
                log.users.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { config, listen: addr } => {
            let cfg = load_config_file(&config)?;
            match addr {
                Some(addr) => listen(addr, cfg)?,
                None => {
                    let mut session = Session::new(cfg);
                    serve(io::stdin().lock(), io::stdout().lock(), &mut session)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateOutage { cases, samples, seed } => {
            let start = Instant::now();
            let report = validate_outage(cases, samples, seed)?;
            let passed = report.cases.iter().filter(|c| c.passes()).count();
            println!("cases: {cases}, samples per case: {samples}, seed: {seed}");
            println!("max |closed-form - mc|: {:.3e}", report.max_deviation());
            println!("worst (deviation - tolerance): {:.3e}", report.worst_margin());
            println!("passed: {passed}/{cases} in {:.1?}", start.elapsed());
            Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
