//! Command-line harness: exact enumerations, Monte Carlo sampling, and
//! structural audits, with self-describing CSV/JSON outputs.
//!
//! Exit codes: 0 on success, 1 when a checked invariant fails on a concrete
//! instance, 2 on usage or configuration errors.

mod config;
mod error;
mod output;
mod runs;

use std::process::ExitCode;

use clap::Parser;

use config::{CommonArgs, Resolved};

#[derive(Parser)]
#[command(
    name = "hardcore",
    version,
    about = "Hard-core lattice gas on discrete tori: exact ensembles, samplers, and audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Exact rational occupation probabilities by exhaustive enumeration.
    Exact(CommonArgs),
    /// Monte Carlo occupation estimates, optionally as even/odd gap scans.
    Sample(CommonArgs),
    /// Structural audit of the island carved around the probe vertex, over
    /// every cutting configuration.
    ContourAudit(CommonArgs),
    /// Exact defect audit of the configuration flow.
    FlowAudit(CommonArgs),
    /// Audit of the island approximation pipeline.
    ApproxAudit(CommonArgs),
    /// Lattice-ball counting tables and boundary bounds.
    Iso(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Exact(_) => "exact",
            Command::Sample(_) => "sample",
            Command::ContourAudit(_) => "contour-audit",
            Command::FlowAudit(_) => "flow-audit",
            Command::ApproxAudit(_) => "approx-audit",
            Command::Iso(_) => "iso",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Exact(args)
            | Command::Sample(args)
            | Command::ContourAudit(args)
            | Command::FlowAudit(args)
            | Command::ApproxAudit(args)
            | Command::Iso(args) => args,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let resolved = match Resolved::from_args(name, cli.command.args()) {
        Ok(resolved) => resolved,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let outcome = match name {
        "exact" => runs::exact(&resolved),
        "sample" => runs::sample(&resolved),
        "contour-audit" => runs::contour_audit(&resolved),
        "flow-audit" => runs::flow_audit(&resolved),
        "approx-audit" => runs::approx_audit(&resolved),
        "iso" => runs::iso(&resolved),
        _ => unreachable!(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            if e.exit_code() == 1 {
                eprintln!("replay config: {}", resolved.echo());
            }
            ExitCode::from(e.exit_code())
        }
    }
}
