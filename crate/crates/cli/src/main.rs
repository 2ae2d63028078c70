use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wsn_gossip_cli::{cmd_compare, cmd_run, cmd_spectra, cmd_sweep, CliError, Invocation, Settings, EXIT_CONFIG};

/// Duty-cycled gossip consensus experiments.
///
/// Every subcommand takes an optional flat `section.key = value` config
/// file; any key can be overridden with `--section.key value`.
#[derive(Parser)]
#[command(name = "wsn-gossip", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write its trace, metrics and spectrum.
    Run(Args),
    /// Run every topology x rule x seed combination in parallel.
    Sweep(Args),
    /// Proposed protocol against baselines on the same graph and x(0).
    /// Baseline configs (`--baseline FILE`, repeatable) are layered over
    /// CONFIG; the default baseline is pairwise gossip.
    Compare(Args),
    /// Consensus conditions of every rule's weight matrices, no simulation.
    Spectra(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Optional config file followed by `--key value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "CONFIG] [--KEY VALUE")]
    args: Vec<String>,
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run(a) => cmd_run(&Invocation::parse(&a.args)?.settings()?),
        Command::Sweep(a) => cmd_sweep(&Invocation::parse(&a.args)?.settings()?),
        Command::Spectra(a) => cmd_spectra(&Invocation::parse(&a.args)?.settings()?),
        Command::Compare(a) => {
            let mut inv = Invocation::parse(&a.args)?;
            let baselines = inv
                .take("baseline")
                .iter()
                .map(|p| Settings::load(p.as_ref()))
                .collect::<Result<Vec<_>, _>>()?;
            cmd_compare(&inv.settings()?, &baselines)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
