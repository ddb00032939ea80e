use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swap_engine::cli;
use swap_engine::config::RunConfig;
use swap_engine::Error;

/// Two-qubit SWAP heat engine: closed forms, quantum-jump ensembles and
/// fluctuation-relation checks.
#[derive(Parser)]
#[command(name = "swapeng", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file, applied before the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<u64>,
    #[arg(long, global = true)]
    pulses: Option<usize>,
    /// Time between pulses.
    #[arg(long, global = true, conflicts_with = "tau2_relax_multiple")]
    tau2: Option<f64>,
    /// Time between pulses as a multiple of the relaxation time.
    #[arg(long, global = true)]
    tau2_relax_multiple: Option<f64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Write event logs for the first N trajectories.
    #[arg(long, global = true, value_name = "N")]
    emit_logs: Option<u64>,
    /// Print the JSON summary instead of the text report.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true)]
    beta1: Option<f64>,
    #[arg(long, global = true)]
    beta2: Option<f64>,
    #[arg(long, global = true)]
    omega1: Option<f64>,
    #[arg(long, global = true)]
    omega2: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// `iswap`, `swap[:p1,p2,p3,p4]` or `generic:a1,...,a15`.
    #[arg(long, global = true)]
    gate: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form energetics, regime and efficiency bounds.
    Analytic {
        /// Comma-separated beta2 values for an efficiency-at-maximum-power table.
        #[arg(long, value_delimiter = ',')]
        scan_eta_mp: Vec<f64>,
    },
    /// Run a trajectory ensemble and write histograms.
    Simulate,
    /// Work output at fixed operation time for several pulse counts.
    PowerScan {
        /// Comma-separated ascending pulse counts.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        /// Operation time in units of the relaxation time.
        #[arg(long)]
        t_op_relax: Option<f64>,
    },
    /// Search all two-qubit gates for the largest work output.
    OptGate {
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Reconstruct work from event logs.
    Analyze {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
}

fn build_config(c: &Common) -> Result<RunConfig, Error> {
    let mut rc = match &c.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| rc.set(k, &v));
    set("seed", c.seed.map(|v| v.to_string()))?;
    set("samples", c.samples.map(|v| v.to_string()))?;
    set("pulses", c.pulses.map(|v| v.to_string()))?;
    set("tau2", c.tau2.map(|v| v.to_string()))?;
    set("tau2_relax_multiple", c.tau2_relax_multiple.map(|v| v.to_string()))?;
    set("out_dir", c.out_dir.as_ref().map(|v| v.display().to_string()))?;
    set("emit_logs", c.emit_logs.map(|v| v.to_string()))?;
    set("beta1", c.beta1.map(|v| v.to_string()))?;
    set("beta2", c.beta2.map(|v| v.to_string()))?;
    set("omega1", c.omega1.map(|v| v.to_string()))?;
    set("omega2", c.omega2.map(|v| v.to_string()))?;
    set("gamma", c.gamma.map(|v| v.to_string()))?;
    set("gate", c.gate.clone())?;
    if c.json {
        rc.json = true;
    }
    Ok(rc)
}

fn run(cli: Cli) -> Result<String, Error> {
    let mut rc = build_config(&cli.common)?;
    match cli.command {
        Command::Analytic { scan_eta_mp } => cli::cmd_analytic(&rc, &scan_eta_mp),
        Command::Simulate => cli::cmd_simulate(&rc),
        Command::PowerScan { n_list, t_op_relax } => {
            if let Some(n) = n_list {
                rc.n_list = n;
            }
            if let Some(t) = t_op_relax {
                rc.t_op_relax = t;
            }
            cli::cmd_power_scan(&rc)
        }
        Command::OptGate { restarts } => {
            if let Some(r) = restarts {
                rc.restarts = r;
            }
            cli::cmd_opt_gate(&rc)
        }
        Command::Analyze { logs } => cli::cmd_analyze(&logs, &rc),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("swapeng: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
